//! Text formats: edge lists, dense CSV matrices, problem files and the
//! CSV dumps written by the command-line tool.
//!
//! Floats are written with 17 significant digits so equal values give equal
//! bytes. Unreachable step counts are written as `inf`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use crate::broadcasting::{CentralitySet, Measure};
use crate::dynamics::{DirichletProblem, SusceptibilityProfile};
use crate::error::{Error, Result};
use crate::graph::{InfluenceSystem, StepMatrix};
use crate::influence::ScanMatrices;
use crate::sensitivity::SensitivityReport;
use crate::spectral::DirichletSpectrum;

pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

fn parse_error(source_name: &str, line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse { source_name: source_name.into(), line, column, message: message.into() }
}

/// Lines that carry data, with 1-based line numbers. Blank lines and lines
/// starting with `#` are skipped.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(k, l)| (k + 1, l)).filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('#')
    })
}

/// Splits a line on `sep` (whitespace when `None`), returning each trimmed
/// field with its 1-based column.
fn fields(line: &str, sep: Option<char>) -> Vec<(usize, &str)> {
    let offset = |f: &str| f.as_ptr() as usize - line.as_ptr() as usize;
    let raw: Vec<&str> = match sep {
        Some(c) => line.split(c).collect(),
        None => line.split_whitespace().collect(),
    };
    raw.into_iter()
        .map(|f| {
            let t = f.trim();
            let start = if t.is_empty() { offset(f) } else { offset(t) };
            (start + 1, t)
        })
        .collect()
}

/// Reads `i j [w]` lines with 0-based ids. Undirected lists give the
/// random-walk system of the symmetrised graph (weights, when present, are
/// symmetric conductances); directed lists are row-normalised as arcs
/// `i -> j`. The node count is one more than the largest id.
pub fn parse_edge_list(text: &str, source_name: &str, directed: bool) -> Result<InfluenceSystem> {
    let mut arcs = Vec::new();
    let mut weighted = false;
    for (line, content) in data_lines(text) {
        let f = fields(content, None);
        if f.len() < 2 || f.len() > 3 {
            return Err(parse_error(source_name, line, 1, format!("expected 'i j [w]', found {} fields", f.len())));
        }
        let id = |(col, s): (usize, &str)| {
            s.parse::<usize>().map_err(|_| parse_error(source_name, line, col, format!("invalid node id '{s}'")))
        };
        let i = id(f[0])?;
        let j = id(f[1])?;
        let w = match f.get(2) {
            Some(&(col, s)) => {
                weighted = true;
                let w: f64 =
                    s.parse().map_err(|_| parse_error(source_name, line, col, format!("invalid weight '{s}'")))?;
                if !(w.is_finite() && w > 0.0) {
                    return Err(parse_error(source_name, line, col, format!("weight must be positive, got {w}")));
                }
                w
            }
            None => 1.0,
        };
        arcs.push((i, j, w));
    }
    let n = arcs.iter().map(|&(i, j, _)| i.max(j) + 1).max().ok_or_else(|| parse_error(source_name, 1, 1, "no edges"))?;
    if !directed && !weighted {
        let edges: Vec<(usize, usize)> = arcs.iter().map(|&(i, j, _)| (i, j)).collect();
        return InfluenceSystem::random_walk_from_edges(n, &edges);
    }
    let mut raw = DMatrix::zeros(n, n);
    for &(i, j, w) in &arcs {
        raw[(i, j)] += w;
        if !directed && i != j {
            raw[(j, i)] += w;
        }
    }
    InfluenceSystem::row_normalized(&raw)
}

/// Reads a comma-separated dense matrix, one row per line.
pub fn parse_dense_csv(text: &str, source_name: &str) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, content) in data_lines(text) {
        let mut row = Vec::new();
        for (col, s) in fields(content, Some(',')) {
            let v: f64 = s.parse().map_err(|_| parse_error(source_name, line, col, format!("invalid number '{s}'")))?;
            row.push(v);
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(parse_error(
                    source_name,
                    line,
                    1,
                    format!("row has {} entries, expected {}", row.len(), first.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_error(source_name, 1, 1, "empty matrix"));
    }
    let (r, c) = (rows.len(), rows[0].len());
    if r != c {
        return Err(Error::NotSquare { rows: r, cols: c });
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

/// Reads a susceptibility vector: numbers separated by commas or whitespace.
pub fn parse_vector(text: &str, source_name: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (line, content) in data_lines(text) {
        for (col, s) in fields(&content.replace(',', " "), None) {
            out.push(s.parse().map_err(|_| parse_error(source_name, line, col, format!("invalid number '{s}'")))?);
        }
    }
    Ok(out)
}

fn json_error(source_name: &str, e: serde_json::Error) -> Error {
    let message = e.to_string();
    // serde_json appends its own " at line L column C"
    let message = match message.rfind(" at line ") {
        Some(k) => message[..k].to_string(),
        None => message,
    };
    parse_error(source_name, e.line(), e.column(), message)
}

pub fn parse_json<T: for<'de> Deserialize<'de>>(text: &str, source_name: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| json_error(source_name, e))
}

/// Problem file contents before validation.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    /// Row-stochastic weights.
    #[serde(default)]
    pub weights: Option<Vec<Vec<f64>>>,
    /// Symmetric 0/1 adjacency, used with `random_walk: true`.
    #[serde(default)]
    pub adjacency: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub random_walk: bool,
    pub susceptibility: Vec<f64>,
    /// Boundary opinions by node id; unlisted boundary nodes hold 0.
    #[serde(default)]
    pub psi: BTreeMap<String, f64>,
    /// Initial interior opinions by node id; unlisted nodes start at 0.
    #[serde(default)]
    pub phi: BTreeMap<String, f64>,
}

fn node_map(map: &BTreeMap<String, f64>, field: &str) -> Result<BTreeMap<usize, f64>> {
    map.iter()
        .map(|(k, &v)| {
            let node = k
                .trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidParameter(format!("{field}: '{k}' is not a node id")))?;
            Ok((node, v))
        })
        .collect()
}

impl ProblemSpec {
    pub fn system(&self) -> Result<InfluenceSystem> {
        match (&self.weights, &self.adjacency) {
            (Some(w), None) if !self.random_walk => InfluenceSystem::from_rows(w),
            (None, Some(a)) if self.random_walk => {
                let n = a.len();
                if a.iter().any(|r| r.len() != n) || n == 0 {
                    return Err(Error::NotSquare { rows: n, cols: a.first().map_or(0, Vec::len) });
                }
                InfluenceSystem::random_walk(&DMatrix::from_fn(n, n, |i, j| a[i][j]))
            }
            _ => Err(Error::InvalidParameter(
                "give either 'weights', or 'adjacency' together with \"random_walk\": true".into(),
            )),
        }
    }

    pub fn build(&self) -> Result<(InfluenceSystem, DirichletProblem)> {
        let system = self.system()?;
        let profile = SusceptibilityProfile::new(self.susceptibility.clone())?;
        if profile.n() != system.n() {
            return Err(Error::DimensionMismatch { expected: system.n(), actual: profile.n() });
        }
        let psi = node_map(&self.psi, "psi")?;
        let phi = node_map(&self.phi, "phi")?;
        let problem = DirichletProblem::from_node_values(&system, profile, &psi, &phi)?;
        Ok((system, problem))
    }
}

pub fn parse_problem(text: &str, source_name: &str) -> Result<(InfluenceSystem, DirichletProblem)> {
    parse_json::<ProblemSpec>(text, source_name)?.build()
}

pub fn matrix_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = m.row(i).iter().map(|&x| format_float(x)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn steps_csv(m: &StepMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.n() {
        let row: Vec<String> = m.row(i).iter().map(|s| s.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// `node,value` rows.
pub fn vector_csv(header: &str, nodes: &[usize], v: &DVector<f64>) -> String {
    let mut out = format!("node,{header}\n");
    for (&node, &x) in nodes.iter().zip(v.iter()) {
        let _ = writeln!(out, "{node},{}", format_float(x));
    }
    out
}

pub fn spectrum_csv(spectrum: &DirichletSpectrum) -> String {
    let mut out = String::from("k,lambda\n");
    for (k, &l) in spectrum.eigenvalues().iter().enumerate() {
        let _ = writeln!(out, "{k},{}", format_float(l));
    }
    out
}

/// Rows `k, scalar_factor, dv*/ds_k` with gradient columns named by interior node.
pub fn sensitivity_csv(interior: &[usize], reports: &[SensitivityReport]) -> String {
    let mut out = String::from("k,scalar_factor");
    for node in interior {
        let _ = write!(out, ",d{node}");
    }
    out.push('\n');
    for r in reports {
        let _ = write!(out, "{},{}", r.node, format_float(r.scalar_factor));
        for &g in r.gradient.iter() {
            let _ = write!(out, ",{}", format_float(g));
        }
        out.push('\n');
    }
    out
}

/// Rows `node, obdeg, ..., obpr, degree, ..., pagerank`.
pub fn centrality_csv(broadcast: &[Vec<f64>; 5], classical: &CentralitySet) -> String {
    let mut out = String::from("node");
    for m in Measure::ALL {
        let _ = write!(out, ",{}", m.broadcast_name());
    }
    for m in Measure::ALL {
        let _ = write!(out, ",{}", m.classical_name());
    }
    out.push('\n');
    let n = broadcast[0].len();
    for i in 0..n {
        out.push_str(&i.to_string());
        for m in Measure::ALL {
            let _ = write!(out, ",{}", format_float(broadcast[m.index()][i]));
        }
        for m in Measure::ALL {
            let _ = write!(out, ",{}", format_float(classical.get(m)[i]));
        }
        out.push('\n');
    }
    out
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}

pub const SCAN_FILES: [&str; 4] = ["U_inf.csv", "T.csv", "E.csv", "S_eps.csv"];

/// Writes the four scan matrices into `dir`.
pub fn write_scan(dir: &Path, scan: &ScanMatrices) -> Result<Vec<PathBuf>> {
    Ok(vec![
        write_file(dir, SCAN_FILES[0], &matrix_csv(&scan.u_inf))?,
        write_file(dir, SCAN_FILES[1], &steps_csv(&scan.t))?,
        write_file(dir, SCAN_FILES[2], &matrix_csv(&scan.e))?,
        write_file(dir, SCAN_FILES[3], &steps_csv(&scan.s_eps))?,
    ])
}

/// Reads a `T.csv` / `S_eps.csv` dump back.
pub fn parse_steps_csv(text: &str, source_name: &str) -> Result<StepMatrix> {
    let mut rows = Vec::new();
    for (line, content) in data_lines(text) {
        let mut row = Vec::new();
        for (col, s) in fields(content, Some(',')) {
            let step = if s == "inf" {
                crate::graph::Steps::INF
            } else {
                crate::graph::Steps::finite(
                    s.parse().map_err(|_| parse_error(source_name, line, col, format!("invalid step '{s}'")))?,
                )
            };
            row.push(step);
        }
        rows.push(row);
    }
    Ok(StepMatrix::from_rows(rows))
}
