//! Kick-off and stabilisation diagnostics, the influence matrix `U`, and
//! all-vertex scans.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::dynamics::{DirichletProblem, Slot, SusceptibilityProfile};
use crate::error::{Error, Result};
use crate::graph::{InfluenceSystem, StepMatrix, Steps};

/// Opinions with magnitude at or below this count as not yet kicked off
/// when kick-off times are read from a simulation.
pub const KICKOFF_THRESHOLD: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScanOptions {
    pub epsilon: f64,
    pub t_cap: u32,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions { epsilon: 1e-6, t_cap: 1_000_000 }
    }
}

impl ScanOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.t_cap == u32::MAX {
            return Err(Error::InvalidParameter("t_cap must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NodeDiagnostics {
    pub kickoff: Steps,
    /// Opinion at the kick-off step; 0 when the node never kicks off.
    pub germinated: f64,
    /// First step inside the open `epsilon` ball around the steady value.
    pub stabilization: Steps,
    pub steady_value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DiagnosticsReport {
    /// One entry per node of the graph.
    pub nodes: Vec<NodeDiagnostics>,
    /// Kick-off times came from the support graph rather than a threshold.
    pub structural_kickoff: bool,
    pub steps: u32,
    /// Some node had not entered its `epsilon` ball when `t_cap` was hit.
    pub capped: bool,
}

/// Kick-off times when `phi = 0` and `psi` has one sign: the length of the
/// shortest support path from each node to a boundary node with nonzero
/// opinion, passing only through interior nodes.
pub fn structural_kickoff(problem: &DirichletProblem, system: &InfluenceSystem) -> Vec<Steps> {
    let n = problem.n();
    let mut t0 = vec![Steps::INF; n];
    let mut queue = VecDeque::new();
    for (k, &b) in problem.boundary().iter().enumerate() {
        if problem.psi()[k] != 0.0 {
            t0[b] = Steps::ZERO;
            queue.push_back(b);
        }
    }
    while let Some(u) = queue.pop_front() {
        let next = Steps::finite(t0[u].get().unwrap_or(0) + 1);
        for &v in system.predecessors(u) {
            if t0[v] == Steps::INF && matches!(problem.slot(v), Slot::Interior(_)) {
                t0[v] = next;
                queue.push_back(v);
            }
        }
    }
    t0
}

fn kickoff_is_structural(problem: &DirichletProblem) -> bool {
    let psi = problem.psi();
    problem.phi().iter().all(|&x| x == 0.0) && (psi.iter().all(|&x| x >= 0.0) || psi.iter().all(|&x| x <= 0.0))
}

/// Sparse interior update `v <- A v + b` for repeated stepping.
struct Stepper {
    rows: Vec<Vec<(usize, f64)>>,
    b: Vec<f64>,
}

impl Stepper {
    fn new(problem: &DirichletProblem) -> Self {
        let a = problem.iteration_matrix();
        let rows = (0..a.nrows())
            .map(|i| (0..a.ncols()).filter(|&j| a[(i, j)] != 0.0).map(|j| (j, a[(i, j)])).collect())
            .collect();
        Stepper { rows, b: problem.source_term().iter().copied().collect() }
    }

    fn step(&self, v: &[f64], out: &mut [f64]) {
        for (i, row) in self.rows.iter().enumerate() {
            out[i] = row.iter().fold(self.b[i], |acc, &(j, w)| acc + w * v[j]);
        }
    }
}

/// Per-node kick-off, germinated opinion and stabilisation time.
///
/// The trajectory is simulated from `phi` until every node has entered its
/// `epsilon` ball and every finite kick-off step has been seen, or until
/// `t_cap`. Nodes still outside their ball at the cap get `Steps::INF`.
pub fn node_diagnostics(
    problem: &DirichletProblem,
    system: &InfluenceSystem,
    options: ScanOptions,
) -> Result<DiagnosticsReport> {
    options.validate()?;
    let steady = problem.steady_state()?;
    let structural = kickoff_is_structural(problem);
    let kickoff = structural.then(|| structural_kickoff(problem, system));
    Ok(simulate(problem, &steady.full, kickoff, options))
}

fn simulate(
    problem: &DirichletProblem,
    steady_full: &DVector<f64>,
    structural: Option<Vec<Steps>>,
    options: ScanOptions,
) -> DiagnosticsReport {
    let n = problem.n();
    let interior = problem.interior();
    let stepper = Stepper::new(problem);
    let mut full = problem.assemble(problem.phi());
    let mut v: Vec<f64> = problem.phi().iter().copied().collect();
    let mut next = vec![0.0; v.len()];

    let structural_kickoff = structural.is_some();
    let mut kickoff = structural.unwrap_or_else(|| vec![Steps::INF; n]);
    // Structural times are at most n - 1; thresholded ones are watched for n steps.
    let horizon = if structural_kickoff {
        kickoff.iter().filter_map(|t| t.get()).max().unwrap_or(0)
    } else {
        n as u32
    };
    let mut germinated = vec![0.0; n];
    let mut stabilization = vec![Steps::INF; n];
    let mut pending = n;

    let mut t: u32 = 0;
    loop {
        for i in 0..n {
            let x = full[i];
            if structural_kickoff {
                if kickoff[i] == Steps::finite(t) {
                    germinated[i] = x;
                }
            } else if kickoff[i] == Steps::INF && x.abs() > KICKOFF_THRESHOLD {
                kickoff[i] = Steps::finite(t);
                germinated[i] = x;
            }
            if stabilization[i] == Steps::INF && (x - steady_full[i]).abs() < options.epsilon {
                stabilization[i] = Steps::finite(t);
                pending -= 1;
            }
        }
        if (pending == 0 && t >= horizon) || t >= options.t_cap {
            break;
        }
        stepper.step(&v, &mut next);
        std::mem::swap(&mut v, &mut next);
        for (k, &i) in interior.iter().enumerate() {
            full[i] = v[k];
        }
        t += 1;
    }

    let nodes = (0..n)
        .map(|i| NodeDiagnostics {
            kickoff: kickoff[i],
            germinated: germinated[i],
            stabilization: stabilization[i],
            steady_value: steady_full[i],
        })
        .collect();
    DiagnosticsReport { nodes, structural_kickoff, steps: t, capped: pending > 0 }
}

/// `U = G_S S W_ib`, rows indexed like the interior, columns like the
/// boundary.
#[derive(Clone, Debug, Serialize)]
pub struct InfluenceMatrix {
    pub interior: Vec<usize>,
    pub boundary: Vec<usize>,
    pub u: DMatrix<f64>,
}

impl InfluenceMatrix {
    pub fn row_sums(&self) -> DVector<f64> {
        DVector::from_iterator(self.u.nrows(), self.u.row_iter().map(|r| r.sum()))
    }
}

pub fn influence_matrix(system: &InfluenceSystem, profile: &SusceptibilityProfile) -> Result<InfluenceMatrix> {
    let problem = DirichletProblem::from_node_values(system, profile.clone(), &Default::default(), &Default::default())?;
    influence_matrix_of(&problem)
}

pub fn influence_matrix_of(problem: &DirichletProblem) -> Result<InfluenceMatrix> {
    let resolvent = problem.resolvent()?;
    let u = resolvent.solve_matrix(&scaled_boundary_block(problem))?;
    Ok(InfluenceMatrix { interior: problem.interior().to_vec(), boundary: problem.boundary().to_vec(), u })
}

/// `S W_ib`.
fn scaled_boundary_block(problem: &DirichletProblem) -> DMatrix<f64> {
    let mut rhs = problem.w_ib().clone();
    for (k, mut row) in rhs.row_iter_mut().enumerate() {
        row *= problem.s_interior()[k];
    }
    rhs
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundaryDecomposition {
    /// Column `j` is `beta_j = G_S S W_ib e_j`.
    pub beta: DMatrix<f64>,
    /// `G_S (I - S) phi`.
    pub interior_term: DVector<f64>,
}

impl BoundaryDecomposition {
    /// `sum_j beta_j psi_j + G_S (I - S) phi`.
    pub fn reconstruct(&self, psi: &DVector<f64>) -> DVector<f64> {
        &self.beta * psi + &self.interior_term
    }
}

pub fn boundary_decomposition(problem: &DirichletProblem) -> Result<BoundaryDecomposition> {
    let resolvent = problem.resolvent()?;
    let beta = resolvent.solve_matrix(&scaled_boundary_block(problem))?;
    let memory = problem.s_interior().map(|s| 1.0 - s).component_mul(problem.phi());
    let interior_term = resolvent.solve(&memory)?;
    Ok(BoundaryDecomposition { beta, interior_term })
}

/// The four all-vertex matrices. Row `i` describes the scan in which node
/// `i` is the only new stubborn source, with unit opinion.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanMatrices {
    pub u_inf: DMatrix<f64>,
    pub t: StepMatrix,
    pub e: DMatrix<f64>,
    pub s_eps: StepMatrix,
    pub epsilon: f64,
    /// False where the source problem was not well posed; such rows hold
    /// NaN and `Steps::INF`.
    pub row_ok: Vec<bool>,
    /// Rows whose simulation stopped at the step cap.
    pub row_capped: Vec<bool>,
}

impl ScanMatrices {
    pub fn n(&self) -> usize {
        self.row_ok.len()
    }

    pub fn all_rows_ok(&self) -> bool {
        self.row_ok.iter().all(|&ok| ok)
    }
}

/// One source row of a scan.
#[derive(Clone, Debug)]
pub struct ScanRow {
    pub u_inf: Vec<f64>,
    pub t: Vec<Steps>,
    pub e: Vec<f64>,
    pub s_eps: Vec<Steps>,
    pub capped: bool,
}

/// The scan problem for `source`: susceptibility `s[i]` with `s_i = 0`,
/// unit opinion at the source and zero everywhere else.
pub fn source_problem(
    system: &InfluenceSystem,
    baseline: &SusceptibilityProfile,
    source: usize,
) -> Result<DirichletProblem> {
    system.check_node(source)?;
    let profile = baseline.source_indexed(source);
    let psi = [(source, 1.0)].into_iter().collect();
    DirichletProblem::from_node_values(system, profile, &psi, &Default::default())
}

pub fn scan_row(
    system: &InfluenceSystem,
    baseline: &SusceptibilityProfile,
    source: usize,
    options: ScanOptions,
) -> Result<ScanRow> {
    options.validate()?;
    let problem = source_problem(system, baseline, source)?;
    let steady = problem.steady_state()?;
    let kickoff = structural_kickoff(&problem, system);
    let report = simulate(&problem, &steady.full, Some(kickoff), options);
    Ok(ScanRow {
        u_inf: report.nodes.iter().map(|d| d.steady_value).collect(),
        t: report.nodes.iter().map(|d| d.kickoff).collect(),
        e: report.nodes.iter().map(|d| d.germinated).collect(),
        s_eps: report.nodes.iter().map(|d| d.stabilization).collect(),
        capped: report.capped,
    })
}

/// Runs every source scan, in parallel when enabled. Ill-posed source
/// problems are flagged per row instead of failing the scan.
pub fn scan_all_vertices(
    system: &InfluenceSystem,
    baseline: &SusceptibilityProfile,
    options: ScanOptions,
) -> Result<ScanMatrices> {
    scan_with(system, baseline, options, |n, f| crate::par::map_indexed(n, f))
}

/// Same as [`scan_all_vertices`] on the calling thread only.
pub fn scan_all_vertices_sequential(
    system: &InfluenceSystem,
    baseline: &SusceptibilityProfile,
    options: ScanOptions,
) -> Result<ScanMatrices> {
    scan_with(system, baseline, options, |n, f| (0..n).map(f).collect())
}

type RowResult = Result<ScanRow>;

fn scan_with(
    system: &InfluenceSystem,
    baseline: &SusceptibilityProfile,
    options: ScanOptions,
    map: impl FnOnce(usize, &(dyn Fn(usize) -> RowResult + Sync + Send)) -> Vec<RowResult>,
) -> Result<ScanMatrices> {
    let n = system.n();
    if n < 2 {
        return Err(Error::InvalidParameter("a scan needs at least two nodes".into()));
    }
    if baseline.n() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: baseline.n() });
    }
    options.validate()?;
    let rows = map(n, &|i| scan_row(system, baseline, i, options));

    let mut out = ScanMatrices {
        u_inf: DMatrix::from_element(n, n, f64::NAN),
        t: StepMatrix::filled(n, Steps::INF),
        e: DMatrix::from_element(n, n, f64::NAN),
        s_eps: StepMatrix::filled(n, Steps::INF),
        epsilon: options.epsilon,
        row_ok: vec![false; n],
        row_capped: vec![false; n],
    };
    for (i, row) in rows.into_iter().enumerate() {
        match row {
            Ok(row) => {
                for j in 0..n {
                    out.u_inf[(i, j)] = row.u_inf[j];
                    out.e[(i, j)] = row.e[j];
                }
                out.t.row_mut(i).copy_from_slice(&row.t);
                out.s_eps.row_mut(i).copy_from_slice(&row.s_eps);
                out.row_ok[i] = true;
                out.row_capped[i] = row.capped;
            }
            Err(Error::NotWellPosed { .. }) => {}
            Err(other) => return Err(other),
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct Volumes {
    /// Off-diagonal row sums of `U_inf`.
    pub out: Vec<f64>,
    /// Off-diagonal column sums of `U_inf`.
    pub inward: Vec<f64>,
    /// Graph influenceability: the common total of both.
    pub total: f64,
}

/// Broadcasting and reception volumes over the well-posed rows.
pub fn volumes(scan: &ScanMatrices) -> Volumes {
    let n = scan.n();
    let mut out = vec![0.0; n];
    let mut inward = vec![0.0; n];
    for i in (0..n).filter(|&i| scan.row_ok[i]) {
        for j in (0..n).filter(|&j| j != i) {
            out[i] += scan.u_inf[(i, j)];
            inward[j] += scan.u_inf[(i, j)];
        }
    }
    let total = out.iter().sum();
    Volumes { out, inward, total }
}
