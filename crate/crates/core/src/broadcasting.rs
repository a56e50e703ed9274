//! The broadcasting graph and its centralities.
//!
//! Each support arc `i -> j` is reweighted by `w_ij = U_inf[i][j]`, the
//! steady opinion of `j` when `i` is the unit source, and given the length
//! `-ln w_ij`. Shortest paths in that metric are the most reliable
//! broadcasting routes.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{closeness_from_row, directed_distances, InfluenceSystem, StepMatrix};
use crate::influence::ScanMatrices;

/// Relative tolerance under which two geodesic lengths count as tied.
pub const TIE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Degree,
    Closeness,
    Betweenness,
    Eigenvector,
    PageRank,
}

impl Measure {
    pub const ALL: [Measure; 5] =
        [Measure::Degree, Measure::Closeness, Measure::Betweenness, Measure::Eigenvector, Measure::PageRank];

    pub fn broadcast_name(self) -> &'static str {
        match self {
            Measure::Degree => "obdeg",
            Measure::Closeness => "obclose",
            Measure::Betweenness => "obbet",
            Measure::Eigenvector => "obeig",
            Measure::PageRank => "obpr",
        }
    }

    pub fn classical_name(self) -> &'static str {
        match self {
            Measure::Degree => "degree",
            Measure::Closeness => "closeness",
            Measure::Betweenness => "betweenness",
            Measure::Eigenvector => "eigenvector",
            Measure::PageRank => "pagerank",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Which distance the broadcasting closeness uses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClosenessVariant {
    /// `|R+(i)| nu / sum_j U_inf[i][j] d(i, j)` with hop distances `d`.
    #[default]
    Definition,
    /// `|R(i)| / sum_j d_log(i, j)` over nodes at finite log distance.
    LogMetric,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CentralityParams {
    /// Uniform regularisation added to every entry before the Perron vector.
    pub eta: f64,
    /// PageRank damping.
    pub alpha: f64,
    pub tie_tol: f64,
    pub eig_tol: f64,
    pub eig_cap: usize,
    pub pagerank_tol: f64,
    pub closeness: ClosenessVariant,
}

impl Default for CentralityParams {
    fn default() -> Self {
        CentralityParams { eta: 1e-8, alpha: 0.85, tie_tol: TIE_TOL, eig_tol: 1e-12, eig_cap: 100_000, pagerank_tol: 1e-14, closeness: ClosenessVariant::Definition }
    }
}

impl CentralityParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidParameter(format!("eta must be nonnegative, got {}", self.eta)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        Ok(())
    }
}

/// The five centralities of one graph, indexed by [`Measure`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CentralitySet {
    pub values: [Vec<f64>; 5],
}

impl CentralitySet {
    pub fn get(&self, measure: Measure) -> &[f64] {
        &self.values[measure.index()]
    }

    pub fn centralizations(&self) -> [f64; 5] {
        std::array::from_fn(|k| centralization(&self.values[k]))
    }
}

/// `sum_i (max_k c_k - c_i)`.
pub fn centralization(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    values.iter().map(|&c| max - c).sum()
}

#[derive(Clone, Debug)]
pub struct BroadcastingGraph {
    n: usize,
    /// Full all-vertex steady responses.
    u_inf: DMatrix<f64>,
    /// `U_inf` restricted to support arcs.
    weights: DMatrix<f64>,
    /// Arcs with positive weight and their log lengths.
    arcs: Vec<Vec<(usize, f64)>>,
    hops: StepMatrix,
}

impl BroadcastingGraph {
    pub fn new(system: &InfluenceSystem, scan: &ScanMatrices) -> Result<Self> {
        let n = system.n();
        if scan.n() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: scan.n() });
        }
        if !scan.all_rows_ok() {
            return Err(Error::InvalidParameter("scan contains ill-posed source rows".into()));
        }
        let weights = DMatrix::from_fn(n, n, |i, j| if system.has_edge(i, j) { scan.u_inf[(i, j)] } else { 0.0 });
        Ok(Self::from_parts(scan.u_inf.clone(), weights, directed_distances(system)))
    }

    /// Builds a graph from explicit weights; `U_inf` is taken equal to the
    /// weights and hop distances come from their support.
    pub fn from_weights(weights: DMatrix<f64>) -> Result<Self> {
        let n = weights.nrows();
        if weights.ncols() != n || n == 0 {
            return Err(Error::NotSquare { rows: n, cols: weights.ncols() });
        }
        for ((i, j), &w) in weights.iter().enumerate().map(|(k, w)| ((k % n, k / n), w)) {
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::InvalidParameter(format!("weight ({i}, {j}) = {w} outside [0, 1]")));
            }
        }
        let support: Vec<Vec<usize>> = (0..n).map(|i| (0..n).filter(|&j| weights[(i, j)] > 0.0).collect()).collect();
        let hops = StepMatrix::from_rows((0..n).map(|i| crate::graph::bfs(&support, i)).collect());
        Ok(Self::from_parts(weights.clone(), weights, hops))
    }

    fn from_parts(u_inf: DMatrix<f64>, weights: DMatrix<f64>, hops: StepMatrix) -> Self {
        let n = weights.nrows();
        let arcs = (0..n)
            .map(|i| (0..n).filter(|&j| weights[(i, j)] > 0.0).map(|j| (j, -weights[(i, j)].ln())).collect())
            .collect();
        BroadcastingGraph { n, u_inf, weights, arcs, hops }
    }

    /// The reversed graph, on which the same constructions measure reception.
    pub fn transposed(&self) -> Self {
        Self::from_parts(self.u_inf.transpose(), self.weights.transpose(), self.hops.transpose())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    /// `-ln w_ij`, infinite off the support.
    pub fn log_length(&self, i: usize, j: usize) -> f64 {
        let w = self.weights[(i, j)];
        if w > 0.0 {
            -w.ln()
        } else {
            f64::INFINITY
        }
    }

    /// All-pairs shortest log distances, one Dijkstra pass per source.
    pub fn log_distances(&self) -> DMatrix<f64> {
        let rows = crate::par::map_indexed(self.n, |s| dijkstra(&self.arcs, s));
        DMatrix::from_fn(self.n, self.n, |i, j| rows[i][j])
    }

    /// `(1/(n-1)) sum_{j in N+(i), j != i} w_ij`.
    pub fn obdeg(&self) -> Vec<f64> {
        let denom = (self.n.max(2) - 1) as f64;
        (0..self.n)
            .map(|i| (0..self.n).filter(|&j| j != i).map(|j| self.weights[(i, j)]).sum::<f64>() / denom)
            .collect()
    }

    /// `nu = min { U_inf[i][j] : i != j, d(i, j) < inf }`, 0 if there is no
    /// such pair.
    pub fn nu(&self) -> f64 {
        let mut nu = f64::INFINITY;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j && self.hops.get(i, j).is_finite() {
                    nu = nu.min(self.u_inf[(i, j)]);
                }
            }
        }
        if nu.is_finite() {
            nu
        } else {
            0.0
        }
    }

    /// `|R+(i)| nu / sum_{j in R+(i)} U_inf[i][j] d(i, j)`, or 0 when the
    /// reach set is empty or `nu = 0`.
    pub fn obclose(&self) -> Vec<f64> {
        let nu = self.nu();
        (0..self.n)
            .map(|i| {
                let mut count = 0usize;
                let mut denom = 0.0;
                for j in 0..self.n {
                    if let (true, Some(d)) = (j != i, self.hops.get(i, j).get()) {
                        count += 1;
                        denom += self.u_inf[(i, j)] * d as f64;
                    }
                }
                if count == 0 || nu == 0.0 || denom == 0.0 {
                    0.0
                } else {
                    count as f64 * nu / denom
                }
            })
            .collect()
    }

    /// `|R(i)| / sum_{j in R(i)} d_log(i, j)` where `R(i)` holds the other
    /// nodes at finite log distance; 0 when `R(i)` is empty or every node in
    /// it is at log distance 0.
    pub fn obclose_log(&self) -> Vec<f64> {
        let d = self.log_distances();
        (0..self.n)
            .map(|i| {
                let (count, denom) = (0..self.n)
                    .filter(|&j| j != i && d[(i, j)].is_finite())
                    .fold((0usize, 0.0), |(c, s), j| (c + 1, s + d[(i, j)]));
                if count == 0 || denom == 0.0 {
                    0.0
                } else {
                    count as f64 / denom
                }
            })
            .collect()
    }

    /// Betweenness over log-metric geodesics, normalised by `(n-1)(n-2)`.
    pub fn obbet(&self, tie_tol: f64) -> Vec<f64> {
        betweenness(&self.arcs, tie_tol)
    }

    /// Normalised Perron vector of `W + eta 11^T`.
    pub fn obeig(&self, eta: f64, tol: f64, cap: usize) -> Result<Vec<f64>> {
        perron_vector(&self.weights, eta, tol, cap)
    }

    pub fn obpr(&self, alpha: f64, tol: f64) -> Vec<f64> {
        pagerank(&self.weights, alpha, tol)
    }

    pub fn centralities(&self, params: &CentralityParams) -> Result<CentralitySet> {
        params.validate()?;
        Ok(CentralitySet {
            values: [
                self.obdeg(),
                match params.closeness {
                    ClosenessVariant::Definition => self.obclose(),
                    ClosenessVariant::LogMetric => self.obclose_log(),
                },
                self.obbet(params.tie_tol),
                self.obeig(params.eta, params.eig_tol, params.eig_cap)?,
                self.obpr(params.alpha, params.pagerank_tol),
            ],
        })
    }

    /// The five constructions applied to the reversed graph.
    pub fn reception(&self, params: &CentralityParams) -> Result<CentralitySet> {
        self.transposed().centralities(params)
    }
}

#[derive(Clone, Copy, PartialEq)]
struct HeapEntry {
    dist: f64,
    node: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn dijkstra(arcs: &[Vec<(usize, f64)>], source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; arcs.len()];
    let mut done = vec![false; arcs.len()];
    dist[source] = 0.0;
    let mut heap = BinaryHeap::from([HeapEntry { dist: 0.0, node: source }]);
    while let Some(HeapEntry { dist: d, node: u }) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        for &(v, len) in &arcs[u] {
            let candidate = d + len;
            if candidate < dist[v] {
                dist[v] = candidate;
                heap.push(HeapEntry { dist: candidate, node: v });
            }
        }
    }
    dist
}

fn tied(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

/// Brandes dependency accumulation from one source.
fn source_dependencies(arcs: &[Vec<(usize, f64)>], source: usize, tie_tol: f64) -> Vec<f64> {
    let n = arcs.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut sigma = vec![0.0f64; n];
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut done = vec![false; n];
    let mut order = Vec::with_capacity(n);
    dist[source] = 0.0;
    sigma[source] = 1.0;
    let mut heap = BinaryHeap::from([HeapEntry { dist: 0.0, node: source }]);
    while let Some(HeapEntry { dist: d, node: u }) = heap.pop() {
        if done[u] || d != dist[u] {
            continue;
        }
        done[u] = true;
        order.push(u);
        for &(v, len) in &arcs[u] {
            if done[v] {
                continue;
            }
            let candidate = d + len;
            if dist[v].is_finite() && tied(candidate, dist[v], tie_tol) {
                sigma[v] += sigma[u];
                preds[v].push(u);
            } else if candidate < dist[v] {
                dist[v] = candidate;
                sigma[v] = sigma[u];
                preds[v].clear();
                preds[v].push(u);
                heap.push(HeapEntry { dist: candidate, node: v });
            }
        }
    }
    let mut delta = vec![0.0; n];
    for &w in order.iter().rev() {
        for &v in &preds[w] {
            delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
        }
    }
    delta[source] = 0.0;
    delta
}

/// Normalised betweenness for arc lengths `arcs`; zeros when `n < 3`.
pub fn betweenness(arcs: &[Vec<(usize, f64)>], tie_tol: f64) -> Vec<f64> {
    let n = arcs.len();
    if n < 3 {
        return vec![0.0; n];
    }
    let per_source = crate::par::map_indexed(n, |s| source_dependencies(arcs, s, tie_tol));
    let norm = 1.0 / ((n - 1) * (n - 2)) as f64;
    let mut out = vec![0.0; n];
    for delta in per_source {
        for (o, d) in out.iter_mut().zip(delta) {
            *o += d;
        }
    }
    out.iter_mut().for_each(|o| *o *= norm);
    out
}

/// Right Perron vector of `W + eta 11^T`, normalised to sum 1.
///
/// Power iteration runs first. When it has not settled within `cap` steps
/// (nearly tied dominant eigenvalues of a reducible `W` with tiny `eta`),
/// the vector is refined by inverse iteration at the dense spectral radius.
pub fn perron_vector(w: &DMatrix<f64>, eta: f64, tol: f64, cap: usize) -> Result<Vec<f64>> {
    let n = w.nrows();
    let regularised = w.add_scalar(eta);
    let mut x = DVector::from_element(n, 1.0 / n as f64);
    for _ in 0..cap {
        let mut y = &regularised * &x;
        let s = y.sum();
        if !(s > 0.0) {
            break;
        }
        y /= s;
        let change = (&y - &x).amax();
        x = y;
        if change <= tol {
            return Ok(x.iter().copied().collect());
        }
    }
    inverse_iteration(&regularised, tol).ok_or(Error::PowerIterationDiverged { cap })
}

fn inverse_iteration(m: &DMatrix<f64>, tol: f64) -> Option<Vec<f64>> {
    let n = m.nrows();
    let rho = crate::linalg::dense_spectral_radius(m);
    if !(rho > 0.0) {
        return None;
    }
    let shifted = DMatrix::<f64>::identity(n, n) * (rho * (1.0 + 1e-14)) - m;
    let lu = shifted.lu();
    let mut x = DVector::from_element(n, 1.0 / n as f64);
    for _ in 0..50 {
        let mut y = lu.solve(&x)?;
        let s = y.sum();
        if !(s.is_finite() && s != 0.0) {
            return None;
        }
        y /= s;
        let change = (&y - &x).amax();
        x = y;
        if change <= tol {
            let residual = (m * &x - &x * rho).amax();
            return (x.iter().all(|&v| v >= 0.0) && residual <= 1e-9 * rho).then(|| x.iter().copied().collect());
        }
    }
    None
}

/// PageRank of the row-normalised weights with uniform dangling rows.
pub fn pagerank(w: &DMatrix<f64>, alpha: f64, tol: f64) -> Vec<f64> {
    let n = w.nrows();
    let uniform = 1.0 / n as f64;
    let row_sums: Vec<f64> = (0..n).map(|i| w.row(i).sum()).collect();
    let mut pi = vec![uniform; n];
    let mut next = vec![0.0; n];
    for _ in 0..100_000 {
        let dangling: f64 = (0..n).filter(|&i| row_sums[i] <= 0.0).map(|i| pi[i]).sum();
        let base = alpha * dangling * uniform + (1.0 - alpha) * uniform;
        next.iter_mut().for_each(|x| *x = base);
        for i in (0..n).filter(|&i| row_sums[i] > 0.0) {
            let scale = alpha * pi[i] / row_sums[i];
            for j in 0..n {
                next[j] += scale * w[(i, j)];
            }
        }
        let change: f64 = pi.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut pi, &mut next);
        if change <= tol {
            break;
        }
    }
    pi
}

/// Topology-only counterparts on the 0/1 support without self-loops: degree,
/// hop closeness, hop betweenness, and eigenvector/PageRank on the adjacency.
pub fn classical_centralities(system: &InfluenceSystem, params: &CentralityParams) -> Result<CentralitySet> {
    params.validate()?;
    let n = system.n();
    let adjacency = DMatrix::from_fn(n, n, |i, j| if i != j && system.has_edge(i, j) { 1.0 } else { 0.0 });
    let denom = (n.max(2) - 1) as f64;
    let degree = (0..n).map(|i| system.out_degree(i) as f64 / denom).collect();
    let distances = directed_distances(system);
    let closeness = (0..n).map(|i| closeness_from_row(distances.row(i), i)).collect();
    let arcs: Vec<Vec<(usize, f64)>> =
        (0..n).map(|i| system.successors(i).iter().filter(|&&j| j != i).map(|&j| (j, 1.0)).collect()).collect();
    let between = betweenness(&arcs, params.tie_tol);
    let eig = perron_vector(&adjacency, params.eta, params.eig_tol, params.eig_cap)?;
    let pr = pagerank(&adjacency, params.alpha, params.pagerank_tol);
    Ok(CentralitySet { values: [degree, closeness, between, eig, pr] })
}
