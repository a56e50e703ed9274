//! Influence systems: row-stochastic weight matrices and their support graphs.
//!
//! The support graph has an arc `i -> j` whenever `W[i][j] > 0`, i.e. whenever
//! agent `i` listens to agent `j`. Opinions therefore travel against the arcs.

use std::collections::VecDeque;
use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Absolute tolerance on row sums of a valid influence matrix.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// A hop count or step count with a distinguished infinite value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Steps(u32);

impl Steps {
    pub const INF: Steps = Steps(u32::MAX);
    pub const ZERO: Steps = Steps(0);

    pub fn finite(value: u32) -> Steps {
        assert!(value != u32::MAX, "step count overflows the sentinel");
        Steps(value)
    }

    pub fn get(self) -> Option<u32> {
        (self != Steps::INF).then_some(self.0)
    }

    pub fn is_finite(self) -> bool {
        self != Steps::INF
    }
}

impl serde::Serialize for Steps {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self.get() {
            Some(v) => serializer.serialize_u32(v),
            None => serializer.serialize_str("inf"),
        }
    }
}

impl fmt::Display for Steps {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.get() {
            Some(v) => write!(f, "{v}"),
            None => f.write_str("inf"),
        }
    }
}

/// Dense `n x n` matrix of [`Steps`], row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepMatrix {
    n: usize,
    data: Vec<Steps>,
}

impl StepMatrix {
    pub fn filled(n: usize, value: Steps) -> Self {
        StepMatrix { n, data: vec![value; n * n] }
    }

    pub fn from_rows(rows: Vec<Vec<Steps>>) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            assert_eq!(row.len(), n, "step matrix rows must have length n");
            data.extend(row);
        }
        StepMatrix { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Steps {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: Steps) {
        self.data[i * self.n + j] = value;
    }

    pub fn row(&self, i: usize) -> &[Steps] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [Steps] {
        &mut self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn transpose(&self) -> StepMatrix {
        let mut t = StepMatrix::filled(self.n, Steps::INF);
        for i in 0..self.n {
            for j in 0..self.n {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }
}

/// Directed hop distances on a support graph.
pub type DistanceMatrix = StepMatrix;

/// A validated row-stochastic influence matrix together with its support graph.
#[derive(Clone, Debug)]
pub struct InfluenceSystem {
    weights: DMatrix<f64>,
    successors: Vec<Vec<usize>>,
    predecessors: Vec<Vec<usize>>,
    labels: Option<Vec<String>>,
}

impl InfluenceSystem {
    /// Validates nonnegativity and row-stochasticity of `weights`.
    pub fn new(weights: DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = weights.shape();
        if rows != cols || rows == 0 {
            return Err(Error::NotSquare { rows, cols });
        }
        for i in 0..rows {
            let mut sum = 0.0;
            for j in 0..cols {
                let w = weights[(i, j)];
                if !w.is_finite() {
                    return Err(Error::NonFiniteWeight { row: i, col: j });
                }
                if w < 0.0 {
                    return Err(Error::NegativeWeight { row: i, col: j, value: w });
                }
                sum += w;
            }
            let deviation = (sum - 1.0).abs();
            if deviation > ROW_SUM_TOL {
                return Err(Error::RowSumViolation { row: i, sum, deviation });
            }
        }
        Ok(Self::from_validated(weights))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(dense_from_rows(rows)?)
    }

    /// `W = D^-1 A` for a symmetric 0/1 adjacency matrix without isolated nodes.
    pub fn random_walk(adjacency: &DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = adjacency.shape();
        if rows != cols || rows == 0 {
            return Err(Error::NotSquare { rows, cols });
        }
        let n = rows;
        for i in 0..n {
            for j in 0..n {
                let a = adjacency[(i, j)];
                if (a != 0.0 && a != 1.0) || a != adjacency[(j, i)] {
                    return Err(Error::AsymmetricAdjacency { row: i, col: j });
                }
            }
        }
        let mut w = DMatrix::zeros(n, n);
        for i in 0..n {
            let deg: f64 = adjacency.row(i).iter().sum();
            if deg == 0.0 {
                return Err(Error::IsolatedNode { node: i });
            }
            for j in 0..n {
                if adjacency[(i, j)] != 0.0 {
                    w[(i, j)] = 1.0 / deg;
                }
            }
        }
        Self::new(w)
    }

    /// Random-walk system of an undirected edge list (duplicates are ignored).
    pub fn random_walk_from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut a = DMatrix::zeros(n, n);
        for &(i, j) in edges {
            if i >= n {
                return Err(Error::NodeOutOfRange { node: i, n });
            }
            if j >= n {
                return Err(Error::NodeOutOfRange { node: j, n });
            }
            a[(i, j)] = 1.0;
            a[(j, i)] = 1.0;
        }
        Self::random_walk(&a)
    }

    /// Directed system whose rows are the given nonnegative weights normalised to sum 1.
    pub fn row_normalized(raw: &DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = raw.shape();
        if rows != cols || rows == 0 {
            return Err(Error::NotSquare { rows, cols });
        }
        let mut w = raw.clone();
        for i in 0..rows {
            let mut sum = 0.0;
            for j in 0..cols {
                let v = raw[(i, j)];
                if !v.is_finite() {
                    return Err(Error::NonFiniteWeight { row: i, col: j });
                }
                if v < 0.0 {
                    return Err(Error::NegativeWeight { row: i, col: j, value: v });
                }
                sum += v;
            }
            if sum == 0.0 {
                return Err(Error::IsolatedNode { node: i });
            }
            for j in 0..cols {
                w[(i, j)] = raw[(i, j)] / sum;
            }
        }
        Self::new(w)
    }

    fn from_validated(weights: DMatrix<f64>) -> Self {
        let n = weights.nrows();
        let mut successors = vec![Vec::new(); n];
        let mut predecessors = vec![Vec::new(); n];
        for i in 0..n {
            for j in 0..n {
                if weights[(i, j)] > 0.0 {
                    successors[i].push(j);
                    predecessors[j].push(i);
                }
            }
        }
        InfluenceSystem { weights, successors, predecessors, labels: None }
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), actual: labels.len() });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[(i, j)]
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.weights[(i, j)] > 0.0
    }

    /// Support successors of `i`, self-loop included when present.
    pub fn successors(&self, i: usize) -> &[usize] {
        &self.successors[i]
    }

    pub fn predecessors(&self, j: usize) -> &[usize] {
        &self.predecessors[j]
    }

    /// Support edges in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.successors.iter().enumerate().flat_map(|(i, s)| s.iter().map(move |&j| (i, j)))
    }

    /// Out-degree in the support graph, ignoring self-loops.
    pub fn out_degree(&self, i: usize) -> usize {
        self.successors[i].iter().filter(|&&j| j != i).count()
    }

    pub fn max_row_sum_deviation(&self) -> f64 {
        (0..self.n())
            .map(|i| (self.weights.row(i).iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn check_node(&self, node: usize) -> Result<()> {
        if node < self.n() {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange { node, n: self.n() })
        }
    }

    /// Hop distances from `source` along support arcs.
    pub fn bfs(&self, source: usize) -> Vec<Steps> {
        bfs(&self.successors, source)
    }

    /// Hop distances from `target`'s perspective: entry `j` is `d(j, target)`.
    pub fn reverse_bfs(&self, target: usize) -> Vec<Steps> {
        bfs(&self.predecessors, target)
    }
}

pub(crate) fn dense_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::NotSquare { rows: 0, cols: 0 });
    }
    for r in rows {
        if r.len() != n {
            return Err(Error::NotSquare { rows: n, cols: r.len() });
        }
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

pub(crate) fn bfs(adjacency: &[Vec<usize>], source: usize) -> Vec<Steps> {
    let mut dist = vec![Steps::INF; adjacency.len()];
    dist[source] = Steps::ZERO;
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        let next = Steps::finite(dist[u].0 + 1);
        for &v in &adjacency[u] {
            if dist[v] == Steps::INF {
                dist[v] = next;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// All-pairs directed hop distances, one BFS per source.
pub fn directed_distances(system: &InfluenceSystem) -> DistanceMatrix {
    let rows = crate::par::map_indexed(system.n(), |i| system.bfs(i));
    StepMatrix::from_rows(rows)
}

/// `R+(i) = { j != i : d(i, j) < inf }` in ascending order.
pub fn out_reachability(system: &InfluenceSystem, i: usize) -> Vec<usize> {
    reachable_from_row(&system.bfs(i), i)
}

fn reachable_from_row(row: &[Steps], i: usize) -> Vec<usize> {
    row.iter()
        .enumerate()
        .filter(|&(j, d)| j != i && d.is_finite())
        .map(|(j, _)| j)
        .collect()
}

/// `|R+(i)| / sum_{j in R+(i)} d(i, j)`, or 0 when nothing is reachable.
pub fn out_closeness(system: &InfluenceSystem, i: usize) -> f64 {
    closeness_from_row(&system.bfs(i), i)
}

pub(crate) fn closeness_from_row(row: &[Steps], i: usize) -> f64 {
    let mut count = 0usize;
    let mut total = 0u64;
    for (j, d) in row.iter().enumerate() {
        if j == i {
            continue;
        }
        if let Some(d) = d.get() {
            count += 1;
            total += u64::from(d);
        }
    }
    if count == 0 {
        0.0
    } else {
        count as f64 / total as f64
    }
}

/// Strongly connected components (Tarjan, iterative). Components are emitted
/// in reverse topological order of the condensation.
pub(crate) fn strongly_connected_components(adjacency: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = adjacency.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut components = Vec::new();
    let mut counter = 0usize;

    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut next)) = call.last_mut() {
            if *next < adjacency[v].len() {
                let w = adjacency[v][*next];
                *next += 1;
                if index[w] == usize::MAX {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack underflow");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    components.push(comp);
                }
            }
        }
    }
    components
}
