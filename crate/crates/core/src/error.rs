use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("weight matrix must be square and non-empty, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("negative weight {value} at ({row}, {col})")]
    NegativeWeight { row: usize, col: usize, value: f64 },

    #[error("non-finite weight at ({row}, {col})")]
    NonFiniteWeight { row: usize, col: usize },

    #[error("row {row} sums to {sum} (deviation {deviation:e} from 1)")]
    RowSumViolation { row: usize, sum: f64, deviation: f64 },

    #[error("node {node} has no neighbours")]
    IsolatedNode { node: usize },

    #[error("adjacency matrix is not symmetric 0/1 at ({row}, {col})")]
    AsymmetricAdjacency { row: usize, col: usize },

    #[error("susceptibility s[{node}] = {value} is outside [0, 1]")]
    SusceptibilityOutOfRange { node: usize, value: f64 },

    #[error("every node is susceptible, the boundary is empty")]
    EmptyBoundary,

    #[error("expected length {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("node {node} out of range for a graph with {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },

    #[error("node {node} is not an interior node")]
    NotInterior { node: usize },

    #[error("node {node} is not a boundary node")]
    NotBoundary { node: usize },

    #[error("problem is not well posed (spectral radius {rho}){}", witness_suffix(.witness))]
    NotWellPosed { rho: f64, witness: Option<Vec<usize>> },

    #[error("iteration cap {cap} reached before convergence")]
    CapReached { cap: usize },

    #[error("Neumann series did not converge within {k_max} terms (last term norm {last:e})")]
    NeumannNotConverged { k_max: usize, last: f64 },

    #[error("power iteration did not converge within {cap} iterations")]
    PowerIterationDiverged { cap: usize },

    #[error("system is not an undirected random-walk system: {reason}")]
    NotRandomWalkSystem { reason: String },

    #[error("s * lambda_max = {value} is not below 1")]
    SpectralGapViolation { value: f64 },

    #[error("problems do not share the same interior/boundary partition")]
    PartitionMismatch,

    #[error("sample has zero variance")]
    ZeroVariance,

    #[error("empty sample")]
    EmptySample,

    #[error("every Monte Carlo run hit an ill-posed source problem")]
    AllRunsIllPosed,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error in {source_name} at line {line}, column {column}: {message}")]
    Parse { source_name: String, line: usize, column: usize, message: String },

    #[error("io error: {0}")]
    Io(String),
}

fn witness_suffix(witness: &Option<Vec<usize>>) -> String {
    match witness {
        Some(nodes) => {
            let ids: Vec<String> = nodes.iter().map(|n| n.to_string()).collect();
            format!("; undamped closed cycle through nodes {{{}}}", ids.join(", "))
        }
        None => String::new(),
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
