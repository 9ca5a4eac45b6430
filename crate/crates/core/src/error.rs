use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("signal must have at least one entry")]
    EmptySignal,
    #[error("signal entry {index} is not finite")]
    NonFinite { index: usize },
    #[error("reference signal has zero norm")]
    ZeroReference,
    #[error("sparsity {s} is out of range for n = {n}")]
    BadSparsity { n: usize, s: usize },
    #[error("dimension {n} is too small (need at least {min})")]
    DimensionTooSmall { n: usize, min: usize },
    #[error("bad support: {0}")]
    BadSupport(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid measurement vector: {0}")]
    InvalidVector(String),
    #[error("ensemble must contain at least one measurement vector")]
    EmptyEnsemble,
    #[error("dense measurement vectors have no graph interpretation")]
    UnstructuredVector,
    #[error("lateration dimension must be 1 or 2, got {0}")]
    BadDimension(usize),
    #[error("graph has {vertices} vertices; exhaustive seed search is limited to {limit}, supply a seed clique")]
    SeedRequired { vertices: usize, limit: usize },
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("frameworks are defined on different graphs")]
    GraphMismatch,
    #[error("missing measurement: {0}")]
    MissingMeasurement(String),
    #[error("anchors x[{j1}] and x[{j2}] are collinear with the origin")]
    CollinearAnchors { j1: usize, j2: usize },
    #[error("anchor intensity must be positive, got {0}")]
    NonpositiveMagnitude(f64),
    #[error("stage-two system is singular (normalized determinant {0:e})")]
    SingularSystem(f64),
    #[error("underdetermined: {m} measurements for dimension {n}")]
    Underdetermined { m: usize, n: usize },
    #[error("invalid options: {0}")]
    InvalidOptions(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}, line {line}: {message}")]
    Csv {
        path: PathBuf,
        line: u64,
        message: String,
    },
}

impl Error {
    /// Short machine-readable tag, used in benchmark records.
    pub fn code(&self) -> &'static str {
        match self {
            Error::EmptySignal => "empty-signal",
            Error::NonFinite { .. } => "non-finite",
            Error::ZeroReference => "zero-reference",
            Error::BadSparsity { .. } => "bad-sparsity",
            Error::DimensionTooSmall { .. } => "dimension-too-small",
            Error::BadSupport(_) => "bad-support",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::InvalidVector(_) => "invalid-vector",
            Error::EmptyEnsemble => "empty-ensemble",
            Error::UnstructuredVector => "unstructured-vector",
            Error::BadDimension(_) => "bad-dimension",
            Error::SeedRequired { .. } => "seed-required",
            Error::InvalidGraph(_) => "invalid-graph",
            Error::GraphMismatch => "graph-mismatch",
            Error::MissingMeasurement(_) => "missing-measurement",
            Error::CollinearAnchors { .. } => "collinear-anchors",
            Error::NonpositiveMagnitude(_) => "nonpositive-magnitude",
            Error::SingularSystem(_) => "singular-system",
            Error::Underdetermined { .. } => "underdetermined",
            Error::InvalidOptions(_) => "invalid-options",
            Error::Io { .. } => "io",
            Error::Json { .. } => "json",
            Error::Csv { .. } => "csv",
        }
    }
}
