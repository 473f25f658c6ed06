//! Crate-wide error type. Numerical routines reject bad inputs eagerly so
//! that NaNs never propagate silently into an optimization run.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A matrix argument contains NaN or infinite entries.
    #[error("matrix contains non-finite entries")]
    InvalidMatrix,

    /// Vector or matrix sizes do not line up.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The search space must have at least two coordinates.
    #[error("dimension {0} is too small; need at least 2")]
    DimensionTooSmall(usize),

    /// Reduced sampling needs room to actually drop coordinates.
    #[error("PCA projection needs ambient dimension >= 3, got {0}")]
    DimensionTooSmallForPca(usize),

    /// A point cloud with fewer than two distinct points has no principal axes.
    #[error("degenerate data: fewer than two distinct points")]
    DegenerateData,

    /// The test-function id is not part of the suite.
    #[error("unknown function id `{0}`")]
    UnknownFunction(String),

    /// An evaluation point contains NaN or infinite coordinates.
    #[error("input vector contains non-finite values")]
    InvalidInput,

    /// A statistic was requested over an empty set of runs.
    #[error("empty cell: no traces supplied")]
    EmptyCell,

    /// Strategy or ES parameters violate their documented ranges.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// A results CSV could not be parsed back into traces.
    #[error("malformed trace data at row {row}: {msg}")]
    MalformedCsv { row: u64, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
