use thiserror::Error;

/// Errors raised across the solver stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("index ({row}, {col}) out of range for a {nrows}x{ncols} matrix")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        nrows: usize,
        ncols: usize,
    },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({nrows}x{ncols})")]
    NotSquare { nrows: usize, ncols: usize },

    #[error("matrix is singular: pivot {pivot:e} at step {step}")]
    Singular { step: usize, pivot: f64 },

    #[error("matrix is not positive definite: pivot {pivot:e} at step {step}")]
    NotPositiveDefinite { step: usize, pivot: f64 },

    #[error("matrix is not symmetric (relative asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("size {size} exceeds the dense cap {cap}")]
    DenseCapExceeded { size: usize, cap: usize },

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("invalid mesh parameters: {0}")]
    InvalidMesh(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid problem definition: {0}")]
    InvalidProblem(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid solver parameter: {0}")]
    InvalidParameter(String),

    #[error("weighted norm is not available: {0}")]
    WeightedNormInvalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
