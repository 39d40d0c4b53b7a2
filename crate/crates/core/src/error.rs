//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid matrix structure: {0}")]
    InvalidStructure(String),

    #[error("matrix is not symmetric positive definite (pivot {pivot} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("singular matrix encountered in {0}")]
    Singular(&'static str),

    #[error("size guard exceeded: {size} > {limit}")]
    SizeGuard { size: usize, limit: usize },

    #[error("operator is not block {expected} triangular")]
    NotTriangular { expected: &'static str },

    #[error("eigensolver failed to converge within {0} sweeps")]
    EigNoConvergence(usize),

    #[error("Lanczos breakdown: {0}")]
    Breakdown(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("estimated memory {estimate_bytes} bytes exceeds cap {cap_bytes}")]
    MemoryCap { estimate_bytes: u64, cap_bytes: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
