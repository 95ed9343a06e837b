use thiserror::Error;

/// Errors produced by the surrogate, samplers and batch designer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0} (must be at least 1)")]
    InvalidDimension(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("coordinate {value} at index {index} lies outside [0, 1]")]
    OutOfBounds { index: usize, value: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("matrix factorization failed after jitter escalation to {jitter:e} ({context})")]
    Conditioning { context: &'static str, jitter: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown test function `{0}`")]
    UnknownFunction(String),

    #[error("low-discrepancy sequence exhausted at index {0}")]
    SequenceExhausted(usize),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
