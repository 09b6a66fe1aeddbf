use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("length mismatch: a has {a} entries, b has {b}")]
    LengthMismatch { a: usize, b: usize },

    #[error("empty weight vector")]
    Empty,

    #[error("weight at position {index} is negative or not finite ({value})")]
    NegativeWeight { index: usize, value: f64 },

    #[error("all weights are zero")]
    AllZero,

    #[error("certificate rules need strictly positive weights (position {index} is zero)")]
    ZeroWeight { index: usize },

    #[error("index {index} out of range for length {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("requested tolerance {requested:e} not reached; best bound {achieved:e}")]
    ToleranceUnreachable { requested: f64, achieved: f64 },

    #[error("invalid tolerance {0:e}: expected a value in (1e-12, 1e-2)")]
    InvalidTolerance(f64),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("rule not applicable: {0}")]
    NotApplicable(String),

    #[error("invalid auxiliary vectors: {0}")]
    InvalidAuxiliary(String),

    #[error("balancing produced a non-monotone vector at position {0}")]
    NonMonotoneResult(usize),

    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
