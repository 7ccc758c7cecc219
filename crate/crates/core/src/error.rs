use thiserror::Error;

#[derive(Debug, Error)]
pub enum KrotovError {
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("duplicate basis index {0}")]
    DuplicateIndex(usize),

    #[error("basis index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("Chebychev series did not converge at step {step} (spectral radius × dt = {alpha:.3e}, {terms} terms allowed)")]
    PropagatorAccuracy { step: usize, alpha: f64, terms: usize },

    #[error("bound unavailable: {0}")]
    BoundUnavailable(String),

    #[error("shape function vanishes at time index {0} while the field differs from its reference")]
    ZeroShape(usize),

    #[error("non-finite value at time index {index}: {what}")]
    NonFinite { index: usize, what: String },

    #[error("zero denominator in normalized functional (lambda_b == lambda_0)")]
    ZeroDenominator,

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, KrotovError>;
