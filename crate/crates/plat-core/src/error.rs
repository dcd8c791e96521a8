use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlatError {
    #[error("base marker mismatch")]
    BaseMismatch,
    #[error("base must be > 1, got {0}")]
    InvalidBase(String),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("dimension or prime mismatch: {0}")]
    Mismatch(String),
    #[error("generators are not full rank")]
    NotFullRank,
    #[error("denominator is not a power of p: {0}")]
    BadDenominator(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("pole: {0}")]
    Pole(String),
    #[error("convergence condition violated: {0}")]
    Convergence(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("invalid argument: {0}")]
    Domain(String),
    #[error("coincident spectral values; use phi_regularized")]
    Coincident,
    #[error("non-finite value: {0}")]
    NotFinite(String),
    #[error("arithmetic overflow: {0}")]
    Overflow(String),
    #[error("box too small: {0}")]
    BoxTooSmall(String),
}

pub type Result<T> = std::result::Result<T, PlatError>;
