use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("monomial basis too large: m = {m} exceeds cap {cap}")]
    BasisTooLarge { m: u128, cap: usize },

    #[error("degree {degree} exceeds supported maximum {max}")]
    DegreeTooLarge { degree: usize, max: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("eigensolver failed on {dim}x{dim} matrix (frobenius norm {frobenius:e}, max |entry| {max_abs:e})")]
    EigenFailure {
        dim: usize,
        frobenius: f64,
        max_abs: f64,
    },

    #[error("matrix not symmetric: max asymmetry {0:e}")]
    NotSymmetric(f64),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
