use thiserror::Error;

/// Errors produced by the numerical routines of this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The sampling grid cannot represent the spectrum without aliasing.
    #[error("undersampled grid: axis {axis} has {size} samples but bandwidth {bandwidth} needs at least {needed}")]
    Undersampled {
        axis: usize,
        size: usize,
        bandwidth: usize,
        needed: usize,
    },

    /// A hypothesis of a lemma or theorem does not hold for the given parameters.
    #[error("hypothesis \"{hypothesis}\" violated: {detail}")]
    Hypothesis {
        hypothesis: &'static str,
        detail: String,
    },

    #[error("empty set: {0}")]
    EmptySet(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("tail tolerance {tol:e} unreachable within cap limit {limit}")]
    TailUnreachable { tol: f64, limit: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
