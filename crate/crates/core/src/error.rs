use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the simulator and the verification harness.
#[derive(Debug, Error)]
pub enum SqeError {
    #[error("dimension mismatch: expected {expected} values, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("mode ({0}, {1}) exceeds the Nyquist limit of a {2}x{2} grid")]
    ModeExceedsNyquist(i64, i64, usize),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite value in trajectory at t = {time}: {detail}")]
    NumericAbort { time: f64, detail: String },

    #[error("rejection sampler acceptance rate {rate:.3e} fell below the floor {floor:.3e}")]
    AcceptanceCollapse { rate: f64, floor: f64 },

    #[error("operation requires a one-signed measure")]
    NotOneSigned,

    #[error("too few replicas for a Monte Carlo estimate: {0}")]
    TooFewReplicas(usize),

    #[error("malformed snapshot {path}: {reason}")]
    Snapshot { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SqeError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> SqeError {
    SqeError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
