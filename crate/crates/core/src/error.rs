use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("state overflow at step {step} (max-norm {norm:e})")]
    Overflow { step: usize, norm: f64 },

    #[error("quadrature unresolved: refining the nodes changed the value by {relative_change:.3} (limit 0.05)")]
    QuadratureUnresolved { relative_change: f64 },

    #[error("degenerate Malliavin record: H-norm is zero for sample {sample}")]
    Degenerate { sample: usize },

    #[error("coupling violated: aggregated noise checksum differs from the master sheet by {0:e}")]
    Coupling(f64),

    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
