use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = SepError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum SepError {
    /// An argument outside the admissible domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The requested target probability cannot be reached even at the smallest sample.
    #[error("unreachable target: {0}")]
    Unreachable(String),

    #[error("ill-conditioned: requested {requested} components, largest admissible is {max_k}")]
    IllConditioned { requested: usize, max_k: usize },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("not separable: {0}")]
    NotSeparable(String),

    #[error("training did not converge: {0}")]
    NonConvergence(String),

    #[error("incompatible models: {0}")]
    Incompatible(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("invalid file format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl SepError {
    pub fn domain(msg: impl Into<String>) -> Self {
        SepError::Domain(msg.into())
    }

    /// Process exit code used by `sepctl`: 2 for validation problems, 1 for runtime/IO.
    pub fn exit_code(&self) -> i32 {
        match self {
            SepError::Domain(_)
            | SepError::DimensionMismatch { .. }
            | SepError::Unreachable(_)
            | SepError::IllConditioned { .. }
            | SepError::Incompatible(_) => 2,
            _ => 1,
        }
    }
}
