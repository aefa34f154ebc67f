//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A distribution or operation parameter is outside its domain.
    #[error("invalid parameter: {0}")]
    Param(String),

    /// Invalid configuration (hyperparameters, engine/model combination, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// Array shapes do not conform.
    #[error("dimension mismatch: {0}")]
    Dim(String),

    /// Malformed or inconsistent input data.
    #[error("data error: {0}")]
    Data(String),

    /// Cholesky factorization hit a non-positive pivot.
    #[error("matrix not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    /// Non-finite values or a singular system encountered mid-run.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code convention: 2 usage/config, 3 data, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Param(_) | Error::Config(_) | Error::Dim(_) => 2,
            Error::Data(_) | Error::Io(_) | Error::Csv(_) | Error::Json(_) => 3,
            Error::NotPositiveDefinite { .. } | Error::Numerical(_) => 4,
        }
    }
}
