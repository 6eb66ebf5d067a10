use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("rejected input: {0}")]
    RejectedInput(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid exponent: {0}")]
    InvalidExponent(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("solver diverged at step {step} (t = {time}): {reason}")]
    Diverged { step: u64, time: f64, reason: String },

    #[error("CFL violated at step {step}: dt = {dt} exceeds limit {limit} and adaptive stepping is disabled")]
    Cfl { step: u64, dt: f64, limit: f64 },

    #[error("snapshot format error at byte {offset}: {reason}")]
    Format { offset: usize, reason: String },

    #[error("config error at `{path}`: {reason}")]
    Config { path: String, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
