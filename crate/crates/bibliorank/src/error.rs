use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by corpus construction, scoring, and the file pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("corpus validation failed: {rejected} row(s) rejected")]
    ValidationFailed { rejected: usize },

    #[error("byline is empty")]
    EmptyByline,

    #[error("ranking lists cover different university sets")]
    UniversitySetMismatch,

    #[error("need at least {min} universities, got {n}")]
    TooFewUniversities { n: usize, min: usize },

    #[error("zero FTE staff for ({university}, {sds})")]
    ZeroFte { university: String, sds: String },

    #[error("empty score map")]
    EmptyScores,

    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),

    #[error("bad input file {path}: {reason}")]
    BadInput { path: PathBuf, reason: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code the CLI maps this error to: 1 for data-validation
    /// failures, 2 for usage, configuration, and i/o problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ValidationFailed { .. } => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
