use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the simulator, search and training layers.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller passed a value outside an operation's domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Experiment configuration could not be parsed or validated.
    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
