use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("invalid UTF-8 at byte offset {offset}")]
    Decode { offset: usize },

    #[error("{}: line {line}: {message}", path.display())]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("training failed: {0}")]
    Training(String),

    #[error("cannot reconcile vocabulary sizes: {needed} unused tokens must be removed, only {available} available (shortfall {})", needed - available)]
    Reconcile { needed: usize, available: usize },

    #[error("projection fit failed: {0}")]
    Fit(String),

    #[error("linear solve failed: {0}")]
    Solver(String),

    #[error("invalid report: {0}")]
    Validation(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
