use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line count {found} vs {expected}")]
    LineCount { found: usize, expected: usize },

    #[error("ingestion error: {0}")]
    Ingestion(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("estimation error: {0}")]
    Estimation(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable code for each error category.
    pub fn code(&self) -> &'static str {
        match self {
            Error::LineCount { .. } | Error::Ingestion(_) => "E_INGEST",
            Error::Config(_) => "E_CONFIG",
            Error::Estimation(_) => "E_ESTIMATE",
            Error::Contract(_) => "E_CONTRACT",
            Error::Parse { .. } => "E_PARSE",
            Error::File { .. } | Error::Io(_) => "E_IO",
        }
    }

    /// Process exit status used by the command-line front end.
    pub fn exit_status(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::LineCount { .. } | Error::Ingestion(_) => 3,
            Error::Estimation(_) => 4,
            Error::Contract(_) => 5,
            Error::Parse { .. } => 6,
            Error::File { .. } | Error::Io(_) => 7,
        }
    }

    pub(crate) fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::File {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
