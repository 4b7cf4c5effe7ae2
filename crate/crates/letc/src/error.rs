//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by tensor operations, graph construction, the solver and
/// the data harness.
#[derive(Debug, Error)]
pub enum Error {
    /// Dimensions of the inputs do not line up.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A parameter is outside its documented range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A numeric routine diverged or failed to converge.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// A data file could not be ingested. Line numbers are 1-based.
    #[error("{path}:{line}: {message}")]
    Ingest {
        path: String,
        line: usize,
        message: String,
    },

    /// Filesystem trouble while reading or writing artifacts.
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub fn ingest(path: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Ingest {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
