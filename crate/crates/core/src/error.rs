use std::path::PathBuf;

use thiserror::Error;

use crate::matrix::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite feature value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("shape mismatch: expected {expected}, got {actual}")]
    Shape { expected: String, actual: String },

    #[error("invalid dissimilarity matrix: {0}")]
    InvalidMatrix(Violation),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate histogram: image has a single intensity ({0})")]
    DegenerateHistogram(u8),

    #[error("numeric failure: {0}")]
    NumericFailure(String),

    #[error("wav: {chunk} chunk: {message}")]
    Wav {
        chunk: &'static str,
        message: String,
    },

    #[error("format: {0}")]
    Format(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn shape(expected: impl ToString, actual: impl ToString) -> Self {
        Error::Shape {
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of a numerical routine rather than bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NumericFailure(_))
    }
}
