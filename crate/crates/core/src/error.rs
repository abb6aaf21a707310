use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while building meshes, instances or reports.
///
/// Hypothesis failures are never errors; they are reported as data.
#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("size error: {what} needs {requested} points, cap is {cap}")]
    Size {
        what: &'static str,
        requested: u128,
        cap: usize,
    },

    #[error("schema error in `{key}`: {message}")]
    Schema { key: String, message: String },

    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("evaluation error: non-finite value {value} at (x index {row}, lambda index {col})")]
    NonFinite { row: usize, col: usize, value: f64 },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn schema(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            key: key.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
