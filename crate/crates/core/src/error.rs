use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value or combination of values is invalid.
    #[error("configuration error: {0}")]
    Config(String),

    /// An input violates a structural contract (wrong dimension, too short, ...).
    #[error("input error: {0}")]
    Input(String),

    /// A value parsed correctly but is out of its allowed domain.
    #[error("validation error: {0}")]
    Validation(String),

    /// A text row could not be parsed. `row` is 1-based and counts the header.
    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    /// A class does not have enough samples for the requested estimator.
    #[error("class {label} has {count} sample(s), at least {required} required")]
    DegenerateClass {
        label: usize,
        count: usize,
        required: usize,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
