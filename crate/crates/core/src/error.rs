use std::path::PathBuf;

use serde::{Deserialize, Serialize};

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A single offending field in a rejected record or request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for FieldError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("parse error at line {line}, column {column:?}: {message}")]
    Parse {
        line: u64,
        column: Option<String>,
        message: String,
    },

    #[error("cleaning error: {0}")]
    Clean(String),

    #[error("encoding error for feature `{feature}`: {message}")]
    Encode { feature: String, message: String },

    #[error("split error: {0}")]
    Split(String),

    #[error("generation error: {0}")]
    Generation(String),

    #[error("impurity error: {0}")]
    Impurity(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("sampling error: {0}")]
    Sampling(String),

    #[error("metric error: {0}")]
    Metric(String),

    #[error("tuning error: {0}")]
    Tuning(String),

    #[error("experiment error: {0}")]
    Experiment(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("validation failed: {}", join_fields(.0))]
    Validation(Vec<FieldError>),

    #[error("unsupported bundle format version {0}")]
    Version(u64),

    #[error("no model loaded")]
    Unavailable,

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn join_fields(fields: &[FieldError]) -> String {
    fields
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input rather than a runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Schema(_)
                | Error::Parse { .. }
                | Error::Validation(_)
                | Error::Generation(_)
                | Error::InvalidArgument(_)
                | Error::Version(_)
                | Error::Json(_)
        )
    }
}
