use std::path::PathBuf;

use thiserror::Error;

use crate::model::{Context, ModelKind};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A model, recipe, table or config field failed validation. `path`
    /// points at the offending field, e.g. `weights.source[2][1]`.
    #[error("invalid `{path}`: {message}")]
    Invalid { path: String, message: String },

    #[error("context {0} is not defined for this model")]
    UnknownContext(Context),

    #[error("{operation} does not support {kind} models: {reason}")]
    UnsupportedKind {
        operation: &'static str,
        kind: ModelKind,
        reason: String,
    },

    #[error("statistic undefined: {0}")]
    Undefined(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invalid {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
