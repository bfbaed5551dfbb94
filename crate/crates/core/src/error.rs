use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    Shape {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("non-finite value produced by {0}")]
    NonFinite(String),

    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("{path}: row {row}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("feature `{0}` has zero standard deviation and cannot be normalized")]
    ZeroStd(String),

    #[error("unknown feature `{0}`")]
    UnknownFeature(String),

    #[error("gap of {missing_hours} hours after {after} exceeds the forward-fill limit of {limit} hours")]
    Gap {
        after: String,
        missing_hours: i64,
        limit: i64,
    },

    #[error("data error: {0}")]
    Data(String),

    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("forward cache does not match the model: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Coarse classification used by front ends to choose exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Data,
    Divergence,
    Internal,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) => ErrorClass::Validation,
            Error::Parse { .. }
            | Error::ZeroStd(_)
            | Error::UnknownFeature(_)
            | Error::Gap { .. }
            | Error::Data(_)
            | Error::Io(_)
            | Error::Json(_) => ErrorClass::Data,
            Error::Divergence { .. } => ErrorClass::Divergence,
            Error::Shape { .. } | Error::NonFinite(_) | Error::Cache(_) => ErrorClass::Internal,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(vec![msg.into()])
    }
}
