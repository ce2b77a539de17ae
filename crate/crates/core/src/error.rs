use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed npy file: {0}")]
    Format(String),

    #[error("unsupported npy layout: {0}")]
    UnsupportedLayout(String),

    #[error("invalid tensor data: {0}")]
    Data(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("manifest entry {path:?}: {reason}")]
    Manifest { path: PathBuf, reason: String },

    #[error("unsupported manifest version {0} (expected 1)")]
    Version(i64),

    #[error("manifest is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("ensemble is empty")]
    EmptyEnsemble,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("kernel spectrum vanishes inside the fit range (radius {radius})")]
    SingularKernel { radius: usize },

    #[error("epsilon must be positive, got {0}")]
    NonPositiveEpsilon(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }
}
