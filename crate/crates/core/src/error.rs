//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("toml error: {0}")]
    Toml(String),

    #[error("{path}:{line}: {msg}")]
    DataRow { path: PathBuf, line: u64, msg: String },

    #[error("invalid input data: {0}")]
    Data(String),

    #[error("model text line {line}, column {col}: {msg}")]
    ModelSyntax { line: usize, col: usize, msg: String },

    #[error("unknown state `{0}`")]
    UnknownState(String),

    #[error("parameter index {index} out of range (lambda_max = {lambda_max})")]
    ParamOutOfRange { index: usize, lambda_max: usize },

    #[error("invalid model: {0}")]
    Model(String),

    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("segment too short: {0}")]
    SegmentTooShort(String),

    #[error("objective evaluation failed for parameters {params:?}: {msg}")]
    Evaluation { params: Vec<f64>, msg: String },

    #[error("hypervolume supports at most 4 objectives, got {0}")]
    TooManyObjectives(usize),
}

impl Error {
    /// Wraps an `io::Error` with the path it occurred on.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
