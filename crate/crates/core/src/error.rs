use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("probability mass sums to {sum}, more than 1e-6 away from 1")]
    Unnormalized { sum: f64 },

    #[error("step mismatch: {left} MW vs {right} MW")]
    StepMismatch { left: f64, right: f64 },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("LP file line {line}: {msg}")]
    LpParse { line: usize, msg: String },

    #[error("scenario field `{field}`: {msg}")]
    Scenario { field: String, msg: String },

    #[error("cannot parse scenario {path}: {source}")]
    ScenarioParse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("solver did not produce a solution: {0}")]
    Solver(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
