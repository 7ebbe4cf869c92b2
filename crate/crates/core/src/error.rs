use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// A risk was requested over an empty sample.
    #[error("risk undefined on empty dataset ({0})")]
    Undefined(String),

    #[error("training diverged at iteration {iteration}: cost {cost}")]
    TrainingDiverged { iteration: usize, cost: f64 },

    #[error("lambda_0 tuning failed for lambda_s = {lambda_s} after {attempts} attempts (last type-I {last_type1}, last lambda_0 {last_lambda0})")]
    Tuning {
        lambda_s: f64,
        attempts: usize,
        last_type1: f64,
        last_lambda0: f64,
        trajectory: Vec<f64>,
    },

    #[error("algorithm failure: {0}")]
    Algorithm(String),

    #[error("no hypothesis satisfies the type-I constraint (smallest surrogate type-I {min_type1})")]
    Infeasible { min_type1: f64 },

    #[error("split error: {0}")]
    Split(String),

    #[error("ingest error: {0}")]
    Ingest(String),

    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
