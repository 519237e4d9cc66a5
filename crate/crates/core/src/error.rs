use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("no rows in {0}")]
    NoRows(String),

    #[error("row {row}: expected {expected} fields, found {found}")]
    Arity {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("row {row}, column '{column}': cannot parse '{value}' as a number")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("invalid split: {0}")]
    Split(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("training diverged at epoch {epoch}, batch {batch}: loss is {loss}")]
    NonFiniteLoss { epoch: usize, batch: usize, loss: f64 },

    #[error("lof needs more reference points than min_pts (n = {n}, min_pts = {min_pts})")]
    TooFewPoints { n: usize, min_pts: usize },

    #[error("metric undefined: {0}")]
    Metric(String),

    #[error("all differences zero")]
    AllDifferencesZero,

    #[error("model format: {0}")]
    Format(String),

    #[error("pruning contract violated: {0}")]
    PruneContract(String),

    #[error("shared training step failed: {0}")]
    Upstream(String),
}

impl Error {
    /// I/O error tagged with the path it concerns.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
