use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("row {row}: {reason}")]
    Record { row: usize, reason: String },

    #[error("row {row}: time {time} precedes previous time {previous}")]
    NonMonotoneTime {
        row: usize,
        time: String,
        previous: String,
    },

    #[error("crossed book: best ask {ask} <= best bid {bid}")]
    CrossedBook { bid: i64, ask: i64 },

    #[error("empty book")]
    EmptyBook,

    #[error("book inconsistency: {0}")]
    Inconsistent(String),

    #[error("feature unavailable: {0}")]
    Feature(String),

    #[error("time {0} lies outside the trading session")]
    OutOfSession(String),

    #[error("clustering: {0}")]
    Clustering(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("event {0} has no cluster label")]
    Unlabeled(usize),

    #[error("undefined statistic: {0}")]
    Undefined(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
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

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
