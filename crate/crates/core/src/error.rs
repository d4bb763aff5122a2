use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidSpec(String),

    #[error("profile load error at row {row}: {reason}")]
    ProfileRow { row: u64, reason: String },

    #[error("rule load error at row {row}: {reason}")]
    RuleRow { row: u64, reason: String },

    #[error("clustering error: {0}")]
    Clustering(String),

    #[error("join error: image `{image_id}` missing from model `{model_id}`")]
    Join { image_id: String, model_id: String },

    #[error("empty sample set")]
    EmptySamples,

    #[error("corrupt adaptation rule: {0}")]
    RuleCorruption(String),

    #[error("execution error: {0}")]
    Execution(String),

    #[error("workload error: {0}")]
    Workload(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

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
