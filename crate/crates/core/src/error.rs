use std::path::PathBuf;

use crate::harness::ConfigError;
use crate::model::ModelViolation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid model: {}", join(.0))]
    InvalidModel(Vec<ModelViolation>),

    /// Every parameter with positive weight assigns zero likelihood to the observation.
    #[error("degenerate evidence: observation has zero likelihood under every parameter in the support")]
    DegenerateEvidence,

    #[error("frequency is undefined for an estimator with no observations")]
    EmptyEstimator,

    #[error("checkpoint {checkpoint} is beyond the trace length {len}")]
    CheckpointOutOfRange { checkpoint: usize, len: usize },

    #[error("unsupported instance: {0}")]
    UnsupportedInstance(String),

    #[error("configuration error: {}", join(.0))]
    Config(Vec<ConfigError>),

    #[error("malformed trace at line {line}: {message}")]
    Trace { line: usize, message: String },

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

fn join<T: std::fmt::Display>(items: &[T]) -> String {
    items
        .iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
