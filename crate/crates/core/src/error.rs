use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FelabError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: left has n={left}, right has n={right}")]
    GridMismatch { left: usize, right: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("forced mode ({0}, {1}) lies outside the retained band of the grid")]
    ModeOutsideGrid(i64, i64),

    #[error("forced mode ({0}, {1}) has zero amplitude")]
    ZeroAmplitude(i64, i64),

    #[error("forced mode set is not symmetric: ({0}, {1}) present without its negative")]
    AsymmetricModes(i64, i64),

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("blow-up at step {step} (t = {time}): {reason}")]
    BlowUp { step: u64, time: f64, reason: String },

    #[error("kappa = {kappa} violates the exponential-moment budget (max {max})")]
    KappaBudget { kappa: f64, max: f64 },

    #[error("nonpositive value {value} at index {index} in decay fit")]
    NonPositive { index: usize, value: f64 },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, FelabError>;

impl FelabError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        FelabError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        FelabError::Io {
            path: path.into(),
            source,
        }
    }
}
