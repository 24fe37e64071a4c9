use std::path::PathBuf;

use crate::model::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid dataset: {0}")]
    InvalidDataset(ValidationReport),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("singular model {model}: U_gamma is not numerically positive definite")]
    SingularModel { model: String },

    #[error("model space too large for enumeration: {models} models exceed the limit of {limit}")]
    EnumerationTooLarge { models: u128, limit: u128 },

    #[error("quadrature requires proper g-prior")]
    ImproperPrior,

    #[error("chain aborted at iteration {iteration}: {reason}")]
    ChainAborted { iteration: usize, reason: String },

    #[error("non-finite state at coordinate {coordinate}: {reason}")]
    Diverged { coordinate: usize, reason: String },

    #[error("no selected coefficients")]
    NoSelection,

    #[error("beta recording disabled")]
    BetaRecordingDisabled,

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }
}
