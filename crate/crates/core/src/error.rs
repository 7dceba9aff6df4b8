use std::time::Duration;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, DiscError>;

#[derive(Debug, Error)]
pub enum DiscError {
    /// A generation or reward backend failed.
    #[error("backend error: {0}")]
    Backend(String),

    /// A backend answered with something we could not interpret.
    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("request timed out after {0:?}")]
    Timeout(Duration),

    #[error("retries exhausted after {attempts} attempts: {last}")]
    RetriesExhausted { attempts: usize, last: String },

    #[error("invalid trajectory encoding: {0}")]
    InvalidTrajectory(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid problem set: {0}")]
    ProblemSet(String),

    #[error("invalid run log: {0}")]
    RunLog(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
