use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("singular linear system (condition estimate {condition:.3e})")]
    Singular { condition: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid action {action} (num_actions = {num_actions})")]
    InvalidAction { action: usize, num_actions: usize },

    #[error("episode already terminated")]
    EpisodeTerminated,

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
