use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid maneuver spec: {0}")]
    InvalidSpec(String),

    #[error("value out of range: {0}")]
    Range(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("singular geometry: {0}")]
    SingularGeometry(String),

    #[error("rollout diverged at step {step}")]
    Divergence { step: usize },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("numerical failure in `{0}`")]
    NumericalFailure(String),

    #[error("sweep failed: {0}")]
    Sweep(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: String, expected: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("evaluation error: non-finite `{0}`")]
    Evaluation(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
