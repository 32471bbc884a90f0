use std::path::PathBuf;

/// Errors surfaced by the simulator and optimizers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("constraint violation: {0}")]
    ConstraintViolation(String),

    #[error("channel carries no signal on any subcarrier")]
    NoSignal,

    #[error("delay candidate set has {size} entries (cap {cap}); use the per-RIS common delay mode")]
    TooManyCandidates { size: u128, cap: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    /// Whether the error stems from user-supplied configuration rather than a
    /// runtime failure. Drives the CLI exit code.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::InvalidScenario(_) | Error::TooManyCandidates { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
