use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("decomposition failed: {0}")]
    Decomposition(String),

    /// The Gram matrix of a design was singular or too ill-conditioned to invert.
    #[error("singular gram matrix (condition estimate {condition:.3e})")]
    SingularGram { condition: f64 },

    #[error("invalid truncation interval [{lower}, {upper}]")]
    InvalidTruncation { lower: f64, upper: f64 },

    #[error("failed to parse {what}: {detail}")]
    Parse { what: String, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidConfig(msg.into()))
}
