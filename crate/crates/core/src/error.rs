//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A required column is absent from the input header.
    #[error("schema error: missing column `{0}`")]
    MissingColumn(String),

    /// A data row failed validation (bad rating, empty text, ...).
    #[error("validation error at data row {row}: {message}")]
    InvalidRow { row: usize, message: String },

    /// Invalid configuration (ratios, criteria names, sequence lengths, ...).
    #[error("config error: {0}")]
    Config(String),

    /// Invalid input to an operation.
    #[error("validation error: {0}")]
    Validation(String),

    /// A stored artifact does not match what the caller expects
    /// (vocabulary size, hidden width, model kind, ...).
    #[error("artifact mismatch: {0}")]
    ArtifactMismatch(String),

    /// Non-finite values where finite numbers are required.
    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("tensor store error: {0}")]
    TensorStore(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// `true` for errors caused by user-supplied configuration or data.
    pub fn is_user_error(&self) -> bool {
        matches!(
            self,
            Error::MissingColumn(_)
                | Error::InvalidRow { .. }
                | Error::Config(_)
                | Error::Validation(_)
        )
    }
}
