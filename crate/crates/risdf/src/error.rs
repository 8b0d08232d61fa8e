use thiserror::Error;

/// Error type shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration value or inconsistent parameter combination.
    #[error("config error: {0}")]
    Config(String),

    /// An array or matrix did not have the declared shape.
    #[error("shape mismatch in `{field}`: expected {expected}, got {actual}")]
    Shape {
        field: String,
        expected: String,
        actual: String,
    },

    /// A persisted file failed validation (bad magic, version, truncation, ...).
    #[error("format error: {0}")]
    Format(String),

    /// A numeric precondition was violated (non-positive distance, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// An operation was invoked out of order (e.g. phase 2 before phase 1).
    #[error("sequencing error: {0}")]
    Sequencing(String),

    /// A loss or gradient became non-finite during training.
    #[error("non-finite value in {what} (sample {sample})")]
    NonFinite { what: String, sample: usize },

    /// A guarded operation refused to run (enumeration budget exceeded, ...).
    #[error("guard refused: {0}")]
    Guard(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn shape(field: &str, expected: impl std::fmt::Display, actual: impl std::fmt::Display) -> Self {
        Error::Shape {
            field: field.to_string(),
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }
}
