use thiserror::Error;

/// Errors produced by the flocking engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlockError {
    /// A numeric input was NaN or infinite.
    #[error("non-finite numeric input: {0}")]
    NonFinite(&'static str),

    /// A configuration value failed validation; `key` names the offending field.
    #[error("invalid configuration `{key}`: {message}")]
    Config { key: String, message: String },

    /// A call violated a structural precondition (empty sets, mismatched owners, ...).
    #[error("logic error: {0}")]
    Logic(String),

    /// An argument lies outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A scenario or data file could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),
}

impl FlockError {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        FlockError::Config {
            key: key.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, FlockError>;
