//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by parsing, configuration, and the pipeline stages.
#[derive(Debug, Error)]
pub enum GlcError {
    /// A line of the input corpus could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// An input value violates a documented invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// A configuration value is out of range or inconsistent.
    #[error("configuration error: {0}")]
    Config(String),

    /// An external file does not match its expected format.
    #[error("format error: {0}")]
    Format(String),

    /// A token was requested from an embedding table that does not contain it.
    #[error("missing token in embedding table: {0:?}")]
    MissingToken(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl GlcError {
    pub(crate) fn validation(message: impl Into<String>) -> Self {
        GlcError::Validation(message.into())
    }

    pub(crate) fn config(message: impl Into<String>) -> Self {
        GlcError::Config(message.into())
    }

    pub(crate) fn format(message: impl Into<String>) -> Self {
        GlcError::Format(message.into())
    }
}

pub type Result<T> = std::result::Result<T, GlcError>;
