//! Crate-wide error type.
//!
//! Shape and domain violations in the numeric layer are programmer errors
//! and panic with a message naming the offending shapes; everything that
//! depends on external input (files, configs, dataset geometry) surfaces
//! through [`HqtlpError`].

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HqtlpError {
    /// Invalid configuration: bad window length, empty training set, etc.
    #[error("configuration error: {0}")]
    Config(String),

    /// A line of an input file could not be tokenized or parsed.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A parsed record violates the file's invariants (range, uniqueness).
    #[error("validation error at line {line}: {msg}")]
    Validate { line: usize, msg: String },

    /// Malformed or incompatible checkpoint data.
    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, HqtlpError>;

impl HqtlpError {
    pub fn config(msg: impl Into<String>) -> Self {
        HqtlpError::Config(msg.into())
    }

    /// Process exit code for the CLI: 2 for usage/config errors, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HqtlpError::Config(_) => 2,
            _ => 1,
        }
    }
}
