//! Crate-wide error type.
//!
//! Recoverable misuse (bad sizes, unknown labels, malformed files) is
//! reported through [`Error`]; contract violations that indicate a bug in
//! the caller (out-of-range wires, non-finite observations) panic instead.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is structurally invalid.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A training loss or gradient stopped being finite; the message
    /// carries the diagnostic (update index, offending component).
    #[error("training aborted: {0}")]
    NonFinite(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("config parse error: {0}")]
    TomlParse(#[from] toml::de::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    /// Malformed data encountered while reading results back in.
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
