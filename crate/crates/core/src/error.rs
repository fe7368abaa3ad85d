use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Caller passed inconsistent arguments (width mismatch, bad length, ...).
    #[error("usage error: {0}")]
    Usage(String),
    /// Parameters outside their admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),
    /// A random code could not be assembled with the requested shape.
    #[error("code construction failed: {0}")]
    Construction(String),
    /// Malformed text input.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}

pub(crate) fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}
