use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported order q = {q} (supported: {min}..={max})")]
    UnsupportedOrder { q: usize, min: usize, max: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("spectrum truncated: multipole {needed} required but spectrum stops at {ellmax}")]
    Truncated { needed: usize, ellmax: usize },

    #[error("grid under-resolved: {0}")]
    UnderResolved(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
