//! Error type shared across the crate.

use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    /// A physical quantity or argument is outside its admissible range.
    #[error("domain error: {0}")]
    Domain(String),

    /// A vector or matrix does not have the dimension the contract requires.
    #[error("dimension mismatch: expected {expected}, got {actual} ({context})")]
    Dimension {
        expected: usize,
        actual: usize,
        context: &'static str,
    },

    /// A filter produced a non-finite or runaway state. The harness maps
    /// this to the offending step when it records a run.
    #[error("filter diverged: {0}")]
    Diverged(String),

    /// A scenario description is internally inconsistent.
    #[error("invalid scenario: {0}")]
    Scenario(String),

    /// File I/O or parse failure in the CSV/JSON interfaces.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
