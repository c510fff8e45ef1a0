use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the domain where a model or formula is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// The trace maximum sits on the first or last sample, so the sweep
    /// window did not bracket the resonance.
    #[error("peak at sweep edge (sample {index} of {len})")]
    PeakAtEdge { index: usize, len: usize },

    /// Malformed or inconsistent file contents.
    #[error("format error: {0}")]
    Format(String),

    /// Invalid configuration value or unknown key.
    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
