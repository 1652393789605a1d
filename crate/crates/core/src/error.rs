use std::io;

use thiserror::Error;

/// Crate-wide error type.
///
/// Variants are grouped by failure class so front ends can map them onto
/// distinct exit codes without string matching.
#[derive(Debug, Error)]
pub enum Error {
    /// An input lies outside the domain a model is defined on.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration document or parameter set failed validation.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// The flight simulation could not complete.
    #[error("simulation failed: {0}")]
    Simulation(String),

    /// A network transfer failed before a response was received.
    #[error("transport error: {0}")]
    Transport(String),

    /// The peer answered, but not with what the protocol requires.
    #[error("protocol error: {0}")]
    Protocol(String),

    /// Malformed input data.
    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    /// Data was well-formed but unusable (empty, out of order, ...).
    #[error("data error: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parse(row: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            row,
            message: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
