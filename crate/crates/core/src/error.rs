use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by model construction, kernels, solvers and samplers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("degenerate gradient frame: {0}")]
    DegenerateFrame(&'static str),

    #[error("non-finite state after {events} events at t = {time}: {what}")]
    NonFiniteState {
        events: u64,
        time: f64,
        what: &'static str,
    },

    #[error("{}: row {row}: {message}", path.display())]
    Dataset {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
