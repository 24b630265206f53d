use thiserror::Error;

/// Errors produced by the simulation and estimation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A routine that assumes random tone phases received a locked tone, or
    /// the other way round.
    #[error("phase mode mismatch: {0}")]
    ModeMismatch(String),

    #[error("ill-conditioned problem: {0}")]
    IllConditioned(String),

    /// The coherence series never changed sign; the scan has to be extended.
    #[error("coherence series does not cross zero (last A = {last:.4}); extend the scan")]
    NotCrossed { last: f64 },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
