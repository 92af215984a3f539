use thiserror::Error;

/// Errors raised by the forecasters, oracles and game harnesses.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("capacity exceeded: {what} = {value} (limit {limit})")]
    Capacity { what: &'static str, value: usize, limit: usize },

    #[error("numeric failure: {message} after {iterations} iterations")]
    Numeric { message: String, iterations: usize },

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("protocol violation at round {round}: {message}")]
    ProtocolViolation { round: usize, message: String },

    #[error("ERM oracle failed at round {round}: {source}")]
    Erm {
        round: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn at_round(self, round: usize) -> Self {
        Error::Erm { round, source: Box::new(self) }
    }

    /// True for the capacity family, including capacity errors wrapped with a round.
    pub fn is_capacity(&self) -> bool {
        match self {
            Error::Capacity { .. } => true,
            Error::Erm { source, .. } => source.is_capacity(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}
