use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("observation window must end at a positive time, got {0}")]
    InvalidWindow(f64),

    #[error("event times not strictly increasing at index {index}")]
    NonMonotone { index: usize },

    #[error("event time {time} at index {index} lies outside (0, {t_end}]")]
    OutOfWindow { index: usize, time: f64, t_end: f64 },

    #[error("mark mismatch: {0}")]
    MarkMismatch(String),

    #[error("index {index} out of range for sequence of length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("unsupported weight context: {0}")]
    UnsupportedContext(String),

    #[error("non-finite loss (sequence {sequence:?}, iteration {iteration:?})")]
    NonFiniteLoss {
        sequence: Option<usize>,
        iteration: Option<usize>,
    },

    #[error("optimizer diverged at iteration {iteration}: loss {loss}")]
    Diverged { iteration: usize, loss: f64 },

    #[error("event count exceeded the explosion guard of {cap}")]
    ExplosionGuard { cap: usize },

    #[error("parameter names do not match: {0}")]
    NameMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn non_finite_in(sequence: usize) -> Self {
        Error::NonFiniteLoss {
            sequence: Some(sequence),
            iteration: None,
        }
    }

    /// Whether this error comes from numerical trouble rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFiniteLoss { .. }
                | Error::Diverged { .. }
                | Error::ExplosionGuard { .. }
                | Error::DomainError(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
