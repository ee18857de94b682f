use thiserror::Error;

/// Errors raised by the library. Every variant maps onto one FFI status code.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A caller broke an operation's precondition (mixed systems, m < 2, bad index, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// An orbit or window does not reach far enough for the requested computation.
    #[error("horizon exceeded: needed {needed}, available {available} ({context})")]
    Horizon {
        needed: usize,
        available: usize,
        context: &'static str,
    },

    /// Desubstitution found zero or several admissible offsets.
    #[error("recognizability failure: {0}")]
    Recognizability(String),

    /// A word is not in the language of the subshift.
    #[error("illegal word: {0}")]
    IllegalWord(String),

    /// A system description failed validation.
    #[error("invalid system: {0}")]
    InvalidSystem(String),

    /// Experiment configuration could not be parsed or validated.
    #[error("config error: {0}")]
    Config(String),

    /// The operation needs a property the system does not have (minimality, an implemented factor map).
    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}
