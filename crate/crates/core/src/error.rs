use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("environment has no species with positive mass")]
    EmptyEnvironment,

    #[error("sample contains no tokens")]
    EmptySample,

    #[error("line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("unknown column `{0}`")]
    Lookup(String),

    #[error("insufficient data: {successes} successful replicates, need at least {required}")]
    InsufficientData { successes: usize, required: usize },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn format(line: usize, msg: impl Into<String>) -> Self {
        Error::Format {
            line,
            message: msg.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
