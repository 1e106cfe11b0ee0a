use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or out-of-range arguments.
    #[error("invalid input: {0}")]
    Input(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// An enumeration or construction would exceed a configured cap.
    #[error("resource cap exceeded: {0}")]
    Resource(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("degenerate instance: {0}")]
    Degenerate(String),

    #[error("construction failed: {0}")]
    Construction(String),

    #[error("transport unsound: {0}")]
    TransportUnsound(String),

    #[error("sampler: {0}")]
    Sampler(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }
}
