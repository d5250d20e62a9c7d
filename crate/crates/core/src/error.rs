//! Crate-wide error type.

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid parameters when building a value (lottery, problem, spec).
    #[error("construction error: {0}")]
    Construction(String),

    /// Internally inconsistent model configuration.
    #[error("config error: {0}")]
    Config(String),

    /// Model evaluated outside its representation guarantees.
    #[error("model error: {0}")]
    Model(String),

    /// Bad or insufficient input data.
    #[error("data error: {0}")]
    Data(String),

    /// Malformed record in an input file.
    #[error("data error at line {line}: {msg}")]
    DataAt { line: usize, msg: String },

    /// Parameter combination the operation explicitly does not support.
    #[error("unsupported parameter: {0}")]
    Unsupported(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn construction(msg: impl Into<String>) -> Self {
        Error::Construction(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn model(msg: impl Into<String>) -> Self {
        Error::Model(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn unsupported(msg: impl Into<String>) -> Self {
        Error::Unsupported(msg.into())
    }
}
