use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside the mathematical domain (negative θ, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A caller broke a precondition (index out of range, length mismatch, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A truncation or quadrature tolerance could not be met.
    #[error("quadrature error: {0}")]
    Quadrature(String),

    /// An iterative method did not converge.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// The profile optimizer made no progress from any start.
    #[error("optimization error: {0}")]
    Optimization(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn quadrature(msg: impl Into<String>) -> Self {
        Error::Quadrature(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
