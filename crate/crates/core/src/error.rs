use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid lattice shape: {0}")]
    Shape(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },
    #[error("invalid rule template: {0}")]
    Template(String),
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    #[error("state space too large: {0}")]
    StateSpace(String),
    #[error("{0}")]
    Precondition(String),
    #[error("serialization: {0}")]
    Serde(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
