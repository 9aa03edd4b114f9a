use thiserror::Error;

/// Errors produced by the code constructions and the experiment harness.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodeError {
    /// A caller violated a precondition (bad length, out-of-range element, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// No codeword lies within the decoding radius. This is an ordinary outcome.
    #[error("no codeword within the decoding radius")]
    DecodeFailure,
    /// A local corrector could not produce an answer.
    #[error("local correction failed: {0}")]
    CorrectFailure(String),
    /// The requested parameters violate a constraint of the construction.
    #[error("infeasible parameters: {0}")]
    Infeasible(String),
    /// The code does not provide the requested capability.
    #[error("not supported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, CodeError>;

pub(crate) fn invalid(msg: impl Into<String>) -> CodeError {
    CodeError::InvalidArgument(msg.into())
}

pub(crate) fn infeasible(msg: impl Into<String>) -> CodeError {
    CodeError::Infeasible(msg.into())
}
