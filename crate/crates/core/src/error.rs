use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Graph or complex is malformed (dangling ids, negative lengths, disconnected).
    #[error("structural error: {0}")]
    Structural(String),
    /// A caller-supplied argument violates an operation's precondition.
    #[error("invalid argument: {0}")]
    Argument(String),
    /// The decomposition failed validation; one message per violated invariant.
    #[error("invalid degeneration spec:\n{}", .0.join("\n"))]
    Validation(Vec<String>),
    #[error("not maximally degenerate: {0}")]
    NotMaximallyDegenerate(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn argument(msg: impl Into<String>) -> Error {
    Error::Argument(msg.into())
}

pub(crate) fn structural(msg: impl Into<String>) -> Error {
    Error::Structural(msg.into())
}
