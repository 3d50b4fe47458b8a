use thiserror::Error;

/// Errors shared by all modules.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied parameter is outside the documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The requested computation exceeds a configured resource cap.
    #[error("capability exceeded: {0}")]
    Capability(String),

    /// A structural assumption of the model failed at runtime
    /// (e.g. more than one closed communicating class was found).
    #[error("model violation: {0}")]
    ModelViolation(String),

    /// An internal invariant was breached; indicates a bug upstream.
    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
