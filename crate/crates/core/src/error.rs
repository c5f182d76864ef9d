use thiserror::Error;

/// Errors surfaced by the analytic and simulation layers.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An argument is outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// An operation was called outside the parameter regime it is valid in.
    #[error("regime error: {0}")]
    Regime(String),

    /// An exact-enumeration or generation size budget was exceeded.
    #[error("budget exceeded: {0}")]
    Budget(String),

    /// An iterative solver failed to reach its tolerance.
    #[error("numeric failure: {0}")]
    NonConvergence(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn regime(msg: impl Into<String>) -> Self {
        Error::Regime(msg.into())
    }

    pub fn budget(msg: impl Into<String>) -> Self {
        Error::Budget(msg.into())
    }
}
