use thiserror::Error;

/// Errors raised by the library layer.
#[derive(Debug, Clone, PartialEq, Error, serde::Serialize)]
pub enum AmError {
    /// A parameter lies outside the domain where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// One or more inequalities required for a closed-form bound failed.
    #[error("precondition failed: {}", .failed.join(", "))]
    Precondition { failed: Vec<&'static str> },

    /// The empirical Lyapunov exponent is not confidently negative.
    #[error("inconclusive: Lyapunov exponent {value} (se {std_error}) is not confidently negative")]
    Inconclusive { value: f64, std_error: f64 },

    /// A root finder could not bracket a sign change.
    #[error("no sign change: {0}")]
    NoBracket(String),
}

pub type Result<T> = std::result::Result<T, AmError>;

pub(crate) fn domain(msg: impl Into<String>) -> AmError {
    AmError::Domain(msg.into())
}
