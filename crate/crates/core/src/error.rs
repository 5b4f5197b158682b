use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Shapes of two inputs do not line up.
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    /// A scalar parameter (k, p, s, rho, sigma, ...) is outside its legal range.
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("non-finite value at {location}")]
    NonFinite { location: String },

    /// Factorization failure. `condition` is NaN when no spectrum was
    /// available to estimate it from.
    #[error("numeric failure in {context} (condition estimate {condition:e})")]
    Numeric { context: &'static str, condition: f64 },

    #[error("empty group: {0}")]
    EmptyGroup(String),

    #[error("worker pool: {0}")]
    Workers(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn dim(context: &'static str, expected: usize, actual: usize) -> Self {
        Error::Dimension {
            context,
            expected,
            actual,
        }
    }
}
