//! Error types shared by every pricing module.

use std::fmt;

use thiserror::Error;

/// A violated input invariant. Raised, never clamped.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationError {
    pub field: &'static str,
    pub message: String,
    pub value: f64,
}

impl ValidationError {
    pub fn new(field: &'static str, message: impl Into<String>, value: f64) -> Self {
        Self {
            field,
            message: message.into(),
            value,
        }
    }
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (got {} = {})", self.message, self.field, self.value)
    }
}

impl std::error::Error for ValidationError {}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(#[from] ValidationError),

    #[error("drawdown already triggered: y = {y} >= k = {k}")]
    AlreadyTriggered { y: f64, k: f64 },

    #[error("series `{what}` did not converge within {terms} terms")]
    NotConverged { what: &'static str, terms: usize },

    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    NoBracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("degenerate denominator in {what}: {value}")]
    DegenerateDenominator { what: &'static str, value: f64 },

    #[error("scaled exponent {exponent} overflows f64")]
    Overflow { exponent: f64 },

    #[error("simulation config: {0}")]
    Config(String),

    #[error("insufficient paths: {paths} < {required}")]
    InsufficientPaths { paths: usize, required: usize },
}

impl Error {
    /// True for failures of the numerical machinery rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotConverged { .. }
                | Error::NoBracket { .. }
                | Error::DegenerateDenominator { .. }
                | Error::Overflow { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Shorthand for returning a [`ValidationError`] wrapped in [`Error`].
pub(crate) fn invalid<T>(field: &'static str, message: impl Into<String>, value: f64) -> Result<T> {
    Err(ValidationError::new(field, message, value).into())
}
