use thiserror::Error;

/// Errors raised by network construction, bound evaluation and the
/// experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    /// Operand dimensions do not line up.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A documented precondition of an operation does not hold.
    #[error("contract violated: {0}")]
    Contract(String),

    /// Input lies outside the domain of a function (e.g. empty vector).
    #[error("domain error: {0}")]
    Domain(String),

    /// A quantitative hypothesis of a bound fails. Both sides are printed
    /// exactly as they were compared.
    #[error("hypothesis {name} violated: left side {lhs} < right side {rhs}")]
    Hypothesis {
        name: &'static str,
        lhs: String,
        rhs: String,
    },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn shape(msg: impl Into<String>) -> Error {
    Error::Shape(msg.into())
}

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}
