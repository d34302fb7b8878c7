use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("structural mismatch: {0}")]
    Structural(String),

    /// Gamma evaluated at a non-positive integer.
    #[error("gamma pole at z = {0}")]
    Pole(i64),

    /// The result overflows f64; the logarithm is still reported.
    #[error("range overflow, log value = {log_value}")]
    Range { log_value: f64 },

    #[error("insufficient decay in {what}: relative endpoint magnitude {magnitude:e}")]
    Accuracy { what: String, magnitude: f64 },

    #[error("under-resolved: {0}")]
    Resolution(String),

    #[error("window coverage: boundary mass {0:e}")]
    Coverage(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("branch cut crossed at {0}")]
    Branch(String),

    #[error("validity: {0}")]
    Validity(String),

    #[error("linear algebra failure: {0}")]
    Linalg(String),
}

pub type Result<T> = std::result::Result<T, Error>;
