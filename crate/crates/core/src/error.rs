use thiserror::Error;

/// Errors raised anywhere in the laboratory.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// The subdivision budget ran out before the error estimate met the tolerance.
    #[error("quadrature did not converge: value {value:e}, error estimate {abs_error_estimate:e} after {subdivisions} panels")]
    NonConvergent { value: f64, abs_error_estimate: f64, subdivisions: usize },
    #[error("invalid endpoint hint: {0}")]
    InvalidHint(String),
    #[error("invalid interval ({lower}, {upper})")]
    InvalidInterval { lower: f64, upper: f64 },
    #[error("integrand is not finite at s = {at:e}")]
    NonFinite { at: f64 },
    #[error("measure is not admissible: {0}")]
    AdmissibilityViolation(String),
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    #[error("result leaves the space: {0}")]
    DomainViolation(String),
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unknown builtin `{0}`")]
    UnknownBuiltin(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("serialization: {0}")]
    Serialization(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}
