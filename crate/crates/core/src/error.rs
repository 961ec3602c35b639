use thiserror::Error;

/// Errors raised by the numerical and analytic parts of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("coefficient `{0}` must be strictly positive")]
    NonPositiveCoefficient(&'static str),

    #[error("gamma0 = {gamma0} exceeds gamma1 = {gamma1}")]
    GammaOrderViolation { gamma0: f64, gamma1: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields are defined on different grids")]
    GridMismatch,

    #[error("negative value {value:e} at cell {index}")]
    NegativeValue { index: usize, value: f64 },

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("step rejected at dt = {dt:e}: minimum value {min_value:e}")]
    StepRejected { dt: f64, min_value: f64 },

    #[error("oracle violation: {0}")]
    OracleViolation(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
