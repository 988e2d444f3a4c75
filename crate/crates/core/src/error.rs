use alloc::string::String;

use thiserror::Error;

/// Errors raised by the simulator and the analytic model.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Inconsistent scenario or framing parameters.
    #[error("configuration error: {0}")]
    Config(String),
    /// An argument is outside its admissible range.
    #[error("parameter error: {0}")]
    Parameter(String),
    /// A closed-form expression is evaluated outside its domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// Normal equations are singular or too badly conditioned to trust.
    #[error("rank-deficient normal equations (condition estimate {condition:e})")]
    Rank { condition: f64 },
    /// An iterative solver hit its iteration cap or blew up.
    #[error(
        "solver did not converge after {iterations} iterations (relative residual {residual:e})"
    )]
    Solver { iterations: usize, residual: f64 },
    /// The request would be too expensive to evaluate.
    #[error("cost guard: {0}")]
    CostGuard(String),
}

pub type Result<T> = core::result::Result<T, Error>;
