use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("{name} = {value} is outside the domain: {reason}")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// An iterative method exhausted its iteration budget.
    #[error("{method} did not converge after {iterations} iterations (best estimate {estimate}, residual {residual:e})")]
    Convergence {
        method: &'static str,
        iterations: usize,
        estimate: f64,
        residual: f64,
    },

    /// The target value is not attained on the admissible search interval.
    #[error("target {target} is outside the attainable range [{attained_lo}, {attained_hi}] of {method}")]
    Bracket {
        method: &'static str,
        target: f64,
        attained_lo: f64,
        attained_hi: f64,
    },

    /// Every value in a log-log fit fell below the noise floor, or too few were left.
    #[error("slope fit needs at least {needed} usable points, got {usable} (excluded nu: {excluded:?})")]
    InsufficientData {
        needed: usize,
        usable: usize,
        excluded: Vec<f64>,
    },
}

impl Error {
    pub(crate) fn domain(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::Domain {
            name,
            value,
            reason,
        }
    }
}
