use thiserror::Error;

use crate::newton::IterationTrace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation (out-of-range lag,
    /// mismatched index sets, grids too coarse for the requested lags, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// External data violates an invariant (conjugate symmetry, completeness).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// `Ψ⁻¹ + Q` is not strictly positive on the frequency grid.
    #[error("infeasible dual point: min of Ψ⁻¹+Q over the grid is {min_value:e}")]
    Infeasible { min_value: f64 },

    /// A factorization failed, usually because a matrix that must be
    /// Hermitian positive definite is not.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("no convergence after {iterations} iterations (gradient norm {grad_norm:e})")]
    NotConverged {
        iterations: usize,
        grad_norm: f64,
        trace: Box<IterationTrace>,
    },

    #[error("line search stagnated at iteration {iteration} (step fell below {min_step:e})")]
    Stagnation {
        iteration: usize,
        min_step: f64,
        trace: Box<IterationTrace>,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// The iteration trace carried by solver failures, if any.
    pub fn trace(&self) -> Option<&IterationTrace> {
        match self {
            Error::NotConverged { trace, .. } | Error::Stagnation { trace, .. } => Some(trace),
            _ => None,
        }
    }
}
