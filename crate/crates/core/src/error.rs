use thiserror::Error;

use crate::exprs::ExprError;
use crate::flow::FlowError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: expected {expected}, got {got} ({what})")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("|eps| = {eps} exceeds the admissible bound {max}")]
    EpsOutOfRange { eps: f64, max: f64 },
    #[error("perturbation field returned a non-finite value at t = {t}")]
    NonFiniteField { t: f64 },
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error("quadrature: {0}")]
    Quadrature(String),
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("degenerate: {0}")]
    Degenerate(String),
}

impl Error {
    /// Errors that come from the numerics rather than from bad input.
    pub fn is_numerical(&self) -> bool {
        !matches!(
            self,
            Error::InvalidSystem(_)
                | Error::InvalidArgument(_)
                | Error::Dimension { .. }
                | Error::EpsOutOfRange { .. }
                | Error::Expr(_)
        )
    }
}
