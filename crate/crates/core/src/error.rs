use thiserror::Error;

use crate::model::SubproblemKind;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("solver for {solver} does not accept subproblem {kind:?}")]
    WrongKind {
        solver: &'static str,
        kind: SubproblemKind,
    },

    #[error("allocation ({p1}, {p2}) mW violates the power budgets ({b1}, {b2}) mW")]
    Infeasible { p1: f64, p2: f64, b1: f64, b2: f64 },

    #[error("objective is not finite at x = {x}")]
    NonFinite { x: f64 },

    #[error("unsorted input: {0}")]
    Unsorted(String),

    #[error("{0} did not converge within the iteration cap")]
    NotConverged(String),
}

impl Error {
    /// True for errors caused by the caller's input rather than by the numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::InvalidInput(_) | Error::WrongKind { .. } | Error::Unsorted(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
