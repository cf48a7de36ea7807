//! Power allocation solvers for a single cluster.

pub mod noma;
pub mod oma;

use serde::{Deserialize, Serialize};

use crate::model::PowerAllocation;

pub use noma::{solve_noma, solve_noma_es, solve_noma_se, solve_noma_ss, FpAux, FpTrace, RESOLUTION};
pub use oma::{dinkelbach_ee, solve_oma, DinkelbachOutcome, DinkelbachTrace, DINKELBACH_EPS};

/// How a solution was reached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum SolveTrace {
    /// No iteration needed (full power or a degenerate weight).
    ClosedForm,
    FractionalProgramming(FpTrace),
    /// One Dinkelbach run per EE user that needed one.
    Dinkelbach { runs: Vec<DinkelbachTrace> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub alloc: PowerAllocation,
    pub objective: f64,
    pub converged: bool,
    pub trace: SolveTrace,
}

impl SolveResult {
    /// Objective value after each outer iteration.
    pub fn objective_trace(&self) -> Vec<f64> {
        match &self.trace {
            SolveTrace::FractionalProgramming(fp) => fp.objectives.clone(),
            _ => vec![self.objective],
        }
    }

    pub fn iterations(&self) -> usize {
        match &self.trace {
            SolveTrace::ClosedForm => 0,
            SolveTrace::FractionalProgramming(fp) => fp.objectives.len(),
            SolveTrace::Dinkelbach { runs } => runs.iter().map(|r| r.lambdas.len()).sum(),
        }
    }
}
