//! Per-cluster choice between NOMA and OMA by comparing solved objectives.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{ClusterSpec, MaScheme, SubproblemKind, SystemParams};
use crate::numeric::SolverConfig;
use crate::solver::{solve_noma, solve_oma, SolveResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterDecision {
    pub spec: ClusterSpec,
    pub chosen: MaScheme,
    /// Absent for EE+EE clusters, where OMA always dominates.
    pub noma_result: Option<SolveResult>,
    pub oma_result: SolveResult,
    pub objective: f64,
}

impl ClusterDecision {
    pub fn chosen_result(&self) -> &SolveResult {
        match (self.chosen, &self.noma_result) {
            (MaScheme::Noma, Some(r)) => r,
            _ => &self.oma_result,
        }
    }
}

/// Solves both schemes (OMA only for EE+EE) and keeps the better one; OMA
/// wins ties.
pub fn decide_cluster(spec: &ClusterSpec, params: &SystemParams, config: &SolverConfig) -> Result<ClusterDecision> {
    let oma = solve_oma(spec, params, config)?;
    let noma = match spec.kind() {
        SubproblemKind::EE => None,
        _ => Some(solve_noma(spec, params, config)?),
    };
    let (chosen, objective) = match &noma {
        Some(n) if n.objective > oma.objective => (MaScheme::Noma, n.objective),
        _ => (MaScheme::Oma, oma.objective),
    };
    Ok(ClusterDecision {
        spec: *spec,
        chosen,
        noma_result: noma,
        oma_result: oma,
        objective,
    })
}

/// Outcome of scanning a weight grid for the NOMA threshold of the SE+EE
/// subproblem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdScan {
    /// Smallest grid weight with NOMA >= OMA, when the grid shows a clean
    /// OMA-then-NOMA pattern.
    pub w1_min: Option<f64>,
    /// Number of times the better scheme flips along the grid.
    pub sign_changes: usize,
    /// `(w1, NOMA objective, OMA objective)` per grid point.
    pub points: Vec<(f64, f64, f64)>,
    pub diagnostic: Option<String>,
}

pub fn find_w1_min(
    template: &ClusterSpec,
    params: &SystemParams,
    config: &SolverConfig,
    w1_grid: &[f64],
) -> Result<ThresholdScan> {
    if template.kind() != SubproblemKind::SE {
        return Err(Error::WrongKind {
            solver: "w1 threshold scan",
            kind: template.kind(),
        });
    }
    if w1_grid.is_empty() {
        return Err(invalid("empty w1 grid"));
    }
    if w1_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("w1 grid must be strictly increasing"));
    }
    if w1_grid.iter().any(|w| !(*w > 0.0 && *w < 1.0)) {
        return Err(invalid("w1 grid must lie strictly inside (0, 1)"));
    }

    let mut points = Vec::with_capacity(w1_grid.len());
    for &w1 in w1_grid {
        let spec = template.with_w1(w1);
        let noma = solve_noma(&spec, params, config)?.objective;
        let oma = solve_oma(&spec, params, config)?.objective;
        points.push((w1, noma, oma));
    }

    let noma_wins: Vec<bool> = points.iter().map(|&(_, n, o)| n >= o).collect();
    let sign_changes = noma_wins.windows(2).filter(|w| w[0] != w[1]).count();
    let first_win = noma_wins.iter().position(|&b| b);

    let (w1_min, diagnostic) = match (first_win, sign_changes) {
        (None, _) => (None, None),
        (Some(i), 0 | 1) => (Some(points[i].0), None),
        (Some(_), n) => (
            None,
            Some(format!("better scheme changes {n} times along the w1 grid; no single threshold")),
        ),
    };
    Ok(ThresholdScan {
        w1_min,
        sign_changes,
        points,
        diagnostic,
    })
}
