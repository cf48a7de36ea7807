//! Exhaustive grid maximization of the weighted objective, used as ground
//! truth for the solvers. It searches both power axes for every kind and
//! scheme and shares nothing with the solvers beyond the metric formulas.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::{weighted_terms_unchecked, ClusterSpec, MaScheme, PowerAllocation, SystemParams};

/// Uniform grid over `[0, budget]` on each axis, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n1: usize,
    pub n2: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { n1: 1000, n2: 1000 }
    }
}

impl GridSpec {
    pub fn square(n: usize) -> Self {
        Self { n1: n, n2: n }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n1 < 2 || self.n2 < 2 {
            return Err(invalid(format!("grid resolutions must be >= 2, got {}x{}", self.n1, self.n2)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub p1: f64,
    pub p2: f64,
    pub objective: f64,
    /// Bound on how far the true maximum may lie above `objective`: the
    /// empirical per-axis Lipschitz constants times the grid spacings.
    pub gap_bound: f64,
}

fn axis(budget: f64, n: usize, i: usize) -> f64 {
    if i + 1 == n {
        budget
    } else {
        budget * i as f64 / (n - 1) as f64
    }
}

pub fn oracle_solve(spec: &ClusterSpec, scheme: MaScheme, params: &SystemParams, grid: GridSpec) -> Result<OracleResult> {
    spec.validate()?;
    params.validate()?;
    grid.validate()?;
    let (b1, b2) = spec.budgets(scheme);
    let (n1, n2) = (grid.n1, grid.n2);
    let h1 = b1 / (n1 - 1) as f64;
    let h2 = b2 / (n2 - 1) as f64;

    let eval = |i: usize, j: usize| {
        let alloc = PowerAllocation::new(axis(b1, n1, i), axis(b2, n2, j), scheme);
        let [a, b] = weighted_terms_unchecked(spec, &alloc, params);
        a + b
    };

    let values: Vec<f64> = (0..n1)
        .into_par_iter()
        .flat_map_iter(|i| (0..n2).map(move |j| (i, j)))
        .map(|(i, j)| eval(i, j))
        .collect();

    // Row-major scan with strict improvement: ties go to the smallest (p1, p2).
    let mut best = (0usize, f64::NEG_INFINITY);
    for (k, &v) in values.iter().enumerate() {
        if v > best.1 {
            best = (k, v);
        }
    }

    let (mut lip1, mut lip2) = (0.0f64, 0.0f64);
    for i in 0..n1 {
        for j in 0..n2 {
            let v = values[i * n2 + j];
            if i + 1 < n1 {
                lip1 = lip1.max((values[(i + 1) * n2 + j] - v).abs() / h1);
            }
            if j + 1 < n2 {
                lip2 = lip2.max((values[i * n2 + j + 1] - v).abs() / h2);
            }
        }
    }

    let (i, j) = (best.0 / n2, best.0 % n2);
    Ok(OracleResult {
        p1: axis(b1, n1, i),
        p2: axis(b2, n2, j),
        objective: best.1,
        gap_bound: lip1 * h1 + lip2 * h2,
    })
}

/// Grid optimum under both schemes; OMA wins ties.
///
/// The OMA grid keeps the NOMA spacing over its doubled budgets, so every
/// NOMA grid power is also an OMA grid power.
pub fn oracle_best_ma(spec: &ClusterSpec, params: &SystemParams, grid: GridSpec) -> Result<(MaScheme, f64)> {
    grid.validate()?;
    let oma_grid = GridSpec {
        n1: 2 * grid.n1 - 1,
        n2: 2 * grid.n2 - 1,
    };
    let noma = oracle_solve(spec, MaScheme::Noma, params, grid)?;
    let oma = oracle_solve(spec, MaScheme::Oma, params, oma_grid)?;
    Ok(if noma.objective > oma.objective {
        (MaScheme::Noma, noma.objective)
    } else {
        (MaScheme::Oma, oma.objective)
    })
}
