//! One-dimensional concave maximization shared by the solvers.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Absolute tolerance on the change of the objective between outer rounds.
    pub tol_objective: f64,
    /// Cap on auxiliary-variable update rounds (and Dinkelbach iterations).
    pub max_outer_iters: usize,
    /// Cap on golden-section steps per 1-D search.
    pub max_inner_iters: usize,
    /// Width of the final bracket as a fraction of the search interval.
    pub tol_x_rel: f64,
    /// Relative change of every auxiliary variable below which an ascent
    /// that has also met `tol_objective` is converged.
    pub tol_aux_rel: f64,
    /// Initial powers as fractions of the budget, one ascent per entry.
    pub multistart_points: Vec<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol_objective: 1e-9,
            max_outer_iters: 200,
            max_inner_iters: 200,
            tol_x_rel: 1e-9,
            tol_aux_rel: 5e-7,
            multistart_points: vec![0.0, 0.5, 1.0],
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_objective > 0.0 && self.tol_x_rel > 0.0 && self.tol_aux_rel > 0.0) {
            return Err(invalid("tolerances must be positive"));
        }
        if self.max_outer_iters == 0 || self.max_inner_iters == 0 {
            return Err(invalid("iteration caps must be at least 1"));
        }
        if self.multistart_points.is_empty() {
            return Err(invalid("at least one multistart point is required"));
        }
        if let Some(f) = self.multistart_points.iter().find(|f| !(0.0..=1.0).contains(*f)) {
            return Err(invalid(format!("multistart fraction {f} outside [0, 1]")));
        }
        Ok(())
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_9; // (sqrt(5) - 1) / 2

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
///
/// Returns the best of the final bracket midpoint and both endpoints, so the
/// result never falls below `max(f(lo), f(hi))`.
pub fn maximize_concave_1d<F>(f: F, lo: f64, hi: f64, config: &SolverConfig) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(invalid(format!("non-finite interval [{lo}, {hi}]")));
    }
    if lo > hi {
        return Err(invalid(format!("empty interval: lo {lo} > hi {hi}")));
    }
    let eval = |x: f64| {
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite { x })
        }
    };

    let f_lo = eval(lo)?;
    if lo == hi {
        return Ok((lo, f_lo));
    }
    let f_hi = eval(hi)?;
    let tol = config.tol_x_rel * (hi - lo);

    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;
    for _ in 0..config.max_inner_iters {
        if b - a <= tol {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = eval(d)?;
        }
    }

    let mid = 0.5 * (a + b);
    let mut best = (mid, eval(mid)?);
    for cand in [(c, fc), (d, fd), (lo, f_lo), (hi, f_hi)] {
        if cand.1 > best.1 {
            best = cand;
        }
    }
    Ok(best)
}
