//! OMA solutions. Each user transmits alone every other slot with twice its
//! NOMA budget, so the weighted sum separates per user: SE users go to full
//! power and EE users run Dinkelbach's algorithm.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::{raw, weighted_objective, ClusterSpec, MaScheme, Metric, PowerAllocation, SystemParams};
use crate::numeric::SolverConfig;

use super::{SolveResult, SolveTrace};

/// Stop once `F(lambda) = max_p log2(1 + gamma p) - lambda (phi p + q)`
/// falls below this value.
pub const DINKELBACH_EPS: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DinkelbachTrace {
    pub lambdas: Vec<f64>,
    pub residuals: Vec<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DinkelbachOutcome {
    pub p: f64,
    pub ee: f64,
    pub trace: DinkelbachTrace,
}

/// Maximizer of the parametric problem `log2(1 + gamma p) - lambda (phi p + q)`
/// on `[0, p_max]`: the stationary point, clipped.
fn inner_argmax(gamma: f64, lambda: f64, phi: f64, p_max: f64) -> f64 {
    if lambda <= 0.0 {
        return p_max;
    }
    (1.0 / (lambda * phi * LN_2) - 1.0 / gamma).clamp(0.0, p_max)
}

/// Maximizes `log2(1 + gamma p) / (phi p + q)` over `p` in `[0, p_max]`.
pub fn dinkelbach_ee(gamma: f64, p_max: f64, params: &SystemParams, config: &SolverConfig) -> Result<DinkelbachOutcome> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(invalid(format!("gamma must be positive, got {gamma}")));
    }
    if !(p_max.is_finite() && p_max > 0.0) {
        return Err(invalid(format!("p_max must be positive, got {p_max}")));
    }
    params.validate()?;

    let mut trace = DinkelbachTrace::default();
    let mut lambda = 0.0;
    let mut p = p_max;
    for _ in 0..config.max_outer_iters {
        p = inner_argmax(gamma, lambda, params.phi, p_max);
        // lambda is the EE of the previous iterate, which attains exactly zero
        // in the parametric problem, so F(lambda) >= 0.
        let residual = (raw::se_oma(gamma, p) - lambda * params.consumed(p)).max(0.0);
        trace.lambdas.push(lambda);
        trace.residuals.push(residual);
        if residual < DINKELBACH_EPS {
            trace.converged = true;
            break;
        }
        lambda = raw::ee_oma(gamma, p, params);
    }
    let ee = raw::ee_oma(gamma, p, params);
    Ok(DinkelbachOutcome { p, ee, trace })
}

/// Optimal OMA allocation for any subproblem kind.
pub fn solve_oma(spec: &ClusterSpec, params: &SystemParams, config: &SolverConfig) -> Result<SolveResult> {
    spec.validate()?;
    params.validate()?;
    config.validate()?;
    let (b1, b2) = spec.budgets(MaScheme::Oma);

    let mut runs = Vec::new();
    let mut converged = true;
    let mut pick = |gamma: f64, budget: f64, metric: Metric| -> Result<f64> {
        match metric {
            Metric::Spectral => Ok(budget),
            Metric::Energy => {
                let out = dinkelbach_ee(gamma, budget, params, config)?;
                converged &= out.trace.converged;
                runs.push(out.trace);
                Ok(out.p)
            }
        }
    };
    let p1 = pick(spec.gamma1, b1, spec.class1.metric())?;
    let p2 = pick(spec.gamma2, b2, spec.class2.metric())?;

    let alloc = PowerAllocation::new(p1, p2, MaScheme::Oma);
    let objective = weighted_objective(spec, &alloc, params)?;
    let trace = if runs.is_empty() {
        SolveTrace::ClosedForm
    } else {
        SolveTrace::Dinkelbach { runs }
    };
    Ok(SolveResult {
        alloc,
        objective,
        converged,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SubproblemKind;

    fn grid_ee(gamma: f64, p_max: f64, params: &SystemParams, n: usize) -> (f64, f64) {
        (0..n)
            .map(|i| p_max * i as f64 / (n - 1) as f64)
            .map(|p| (p, (1.0 + gamma * p).log2() / (params.phi * p + params.q)))
            .fold((0.0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc })
    }

    #[test]
    fn first_step_is_full_power() {
        let params = SystemParams::default();
        let out = dinkelbach_ee(1.0, 20.0, &params, &SolverConfig::default()).unwrap();
        assert_eq!(out.trace.lambdas[0], 0.0);
        assert_eq!(inner_argmax(1.0, 0.0, params.phi, 20.0), 20.0);
    }

    #[test]
    fn huge_circuit_power_goes_full_power() {
        let params = SystemParams {
            q: 1e6,
            ..Default::default()
        };
        let out = dinkelbach_ee(1.0, 20.0, &params, &SolverConfig::default()).unwrap();
        assert_eq!(out.p, 20.0);
    }

    #[test]
    fn matches_dense_grid() {
        let params = SystemParams::default();
        let out = dinkelbach_ee(1.0, 20.0, &params, &SolverConfig::default()).unwrap();
        let (gp, gee) = grid_ee(1.0, 20.0, &params, 1_000_001);
        assert!(out.trace.converged);
        assert!(((out.ee - gee) / gee).abs() < 1e-6, "{} vs {}", out.ee, gee);
        assert!(((out.p - gp) / gp).abs() < 1e-3, "{} vs {}", out.p, gp);
        assert!(out.ee >= gee - 1e-15);
    }

    #[test]
    fn lambdas_increase_and_residual_ends_small() {
        let params = SystemParams::default();
        for gamma in [0.1, 1.0, 7.5, 100.0] {
            let out = dinkelbach_ee(gamma, 20.0, &params, &SolverConfig::default()).unwrap();
            let t = &out.trace;
            assert!(t.converged);
            assert!(t.lambdas.len() <= 50);
            assert!(t.lambdas.windows(2).all(|w| w[1] >= w[0]));
            let last = *t.residuals.last().unwrap();
            assert!((0.0..=DINKELBACH_EPS).contains(&last));
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let params = SystemParams::default();
        let cfg = SolverConfig::default();
        assert!(dinkelbach_ee(0.0, 1.0, &params, &cfg).is_err());
        assert!(dinkelbach_ee(1.0, -1.0, &params, &cfg).is_err());
    }

    #[test]
    fn ss_closed_form() {
        let params = SystemParams {
            k_s: 1.0,
            ..Default::default()
        };
        // gamma1 * 2P1 = 1, gamma2 * 2P2 = 3
        let spec = ClusterSpec::of_kind(SubproblemKind::SS, 0.05, 0.15, 0.5, 10.0).unwrap();
        let res = solve_oma(&spec, &params, &SolverConfig::default()).unwrap();
        assert_eq!((res.alloc.p1, res.alloc.p2), (20.0, 20.0));
        assert!((res.objective - 1.5).abs() < 1e-12);
        assert_eq!(res.trace, SolveTrace::ClosedForm);
    }

    #[test]
    fn ee_separable_at_unit_weight() {
        let params = SystemParams::default();
        let cfg = SolverConfig::default();
        let spec = ClusterSpec::of_kind(SubproblemKind::EE, 2.0, 30.0, 1.0, 10.0).unwrap();
        let res = solve_oma(&spec, &params, &cfg).unwrap();
        let alone = dinkelbach_ee(2.0, 20.0, &params, &cfg).unwrap();
        assert!((res.objective - alone.ee / params.k_e).abs() < 1e-15);
    }

    #[test]
    fn es_matches_grid() {
        let params = SystemParams {
            k_s: 1.0,
            k_e: 1.0,
            ..Default::default()
        };
        let spec = ClusterSpec::of_kind(SubproblemKind::ES, 1.0, 10.0, 0.5, 10.0).unwrap();
        let res = solve_oma(&spec, &params, &SolverConfig::default()).unwrap();
        let fixed = 0.5 * (1.0f64 + 10.0 * 20.0).log2();
        let best = (0..100_001)
            .map(|i| 20.0 * i as f64 / 100_000.0)
            .map(|p| 0.5 * (1.0f64 + p).log2() / (2.0 * p + 10.0) + fixed)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(((res.objective - best) / best).abs() < 1e-6);
        assert!(res.objective >= best - 1e-12);
        assert_eq!(res.alloc.p2, 20.0);
    }
}
