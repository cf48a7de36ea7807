//! NOMA power allocation by quadratic-transform fractional programming.
//!
//! Each non-concave weighted sum is replaced by a surrogate that is concave
//! in the powers once the auxiliary variables are fixed, and that equals the
//! true objective when the auxiliaries take their closed-form optimal values.
//! Alternating a surrogate maximization over the powers with the auxiliary
//! updates therefore never decreases the true objective and stops at a
//! stationary point. Several starting points are tried and the best kept.
//!
//! The EE+EE kind has no solver here: OMA dominates NOMA for it.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{weighted_terms_unchecked, ClusterSpec, MaScheme, PowerAllocation, SubproblemKind, SystemParams};
use crate::numeric::{maximize_concave_1d, SolverConfig};

use super::oma::dinkelbach_ee;
use super::{SolveResult, SolveTrace};

/// Snapshot of the auxiliary variables used in one outer round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum FpAux {
    SS { y: f64 },
    ES { y1: f64, y2: f64 },
    SE { y: f64, t: f64 },
}

impl FpAux {
    pub fn values(&self) -> Vec<f64> {
        match *self {
            FpAux::SS { y } => vec![y],
            FpAux::ES { y1, y2 } => vec![y1, y2],
            FpAux::SE { y, t } => vec![y, t],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FpTrace {
    /// True objective after each outer round.
    pub objectives: Vec<f64>,
    /// Auxiliary values used in each outer round.
    pub aux_values: Vec<FpAux>,
    /// Powers `(p1, p2)` after each outer round.
    pub powers: Vec<(f64, f64)>,
    pub converged: bool,
}

#[inline]
fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / LN_2
}

/// A reformulated problem over (p1, p2).
trait Transformed {
    fn objective(&self, p1: f64, p2: f64) -> f64;
    fn aux(&self, p1: f64, p2: f64) -> FpAux;
    /// Maximizes the surrogate over the powers with `aux` fixed, starting from
    /// a point where the surrogate constraint holds.
    fn step(&self, p1: f64, p2: f64, aux: FpAux, config: &SolverConfig) -> Result<(f64, f64)>;
    /// Power budgets `(P1, P2)`.
    fn bounds(&self) -> (f64, f64);
}

fn noma_objective(spec: &ClusterSpec, params: &SystemParams, p1: f64, p2: f64) -> f64 {
    let [a, b] = weighted_terms_unchecked(spec, &PowerAllocation::new(p1, p2, MaScheme::Noma), params);
    a + b
}

/// 1-D surrogate maximization that keeps `current` unless the search finds
/// something at least as good, so each coordinate step is an ascent step.
fn ascend_coordinate<F>(f: F, lo: f64, hi: f64, current: f64, config: &SolverConfig) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let lo = lo.min(current);
    let hi = hi.max(current);
    let (x, fx) = maximize_concave_1d(&f, lo, hi, config)?;
    Ok(if fx >= f(current) { x } else { current })
}

/// Largest weak-user power keeping `2 y sqrt(s) - y^2 (1 + gamma1 p1) >= 0`.
fn weak_power_cap(gamma1: f64, sqrt_s: f64, y: f64, p1_max: f64) -> f64 {
    if y > 0.0 {
        ((2.0 * sqrt_s / y - 1.0) / gamma1).min(p1_max)
    } else {
        p1_max
    }
}

struct SsProblem<'a> {
    spec: &'a ClusterSpec,
    params: &'a SystemParams,
}

impl Transformed for SsProblem<'_> {
    fn objective(&self, p1: f64, p2: f64) -> f64 {
        noma_objective(self.spec, self.params, p1, p2)
    }

    fn bounds(&self) -> (f64, f64) {
        (self.spec.p1_max, self.spec.p2_max)
    }

    fn aux(&self, p1: f64, _p2: f64) -> FpAux {
        let s = self.spec;
        FpAux::SS {
            y: (s.gamma2 * s.p2_max).sqrt() / (1.0 + s.gamma1 * p1),
        }
    }

    fn step(&self, p1: f64, p2: f64, aux: FpAux, config: &SolverConfig) -> Result<(f64, f64)> {
        let FpAux::SS { y } = aux else { unreachable!() };
        let s = self.spec;
        let a = 2.0 * s.w1 / self.params.k_s;
        let b = 2.0 * s.w2() / self.params.k_s;
        let root = (s.gamma2 * s.p2_max).sqrt();
        let surrogate = |x: f64| {
            let inner = (2.0 * y * root - y * y * (1.0 + s.gamma1 * x)).max(0.0);
            a * log2_1p(s.gamma1 * x) + b * log2_1p(inner)
        };
        let hi = weak_power_cap(s.gamma1, root, y, s.p1_max);
        Ok((ascend_coordinate(surrogate, 0.0, hi, p1, config)?, p2))
    }
}

struct EsProblem<'a> {
    spec: &'a ClusterSpec,
    params: &'a SystemParams,
}

impl Transformed for EsProblem<'_> {
    fn objective(&self, p1: f64, p2: f64) -> f64 {
        noma_objective(self.spec, self.params, p1, p2)
    }

    fn bounds(&self) -> (f64, f64) {
        (self.spec.p1_max, self.spec.p2_max)
    }

    fn aux(&self, p1: f64, _p2: f64) -> FpAux {
        let s = self.spec;
        FpAux::ES {
            y1: log2_1p(s.gamma1 * p1).sqrt() / self.params.consumed(p1),
            y2: (s.gamma2 * s.p2_max).sqrt() / (1.0 + s.gamma1 * p1),
        }
    }

    fn step(&self, p1: f64, p2: f64, aux: FpAux, config: &SolverConfig) -> Result<(f64, f64)> {
        let FpAux::ES { y1, y2 } = aux else { unreachable!() };
        let s = self.spec;
        let pr = self.params;
        let a = s.w1 / pr.k_e;
        let b = 2.0 * s.w2() / pr.k_s;
        let root = (s.gamma2 * s.p2_max).sqrt();
        let surrogate = |x: f64| {
            let inner = (2.0 * y2 * root - y2 * y2 * (1.0 + s.gamma1 * x)).max(0.0);
            a * (2.0 * y1 * log2_1p(s.gamma1 * x).sqrt() - y1 * y1 * pr.consumed(x)) + b * log2_1p(inner)
        };
        let hi = weak_power_cap(s.gamma1, root, y2, s.p1_max);
        Ok((ascend_coordinate(surrogate, 0.0, hi, p1, config)?, p2))
    }
}

struct SeProblem<'a> {
    spec: &'a ClusterSpec,
    params: &'a SystemParams,
}

impl SeProblem<'_> {
    fn surrogate(&self, p1: f64, p2: f64, y: f64, t: f64) -> f64 {
        let s = self.spec;
        let pr = self.params;
        let inner = (2.0 * t * (s.gamma2 * p2).sqrt() - t * t * (1.0 + s.gamma1 * p1)).max(0.0);
        2.0 * s.w1 / pr.k_s * log2_1p(s.gamma1 * p1)
            + s.w2() / pr.k_e * (2.0 * y * log2_1p(inner).sqrt() - y * y * pr.consumed(p2))
    }
}

impl Transformed for SeProblem<'_> {
    fn objective(&self, p1: f64, p2: f64) -> f64 {
        noma_objective(self.spec, self.params, p1, p2)
    }

    fn bounds(&self) -> (f64, f64) {
        (self.spec.p1_max, self.spec.p2_max)
    }

    fn aux(&self, p1: f64, p2: f64) -> FpAux {
        let s = self.spec;
        let root = (s.gamma2 * p2).sqrt();
        let t = root / (1.0 + s.gamma1 * p1);
        // p2 = 0 gives t = 0 and y = 0: the EE term then contributes nothing.
        let inner = (2.0 * t * root - t * t * (1.0 + s.gamma1 * p1)).max(0.0);
        let y = log2_1p(inner).sqrt() / self.params.consumed(p2);
        FpAux::SE { y, t }
    }

    fn step(&self, p1: f64, p2: f64, aux: FpAux, config: &SolverConfig) -> Result<(f64, f64)> {
        let FpAux::SE { y, t } = aux else { unreachable!() };
        let s = self.spec;

        let p1_hi = weak_power_cap(s.gamma1, (s.gamma2 * p2).sqrt(), t, s.p1_max);
        let p1 = ascend_coordinate(|x| self.surrogate(x, p2, y, t), 0.0, p1_hi, p1, config)?;

        // sqrt(gamma2 p2) >= t (1 + gamma1 p1) / 2 keeps the log argument valid.
        let p2_lo = if t > 0.0 {
            let half = 0.5 * t * (1.0 + s.gamma1 * p1);
            (half * half / s.gamma2).min(s.p2_max)
        } else {
            0.0
        };
        let p2 = ascend_coordinate(|x| self.surrogate(p1, x, y, t), p2_lo, s.p2_max, p2, config)?;
        Ok((p1, p2))
    }
}

fn aux_settled(before: &FpAux, after: &FpAux, tol: f64) -> bool {
    before
        .values()
        .iter()
        .zip(after.values())
        .all(|(a, b)| (a - b).abs() <= tol * a.abs().max(b.abs()))
}

/// Smallest power step, relative to the budget, that golden-section search
/// can resolve on a flat objective.
pub const RESOLUTION: f64 = 1.5e-8;

/// Aitken extrapolation of three successive iterates of one coordinate.
fn aitken(x0: f64, x1: f64, x2: f64) -> Option<f64> {
    let denom = x2 - 2.0 * x1 + x0;
    if denom.abs() <= f64::EPSILON * (x0.abs() + x1.abs() + x2.abs()) {
        return None;
    }
    let x = x0 - (x1 - x0) * (x1 - x0) / denom;
    x.is_finite().then_some(x)
}

fn ascend<P: Transformed>(problem: &P, start: (f64, f64), config: &SolverConfig) -> Result<(f64, f64, FpTrace)> {
    let (b1, b2) = problem.bounds();
    let (mut p1, mut p2) = start;
    let mut objective = problem.objective(p1, p2);
    let mut trace = FpTrace::default();
    // Iterates produced by plain rounds since the last extrapolation.
    let mut history: Vec<(f64, f64)> = vec![start];
    for _ in 0..config.max_outer_iters {
        let aux = problem.aux(p1, p2);
        let (mut n1, mut n2) = problem.step(p1, p2, aux, config)?;
        let mut next = problem.objective(n1, n2);
        if !next.is_finite() {
            return Err(Error::NonFinite { x: n1 });
        }
        history.push((n1, n2));
        if let [a, b, c] = history[..] {
            // Linear convergence of the rounds is sped up by a safeguarded
            // Aitken step, kept only when it improves the true objective.
            let e1 = aitken(a.0, b.0, c.0).unwrap_or(c.0).clamp(0.0, b1);
            let e2 = aitken(a.1, b.1, c.1).unwrap_or(c.1).clamp(0.0, b2);
            let value = problem.objective(e1, e2);
            if value.is_finite() && value >= next {
                (n1, n2, next) = (e1, e2, value);
            }
            history.clear();
            history.push((n1, n2));
        }
        trace.objectives.push(next);
        trace.aux_values.push(aux);
        trace.powers.push((n1, n2));
        let change = (next - objective).abs();
        // On a flat optimum the 1-D searches cannot place the powers more
        // finely than this, so the auxiliaries jitter with them.
        let still = (n1 - p1).abs() <= RESOLUTION * b1 && (n2 - p2).abs() <= RESOLUTION * b2;
        (p1, p2, objective) = (n1, n2, next);
        if change < config.tol_objective && (still || aux_settled(&aux, &problem.aux(p1, p2), config.tol_aux_rel)) {
            trace.converged = true;
            break;
        }
    }
    Ok((p1, p2, trace))
}

fn best_of_starts<P: Transformed>(
    problem: &P,
    starts: impl IntoIterator<Item = (f64, f64)>,
    config: &SolverConfig,
) -> Result<(f64, f64, FpTrace)> {
    let mut runs = Vec::new();
    for start in starts {
        let (p1, p2, trace) = ascend(problem, start, config)?;
        let value = problem.objective(p1, p2);
        runs.push((p1, p2, trace, value));
    }
    let top = runs.iter().map(|r| r.3).fold(f64::NEG_INFINITY, f64::max);
    // A converged run within tolerance of the best beats an unfinished one.
    let mut pick = runs.iter().position(|r| r.3 == top).expect("multistart list validated as non-empty");
    for (i, r) in runs.iter().enumerate() {
        let current = &runs[pick];
        if r.2.converged && r.3 >= top - config.tol_objective && (!current.2.converged || r.3 > current.3) {
            pick = i;
        }
    }
    let (p1, p2, trace, _) = runs.swap_remove(pick);
    Ok((p1, p2, trace))
}

fn expect_kind(spec: &ClusterSpec, kind: SubproblemKind, solver: &'static str) -> Result<()> {
    if spec.kind() == kind {
        Ok(())
    } else {
        Err(Error::WrongKind {
            solver,
            kind: spec.kind(),
        })
    }
}

fn finish(spec: &ClusterSpec, params: &SystemParams, p1: f64, p2: f64, converged: bool, trace: SolveTrace) -> SolveResult {
    let p1 = p1.clamp(0.0, spec.p1_max);
    let p2 = p2.clamp(0.0, spec.p2_max);
    SolveResult {
        alloc: PowerAllocation::new(p1, p2, MaScheme::Noma),
        objective: noma_objective(spec, params, p1, p2),
        converged,
        trace,
    }
}

fn from_fp(spec: &ClusterSpec, params: &SystemParams, (p1, p2, fp): (f64, f64, FpTrace)) -> SolveResult {
    let converged = fp.converged;
    finish(spec, params, p1, p2, converged, SolveTrace::FractionalProgramming(fp))
}

fn validate_all(spec: &ClusterSpec, params: &SystemParams, config: &SolverConfig) -> Result<()> {
    spec.validate()?;
    params.validate()?;
    config.validate()
}

/// Both users eMBB. The strong user always transmits at full power.
pub fn solve_noma_ss(spec: &ClusterSpec, params: &SystemParams, config: &SolverConfig) -> Result<SolveResult> {
    expect_kind(spec, SubproblemKind::SS, "NOMA SE+SE")?;
    validate_all(spec, params, config)?;
    let p2 = spec.p2_max;
    if spec.w1 == 0.0 {
        return Ok(finish(spec, params, 0.0, p2, true, SolveTrace::ClosedForm));
    }
    if spec.w1 == 1.0 {
        return Ok(finish(spec, params, spec.p1_max, p2, true, SolveTrace::ClosedForm));
    }
    let problem = SsProblem { spec, params };
    let starts = config.multistart_points.iter().map(|f| (f * spec.p1_max, p2));
    Ok(from_fp(spec, params, best_of_starts(&problem, starts, config)?))
}

/// Weak IoT user, strong eMBB user. The strong user transmits at full power.
pub fn solve_noma_es(spec: &ClusterSpec, params: &SystemParams, config: &SolverConfig) -> Result<SolveResult> {
    expect_kind(spec, SubproblemKind::ES, "NOMA EE+SE")?;
    validate_all(spec, params, config)?;
    let p2 = spec.p2_max;
    if spec.w1 == 0.0 {
        return Ok(finish(spec, params, 0.0, p2, true, SolveTrace::ClosedForm));
    }
    if spec.w1 == 1.0 {
        // The weak user's NOMA EE equals its single-user EE.
        let run = dinkelbach_ee(spec.gamma1, spec.p1_max, params, config)?;
        let converged = run.trace.converged;
        let trace = SolveTrace::Dinkelbach { runs: vec![run.trace] };
        return Ok(finish(spec, params, run.p, p2, converged, trace));
    }
    let problem = EsProblem { spec, params };
    let starts = config.multistart_points.iter().map(|f| (f * spec.p1_max, p2));
    Ok(from_fp(spec, params, best_of_starts(&problem, starts, config)?))
}

/// Weak eMBB user, strong IoT user. Both powers are optimized, by block
/// coordinate ascent inside each outer round.
pub fn solve_noma_se(spec: &ClusterSpec, params: &SystemParams, config: &SolverConfig) -> Result<SolveResult> {
    expect_kind(spec, SubproblemKind::SE, "NOMA SE+EE")?;
    validate_all(spec, params, config)?;
    if spec.w1 == 1.0 {
        return Ok(finish(spec, params, spec.p1_max, 0.0, true, SolveTrace::ClosedForm));
    }
    if spec.w1 == 0.0 {
        // With p1 = 0 the strong user sees no interference.
        let run = dinkelbach_ee(spec.gamma2, spec.p2_max, params, config)?;
        let converged = run.trace.converged;
        let trace = SolveTrace::Dinkelbach { runs: vec![run.trace] };
        return Ok(finish(spec, params, 0.0, run.p, converged, trace));
    }
    let problem = SeProblem { spec, params };
    let fractions = &config.multistart_points;
    let starts = fractions
        .iter()
        .flat_map(|f1| fractions.iter().map(move |f2| (f1 * spec.p1_max, f2 * spec.p2_max)));
    Ok(from_fp(spec, params, best_of_starts(&problem, starts, config)?))
}

/// Dispatches on the subproblem kind. EE+EE is rejected.
pub fn solve_noma(spec: &ClusterSpec, params: &SystemParams, config: &SolverConfig) -> Result<SolveResult> {
    match spec.kind() {
        SubproblemKind::SS => solve_noma_ss(spec, params, config),
        SubproblemKind::ES => solve_noma_es(spec, params, config),
        SubproblemKind::SE => solve_noma_se(spec, params, config),
        SubproblemKind::EE => Err(Error::WrongKind {
            solver: "NOMA",
            kind: SubproblemKind::EE,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_params() -> SystemParams {
        SystemParams {
            k_s: 1.0,
            k_e: 1.0,
            ..Default::default()
        }
    }

    /// Brute force over p1 with p2 at its budget, straight from the formulas.
    fn grid_p1(f: impl Fn(f64) -> f64, p1_max: f64, n: usize) -> f64 {
        (0..n)
            .map(|i| f(p1_max * i as f64 / (n - 1) as f64))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn ss_degenerate_weights() {
        let params = unit_params();
        let cfg = SolverConfig::default();
        let spec = ClusterSpec::of_kind(SubproblemKind::SS, 1.0, 10.0, 1.0, 10.0).unwrap();
        let r = solve_noma_ss(&spec, &params, &cfg).unwrap();
        assert_eq!((r.alloc.p1, r.alloc.p2), (10.0, 10.0));
        let r = solve_noma_ss(&spec.with_w1(0.0), &params, &cfg).unwrap();
        assert_eq!((r.alloc.p1, r.alloc.p2), (0.0, 10.0));
    }

    #[test]
    fn ss_matches_grid() {
        let params = unit_params();
        let spec = ClusterSpec::of_kind(SubproblemKind::SS, 1.0, 10.0, 0.4, 10.0).unwrap();
        let r = solve_noma_ss(&spec, &params, &SolverConfig::default()).unwrap();
        let oracle = grid_p1(
            |p1| 0.4 * 2.0 * (1.0 + p1).log2() + 0.6 * 2.0 * (1.0 + 100.0 / (1.0 + p1)).log2(),
            10.0,
            100_001,
        );
        assert!(r.objective >= oracle * (1.0 - 1e-3), "{} vs {oracle}", r.objective);
        assert!(r.objective <= oracle + 1e-6);
    }

    #[test]
    fn es_degenerate_weights() {
        let params = unit_params();
        let cfg = SolverConfig::default();
        let spec = ClusterSpec::of_kind(SubproblemKind::ES, 1.0, 10.0, 0.0, 10.0).unwrap();
        let r = solve_noma_es(&spec, &params, &cfg).unwrap();
        assert_eq!(r.alloc.p1, 0.0);
        let r = solve_noma_es(&spec.with_w1(1.0), &params, &cfg).unwrap();
        let alone = dinkelbach_ee(1.0, 10.0, &params, &cfg).unwrap();
        assert!((r.alloc.p1 - alone.p).abs() < 1e-9);
    }

    #[test]
    fn es_matches_grid() {
        let params = unit_params();
        let spec = ClusterSpec::of_kind(SubproblemKind::ES, 1.0, 10.0, 0.5, 10.0).unwrap();
        let r = solve_noma_es(&spec, &params, &SolverConfig::default()).unwrap();
        let oracle = grid_p1(
            |p1| 0.5 * (1.0 + p1).log2() / (2.0 * p1 + 10.0) + 0.5 * 2.0 * (1.0 + 100.0 / (1.0 + p1)).log2(),
            10.0,
            100_001,
        );
        assert!(r.objective >= oracle * (1.0 - 1e-3), "{} vs {oracle}", r.objective);
        assert!(r.objective <= oracle + 1e-6);
    }

    #[test]
    fn se_degenerate_weights() {
        let params = unit_params();
        let cfg = SolverConfig::default();
        let spec = ClusterSpec::of_kind(SubproblemKind::SE, 1.0, 10.0, 1.0, 10.0).unwrap();
        let r = solve_noma_se(&spec, &params, &cfg).unwrap();
        assert_eq!((r.alloc.p1, r.alloc.p2), (10.0, 0.0));
        assert!((r.objective - 2.0 * 11f64.log2()).abs() < 1e-12);

        let r = solve_noma_se(&spec.with_w1(0.0), &params, &cfg).unwrap();
        let alone = dinkelbach_ee(10.0, 10.0, &params, &cfg).unwrap();
        assert_eq!(r.alloc.p1, 0.0);
        assert!((r.alloc.p2 - alone.p).abs() < 1e-9);
    }

    #[test]
    fn se_matches_2d_grid() {
        let params = SystemParams {
            k_s: 30.0,
            k_e: 1.0,
            ..Default::default()
        };
        let spec = ClusterSpec::of_kind(SubproblemKind::SE, 1.0, 10.0, 0.5, 10.0).unwrap();
        let r = solve_noma_se(&spec, &params, &SolverConfig::default()).unwrap();
        let n = 1001;
        let mut oracle = f64::NEG_INFINITY;
        for i in 0..n {
            let p1 = 10.0 * i as f64 / (n - 1) as f64;
            for j in 0..n {
                let p2 = 10.0 * j as f64 / (n - 1) as f64;
                let v = 0.5 / 30.0 * 2.0 * (1.0 + p1).log2()
                    + 0.5 * (1.0 + 10.0 * p2 / (1.0 + p1)).log2() / (2.0 * p2 + 10.0);
                oracle = oracle.max(v);
            }
        }
        assert!(r.objective >= oracle * (1.0 - 1e-3), "{} vs {oracle}", r.objective);
    }

    #[test]
    fn wrong_kind_rejected() {
        let params = unit_params();
        let cfg = SolverConfig::default();
        let ee = ClusterSpec::of_kind(SubproblemKind::EE, 1.0, 10.0, 0.5, 10.0).unwrap();
        assert!(matches!(solve_noma(&ee, &params, &cfg), Err(Error::WrongKind { .. })));
        let ss = ClusterSpec::of_kind(SubproblemKind::SS, 1.0, 10.0, 0.5, 10.0).unwrap();
        assert!(solve_noma_es(&ss, &params, &cfg).is_err());
        assert!(solve_noma_se(&ss, &params, &cfg).is_err());
    }

    #[test]
    fn traces_ascend() {
        let params = SystemParams::default();
        let cfg = SolverConfig::default();
        for kind in [SubproblemKind::SS, SubproblemKind::ES, SubproblemKind::SE] {
            for w1 in [0.1, 0.3, 0.5, 0.7, 0.9] {
                let spec = ClusterSpec::of_kind(kind, 2.0, 40.0, w1, 10.0).unwrap();
                let r = solve_noma(&spec, &params, &cfg).unwrap();
                let obj = r.objective_trace();
                assert!(obj.windows(2).all(|w| w[1] >= w[0] - 1e-9), "{kind:?} {w1}: {obj:?}");
            }
        }
    }
}
