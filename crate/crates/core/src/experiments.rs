//! Strategy comparison over random drops.
//!
//! A strategy is a clustering (proposed or random) followed by a scheme rule
//! (adaptive, all NOMA or all OMA). Each drop is a random scenario; all
//! strategies at a sweep point see the same drops. Totals are reported in
//! bits/J: the per-Hz, per-mW objective is multiplied by the bandwidth and by
//! 1000, which treats `K_S` as a power in mW.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adaptive::decide_cluster;
use crate::clustering::{build_proposed_plan, build_random_plan, ClusterPlan, PlannedPair, SchemePolicy, UserRecord};
use crate::error::{invalid, Error, Result};
use crate::model::{
    weighted_terms, ClusterSpec, MaScheme, Metric, PowerAllocation, SystemParams, UserClass,
};
use crate::numeric::SolverConfig;
use crate::oracle::{oracle_solve, GridSpec};
use crate::scenario::{random_scenario, CellGeometry, ChannelParams, Scenario};
use crate::solver::{dinkelbach_ee, solve_oma};

/// Grid resolution for forced NOMA on EE+EE clusters, which have no solver.
pub const FORCED_EE_NOMA_GRID: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    ProposedAdaptive,
    ProposedNOMA,
    ProposedOMA,
    RandomNOMA,
    RandomOMA,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::ProposedAdaptive,
        Strategy::ProposedNOMA,
        Strategy::ProposedOMA,
        Strategy::RandomNOMA,
        Strategy::RandomOMA,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::ProposedAdaptive => "ProposedAdaptive",
            Strategy::ProposedNOMA => "ProposedNOMA",
            Strategy::ProposedOMA => "ProposedOMA",
            Strategy::RandomNOMA => "RandomNOMA",
            Strategy::RandomOMA => "RandomOMA",
        }
    }

    fn index(self) -> usize {
        Self::ALL.iter().position(|s| *s == self).expect("listed")
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|st| st.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| invalid(format!("unknown strategy {s:?}")))
    }
}

/// Everything needed to evaluate a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalContext {
    pub params: SystemParams,
    /// Per-user NOMA power budget in mW.
    pub p_max: f64,
    pub solver: SolverConfig,
}

impl Default for EvalContext {
    fn default() -> Self {
        Self {
            params: SystemParams::default(),
            p_max: 10.0,
            solver: SolverConfig::default(),
        }
    }
}

impl EvalContext {
    /// Factor turning a per-Hz, per-mW objective into bits/J.
    pub fn report_scale(&self) -> f64 {
        self.params.bandwidth_hz * 1000.0
    }
}

/// Weighted terms of one pair under each scheme rule.
struct PairOutcome {
    ids: [usize; 2],
    adaptive: [f64; 2],
    noma: [f64; 2],
    oma: [f64; 2],
}

fn pair_spec(pair: &PlannedPair, w1: f64, ctx: &EvalContext) -> Result<ClusterSpec> {
    ClusterSpec::new(
        pair.weak.gain,
        pair.strong.gain,
        pair.weak.class,
        pair.strong.class,
        w1,
        ctx.p_max,
        ctx.p_max,
    )
}

fn evaluate_pair(pair: &PlannedPair, w1: f64, ctx: &EvalContext) -> Result<PairOutcome> {
    let spec = pair_spec(pair, w1, ctx)?;
    let params = &ctx.params;
    let decision = decide_cluster(&spec, params, &ctx.solver)?;
    let unconverged = |r: &crate::solver::SolveResult| !r.converged;
    if unconverged(&decision.oma_result) || decision.noma_result.as_ref().is_some_and(unconverged) {
        return Err(Error::NotConverged(format!(
            "cluster ({}, {}) {:?} gamma1={:e} gamma2={:e} w1={}",
            pair.weak.id,
            pair.strong.id,
            spec.kind(),
            spec.gamma1,
            spec.gamma2,
            w1
        )));
    }
    let oma = weighted_terms(&spec, &decision.oma_result.alloc, params)?;
    let noma_alloc = match &decision.noma_result {
        Some(r) => r.alloc,
        None => {
            let g = oracle_solve(&spec, MaScheme::Noma, params, GridSpec::square(FORCED_EE_NOMA_GRID))?;
            PowerAllocation::new(g.p1, g.p2, MaScheme::Noma)
        }
    };
    let noma = weighted_terms(&spec, &noma_alloc, params)?;
    let adaptive = match pair.policy {
        SchemePolicy::Adaptive => match decision.chosen {
            MaScheme::Noma => noma,
            MaScheme::Oma => oma,
        },
        SchemePolicy::ForceNoma => noma,
        SchemePolicy::ForceOma => oma,
    };
    Ok(PairOutcome {
        ids: [pair.weak.id, pair.strong.id],
        adaptive,
        noma,
        oma,
    })
}

/// A user left without a partner transmits alone in OMA at its single-user
/// optimum, weighted like the weak member of a pair.
fn solo_term(user: &UserRecord, w1: f64, ctx: &EvalContext) -> Result<f64> {
    let budget = MaScheme::Oma.budget_factor() * ctx.p_max;
    let params = &ctx.params;
    let metric = match user.class.metric() {
        Metric::Spectral => crate::model::se_oma(user.gain, budget)?,
        Metric::Energy => {
            let run = dinkelbach_ee(user.gain, budget, params, &ctx.solver)?;
            if !run.trace.converged {
                return Err(Error::NotConverged(format!("solo user {}", user.id)));
            }
            run.ee
        }
    };
    Ok(w1 / params.norm(user.class.metric()) * metric)
}

/// Sums per-user contributions in id order so that plans giving each user
/// the same contribution give bit-identical totals.
fn total(mut contributions: Vec<(usize, f64)>, scale: f64) -> f64 {
    contributions.sort_by_key(|c| c.0);
    contributions.iter().map(|c| c.1).sum::<f64>() * scale
}

#[derive(Clone, Copy)]
enum Rule {
    Adaptive,
    Noma,
    Oma,
}

/// Totals of one plan under the three scheme rules.
fn evaluate_plan(plan: &ClusterPlan, w1: f64, ctx: &EvalContext) -> Result<[f64; 3]> {
    let outcomes = plan
        .pairs
        .iter()
        .map(|p| evaluate_pair(p, w1, ctx))
        .collect::<Result<Vec<_>>>()?;
    let solos = plan
        .solos
        .iter()
        .map(|u| Ok((u.id, solo_term(u, w1, ctx)?)))
        .collect::<Result<Vec<_>>>()?;

    let scale = ctx.report_scale();
    let rule_total = |rule: Rule| {
        let mut c = solos.clone();
        for o in &outcomes {
            let terms = match rule {
                Rule::Adaptive => o.adaptive,
                Rule::Noma => o.noma,
                Rule::Oma => o.oma,
            };
            c.push((o.ids[0], terms[0]));
            c.push((o.ids[1], terms[1]));
        }
        total(c, scale)
    };
    Ok([rule_total(Rule::Adaptive), rule_total(Rule::Noma), rule_total(Rule::Oma)])
}

/// Totals (bits/J) of every strategy on one scenario, indexed like
/// [`Strategy::ALL`]. `plan_seed` drives the random clustering.
pub fn evaluate_scenario(scenario: &Scenario, w1: f64, ctx: &EvalContext, plan_seed: u64) -> Result<[f64; 5]> {
    scenario.validate()?;
    let proposed = build_proposed_plan(&scenario.records_of(UserClass::Iot), &scenario.records_of(UserClass::Embb))?;
    let random = build_random_plan(&scenario.records(), plan_seed);
    let [pa, pn, po] = evaluate_plan(&proposed, w1, ctx)?;
    let [_, rn, ro] = evaluate_plan(&random, w1, ctx)?;
    Ok([pa, pn, po, rn, ro])
}

/// Total objective (bits/J) of one strategy on one scenario.
pub fn evaluate_strategy(
    scenario: &Scenario,
    strategy: Strategy,
    w1: f64,
    ctx: &EvalContext,
    plan_seed: u64,
) -> Result<f64> {
    Ok(evaluate_scenario(scenario, w1, ctx, plan_seed)?[strategy.index()])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepVar {
    /// N_IoT = N_eMBB
    GroupSize,
    EmbbCount,
    CircuitPower,
    Weight,
}

impl SweepVar {
    pub fn name(self) -> &'static str {
        match self {
            SweepVar::GroupSize => "n_per_group",
            SweepVar::EmbbCount => "n_embb",
            SweepVar::CircuitPower => "q_mw",
            SweepVar::Weight => "w1",
        }
    }
}

impl FromStr for SweepVar {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "n_per_group" | "group-size" => Ok(Self::GroupSize),
            "n_embb" | "embb-count" => Ok(Self::EmbbCount),
            "q_mw" | "circuit-power" => Ok(Self::CircuitPower),
            "w1" | "weight" => Ok(Self::Weight),
            _ => Err(invalid(format!("unknown sweep variable {s:?}"))),
        }
    }
}

/// Shared settings of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSetup {
    pub ctx: EvalContext,
    pub geometry: CellGeometry,
    pub channel: ChannelParams,
    pub drops: usize,
    pub seed: u64,
}

impl Default for SweepSetup {
    fn default() -> Self {
        Self {
            ctx: EvalContext::default(),
            geometry: CellGeometry::default(),
            channel: ChannelParams::default(),
            drops: 50,
            seed: 1,
        }
    }
}

/// Everything that may vary along a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub n_iot: usize,
    pub n_embb: usize,
    pub w1: f64,
    pub ctx: EvalContext,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub sweep_var: String,
    pub value: f64,
    pub strategy: Strategy,
    /// Mean total over drops, bits/J.
    pub mean_objective: f64,
    pub drops: usize,
    pub seed: u64,
    pub per_drop: Vec<f64>,
}

/// Seed of one drop; a SplitMix64 finalizer over the three inputs.
pub fn drop_seed(base: u64, sweep_index: usize, drop_index: usize) -> u64 {
    let mut z = base
        ^ (sweep_index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (drop_index as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F).rotate_left(31);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs `drops` scenarios per value and averages each strategy. Drops run in
/// parallel; the output order is (value, strategy) regardless.
pub fn run_sweep<F>(var: SweepVar, values: &[f64], point: F, setup: &SweepSetup) -> Result<Vec<SweepRecord>>
where
    F: Fn(f64) -> SweepPoint + Sync,
{
    if values.is_empty() {
        return Err(invalid("sweep needs at least one value"));
    }
    if setup.drops == 0 {
        return Err(invalid("sweep needs at least one drop"));
    }
    let jobs: Vec<(usize, usize)> = (0..values.len())
        .flat_map(|i| (0..setup.drops).map(move |d| (i, d)))
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(i, d)| {
            let pt = point(values[i]);
            let seed = drop_seed(setup.seed, i, d);
            let scenario = random_scenario(pt.n_iot, pt.n_embb, &setup.geometry, &setup.channel, seed)?;
            evaluate_scenario(&scenario, pt.w1, &pt.ctx, drop_seed(seed, usize::MAX, 0))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut records = Vec::with_capacity(values.len() * Strategy::ALL.len());
    for (i, &value) in values.iter().enumerate() {
        let drops = &results[i * setup.drops..(i + 1) * setup.drops];
        for (k, strategy) in Strategy::ALL.into_iter().enumerate() {
            let per_drop: Vec<f64> = drops.iter().map(|r| r[k]).collect();
            let mean = per_drop.iter().sum::<f64>() / per_drop.len() as f64;
            records.push(SweepRecord {
                sweep_var: var.name().to_string(),
                value,
                strategy,
                mean_objective: mean,
                drops: setup.drops,
                seed: setup.seed,
                per_drop,
            });
        }
    }
    Ok(records)
}

fn with_params(setup: &SweepSetup, params: SystemParams) -> EvalContext {
    EvalContext {
        params,
        ..setup.ctx.clone()
    }
}

/// Equal group sizes, N_IoT = N_eMBB = n.
pub fn sweep_group_size(sizes: &[usize], w1: f64, setup: &SweepSetup) -> Result<Vec<SweepRecord>> {
    let values: Vec<f64> = sizes.iter().map(|&n| n as f64).collect();
    let ctx = setup.ctx.clone();
    run_sweep(
        SweepVar::GroupSize,
        &values,
        |v| SweepPoint {
            n_iot: v as usize,
            n_embb: v as usize,
            w1,
            ctx: ctx.clone(),
        },
        setup,
    )
}

pub fn sweep_embb_count(n_embb: &[usize], n_iot: usize, w1: f64, setup: &SweepSetup) -> Result<Vec<SweepRecord>> {
    let values: Vec<f64> = n_embb.iter().map(|&n| n as f64).collect();
    let ctx = setup.ctx.clone();
    run_sweep(
        SweepVar::EmbbCount,
        &values,
        |v| SweepPoint {
            n_iot,
            n_embb: v as usize,
            w1,
            ctx: ctx.clone(),
        },
        setup,
    )
}

pub fn sweep_circuit_power(q_mw: &[f64], n_iot: usize, n_embb: usize, w1: f64, setup: &SweepSetup) -> Result<Vec<SweepRecord>> {
    if let Some(q) = q_mw.iter().find(|q| q.is_nan() || **q <= 0.0) {
        return Err(invalid(format!("circuit power must be positive, got {q}")));
    }
    run_sweep(
        SweepVar::CircuitPower,
        q_mw,
        |q| SweepPoint {
            n_iot,
            n_embb,
            w1,
            ctx: with_params(setup, SystemParams { q, ..setup.ctx.params }),
        },
        setup,
    )
}

pub fn sweep_weight(w1s: &[f64], n_iot: usize, n_embb: usize, setup: &SweepSetup) -> Result<Vec<SweepRecord>> {
    if let Some(w) = w1s.iter().find(|w| !(0.0..=1.0).contains(*w)) {
        return Err(invalid(format!("w1 must lie in [0, 1], got {w}")));
    }
    let ctx = setup.ctx.clone();
    run_sweep(
        SweepVar::Weight,
        w1s,
        |w1| SweepPoint {
            n_iot,
            n_embb,
            w1,
            ctx: ctx.clone(),
        },
        setup,
    )
}

/// The default w1 grid: 0.05 to 0.95 in steps of 0.05.
pub fn default_w1_grid() -> Vec<f64> {
    (1..=19).map(|i| i as f64 / 20.0).collect()
}

/// Preset sweeps reproducing the four performance comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// N_IoT = N_eMBB swept, w1 = 0.4, K_S = 30.
    GroupSize,
    /// N_IoT = 6, N_eMBB swept, w1 = 0.5, K_S = 100.
    EmbbCount,
    /// N_IoT = N_eMBB = 8, Q swept, w1 = 0.5, K_S = 30.
    CircuitPower,
    /// N_IoT = 6, N_eMBB = 8, w1 swept, K_S = 100.
    Weight,
}

impl Figure {
    pub fn from_number(n: u32) -> Result<Self> {
        match n {
            9 => Ok(Self::GroupSize),
            10 => Ok(Self::EmbbCount),
            11 => Ok(Self::CircuitPower),
            12 => Ok(Self::Weight),
            _ => Err(invalid(format!("no preset for figure {n}; expected 9, 10, 11 or 12"))),
        }
    }

    pub fn var(self) -> SweepVar {
        match self {
            Self::GroupSize => SweepVar::GroupSize,
            Self::EmbbCount => SweepVar::EmbbCount,
            Self::CircuitPower => SweepVar::CircuitPower,
            Self::Weight => SweepVar::Weight,
        }
    }

    pub fn default_values(self) -> Vec<f64> {
        match self {
            Self::GroupSize => (1..=10).map(f64::from).collect(),
            Self::EmbbCount => (1..=10).map(|k| f64::from(10 * k)).collect(),
            Self::CircuitPower => vec![1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0],
            Self::Weight => default_w1_grid(),
        }
    }

    /// Applies the preset's K_S, K_E to `setup` and runs the sweep.
    pub fn run(self, values: &[f64], setup: &SweepSetup) -> Result<Vec<SweepRecord>> {
        let k_s = match self {
            Self::GroupSize | Self::CircuitPower => 30.0,
            Self::EmbbCount | Self::Weight => 100.0,
        };
        let mut setup = setup.clone();
        setup.ctx.params.k_s = k_s;
        setup.ctx.params.k_e = 1.0;
        let counts = |vals: &[f64]| -> Result<Vec<usize>> {
            vals.iter()
                .map(|v| {
                    if *v >= 0.0 && v.fract() == 0.0 {
                        Ok(*v as usize)
                    } else {
                        Err(invalid(format!("user count must be a non-negative integer, got {v}")))
                    }
                })
                .collect()
        };
        match self {
            Self::GroupSize => sweep_group_size(&counts(values)?, 0.4, &setup),
            Self::EmbbCount => sweep_embb_count(&counts(values)?, 6, 0.5, &setup),
            Self::CircuitPower => sweep_circuit_power(values, 8, 8, 0.5, &setup),
            Self::Weight => sweep_weight(values, 6, 8, &setup),
        }
    }
}

pub const CSV_HEADER: &str = "sweep_var,value,strategy,mean_objective_bits_per_joule,drops,seed";

pub fn write_csv<W: Write>(records: &[SweepRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.sweep_var, r.value, r.strategy, r.mean_objective, r.drops, r.seed
        )?;
    }
    Ok(())
}

pub fn to_csv(records: &[SweepRecord]) -> String {
    let mut buf = Vec::new();
    write_csv(records, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ASCII output")
}

/// OMA total of a scenario computed user by user, independent of any plan.
pub fn separable_oma_total(scenario: &Scenario, w1: f64, ctx: &EvalContext) -> Result<f64> {
    // Only meaningful for w1 = 0.5, where every user carries the same weight.
    let spec_for = |u: &UserRecord| -> Result<f64> {
        let spec = ClusterSpec::new(u.gain, u.gain, u.class, u.class, w1, ctx.p_max, ctx.p_max)?;
        let r = solve_oma(&spec, &ctx.params, &ctx.solver)?;
        Ok(weighted_terms(&spec, &r.alloc, &ctx.params)?[0])
    };
    let c = scenario
        .records()
        .iter()
        .map(|u| Ok((u.id, spec_for(u)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(total(c, ctx.report_scale()))
}
