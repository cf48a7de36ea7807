//! `noma-mop` command-line front end.
//!
//! Exit codes: 0 on success, 2 on invalid usage or input, 3 on numerical
//! failure (including solver non-convergence).

mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use noma_mop::adaptive::decide_cluster;
use noma_mop::clustering::{build_proposed_plan, build_random_plan, build_strongest_weakest_plan};
use noma_mop::experiments::{
    sweep_circuit_power, sweep_embb_count, sweep_group_size, sweep_weight, to_csv, Figure, SweepRecord, SweepVar,
};
use noma_mop::model::{ClusterSpec, MaScheme, SubproblemKind, UserClass};
use noma_mop::oracle::{oracle_solve, GridSpec};
use noma_mop::scenario::{deterministic_scenario, random_scenario, Scenario};
use noma_mop::solver::{solve_noma, solve_oma, SolveResult};

use config::RunConfig;

#[derive(Parser)]
#[command(name = "noma-mop", version, about = "Weighted SE/EE power allocation, NOMA/OMA selection and clustering")]
struct Cli {
    /// JSON configuration file; missing keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize the powers of one two-user cluster.
    Solve(SolveArgs),
    /// Build a user clustering and print it.
    Cluster(ClusterArgs),
    /// Run a strategy comparison sweep and write a CSV table.
    Sweep(SweepArgs),
    /// Compare the solvers against the grid oracle on random clusters.
    OracleCheck(OracleArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Subproblem kind: SS, ES, SE or EE (weak user's metric first).
    #[arg(long)]
    kind: SubproblemKind,
    /// Normalized gain of the weak user, 1/mW.
    #[arg(long)]
    gamma1: f64,
    /// Normalized gain of the strong user, 1/mW.
    #[arg(long)]
    gamma2: f64,
    /// Weight of the weak user.
    #[arg(long, default_value_t = 0.5)]
    w1: f64,
    /// Solve under one scheme (NOMA or OMA).
    #[arg(long, conflicts_with = "adaptive", required_unless_present = "adaptive")]
    scheme: Option<MaScheme>,
    /// Solve under both schemes and keep the better one.
    #[arg(long)]
    adaptive: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlanKind {
    Proposed,
    Random,
    StrongestWeakest,
}

#[derive(Args)]
#[command(group(ArgGroup::new("source").required(true).args(["scenario_file", "deterministic", "random"])))]
struct ClusterArgs {
    /// Scenario JSON file.
    #[arg(long)]
    scenario_file: Option<PathBuf>,
    /// The ten-user line scenario.
    #[arg(long)]
    deterministic: bool,
    /// Classes of users 1..10 of the line scenario, one letter each (I = IoT, E = eMBB).
    #[arg(long, requires = "deterministic", default_value = "EEEEEEEEEE")]
    classes: String,
    /// Random drop: N_IOT N_EMBB SEED.
    #[arg(long, num_args = 3, value_names = ["N_IOT", "N_EMBB", "SEED"])]
    random: Option<Vec<u64>>,
    #[arg(long, value_enum, default_value_t = PlanKind::Proposed)]
    plan: PlanKind,
    /// Seed of the random clustering; defaults to the config seed.
    #[arg(long)]
    plan_seed: Option<u64>,
}

#[derive(Args)]
#[command(group(ArgGroup::new("what").required(true).args(["figure", "var"])))]
struct SweepArgs {
    /// Preset sweep: 9 (group size), 10 (eMBB count), 11 (circuit power) or 12 (weight).
    #[arg(long)]
    figure: Option<u32>,
    /// Custom sweep variable: n_per_group, n_embb, q_mw or w1.
    #[arg(long, requires = "values")]
    var: Option<SweepVar>,
    /// Comma-separated values; for presets they replace the default range.
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<f64>>,
    /// Fixed IoT count of custom sweeps.
    #[arg(long, default_value_t = 6)]
    n_iot: usize,
    /// Fixed eMBB count of custom sweeps.
    #[arg(long, default_value_t = 8)]
    n_embb: usize,
    /// Fixed weight of custom sweeps.
    #[arg(long, default_value_t = 0.5)]
    w1: f64,
    /// Drops per sweep point; defaults to the config value.
    #[arg(long)]
    drops: Option<usize>,
    /// Base seed; defaults to the config value.
    #[arg(long)]
    seed: Option<u64>,
    /// CSV output path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the records with per-drop totals as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    kind: SubproblemKind,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Seed of the random clusters; defaults to the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Oracle points per axis; defaults to the config value.
    #[arg(long)]
    grid: Option<usize>,
}

enum Failure {
    Usage(String),
    Numeric(String),
}

impl From<noma_mop::Error> for Failure {
    fn from(e: noma_mop::Error) -> Self {
        if e.is_input_error() {
            Failure::Usage(e.to_string())
        } else {
            Failure::Numeric(e.to_string())
        }
    }
}

type Outcome<T> = Result<T, Failure>;

fn usage<T>(msg: impl Into<String>) -> Outcome<T> {
    Err(Failure::Usage(msg.into()))
}

/// Writes to standard output; a closed pipe downstream is not an error.
fn emit(text: &str) -> Outcome<()> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Failure::Numeric(format!("cannot write output: {e}"))),
        _ => Ok(()),
    }
}

fn print_json(v: &Value) -> Outcome<()> {
    emit(&(serde_json::to_string_pretty(v).expect("JSON value serializes") + "\n"))
}

fn checked(r: SolveResult, what: &str) -> Outcome<SolveResult> {
    if r.converged {
        Ok(r)
    } else {
        Err(Failure::Numeric(format!("{what} solver did not converge")))
    }
}

fn result_json(r: &SolveResult) -> Value {
    json!({
        "scheme": r.alloc.scheme,
        "p1": r.alloc.p1,
        "p2": r.alloc.p2,
        "objective": r.objective,
        "converged": r.converged,
        "iterations": r.iterations(),
        "trace": r.trace,
    })
}

fn cmd_solve(cfg: &RunConfig, a: &SolveArgs) -> Outcome<()> {
    let spec = ClusterSpec::of_kind(a.kind, a.gamma1, a.gamma2, a.w1, cfg.p_max)?;
    let params = cfg.params();
    if a.adaptive {
        let d = decide_cluster(&spec, &params, &cfg.solver)?;
        let oma = checked(d.oma_result.clone(), "OMA")?;
        let noma = d.noma_result.clone().map(|r| checked(r, "NOMA")).transpose()?;
        let chosen = d.chosen_result();
        return print_json(&json!({
            "kind": a.kind,
            "w1": a.w1,
            "chosen": d.chosen,
            "p1": chosen.alloc.p1,
            "p2": chosen.alloc.p2,
            "objective": d.objective,
            "noma": noma.as_ref().map(result_json),
            "oma": result_json(&oma),
        }));
    }
    let r = match a.scheme.expect("clap requires a scheme without --adaptive") {
        MaScheme::Noma => checked(solve_noma(&spec, &params, &cfg.solver)?, "NOMA")?,
        MaScheme::Oma => checked(solve_oma(&spec, &params, &cfg.solver)?, "OMA")?,
    };
    let mut out = result_json(&r);
    out["kind"] = json!(a.kind);
    out["w1"] = json!(a.w1);
    print_json(&out)
}

fn parse_classes(s: &str) -> Outcome<[UserClass; 10]> {
    let classes: Vec<UserClass> = s
        .chars()
        .map(|c| match c.to_ascii_uppercase() {
            'I' => Ok(UserClass::Iot),
            'E' => Ok(UserClass::Embb),
            _ => Err(Failure::Usage(format!("class letter {c:?} is not I or E"))),
        })
        .collect::<Outcome<_>>()?;
    classes
        .try_into()
        .map_err(|v: Vec<UserClass>| Failure::Usage(format!("--classes needs 10 letters, got {}", v.len())))
}

fn cmd_cluster(cfg: &RunConfig, a: &ClusterArgs) -> Outcome<()> {
    let scenario = if let Some(path) = &a.scenario_file {
        let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
        Scenario::from_json(&text)?
    } else if a.deterministic {
        deterministic_scenario(parse_classes(&a.classes)?)
    } else {
        let r = a.random.as_deref().expect("clap requires one scenario source");
        random_scenario(r[0] as usize, r[1] as usize, &cfg.geometry(), &cfg.channel(), r[2])?
    };
    let plan = match a.plan {
        PlanKind::Proposed => {
            build_proposed_plan(&scenario.records_of(UserClass::Iot), &scenario.records_of(UserClass::Embb))?
        }
        PlanKind::Random => build_random_plan(&scenario.records(), a.plan_seed.unwrap_or(cfg.seed)),
        PlanKind::StrongestWeakest => build_strongest_weakest_plan(&scenario.records()),
    };
    print_json(&json!({ "scenario": scenario, "plan": plan }))
}

fn counts(values: &[f64]) -> Outcome<Vec<usize>> {
    values
        .iter()
        .map(|v| {
            if *v >= 0.0 && v.fract() == 0.0 {
                Ok(*v as usize)
            } else {
                usage(format!("user count must be a non-negative integer, got {v}"))
            }
        })
        .collect()
}

/// Writes through a temporary sibling file so readers never see a partial table.
fn write_atomically(path: &Path, contents: &str) -> Outcome<()> {
    let tmp = path.with_extension("partial");
    let io = |e: std::io::Error| Failure::Usage(format!("cannot write {}: {e}", path.display()));
    fs::write(&tmp, contents).map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}

fn cmd_sweep(cfg: &RunConfig, a: &SweepArgs) -> Outcome<()> {
    let mut setup = cfg.sweep_setup();
    setup.drops = a.drops.unwrap_or(cfg.drops);
    setup.seed = a.seed.unwrap_or(cfg.seed);
    let records: Vec<SweepRecord> = if let Some(n) = a.figure {
        let figure = Figure::from_number(n)?;
        let values = a.values.clone().unwrap_or_else(|| figure.default_values());
        figure.run(&values, &setup)?
    } else {
        let values = a.values.as_deref().expect("clap requires values with --var");
        match a.var.expect("clap requires a sweep") {
            SweepVar::GroupSize => sweep_group_size(&counts(values)?, a.w1, &setup)?,
            SweepVar::EmbbCount => sweep_embb_count(&counts(values)?, a.n_iot, a.w1, &setup)?,
            SweepVar::CircuitPower => sweep_circuit_power(values, a.n_iot, a.n_embb, a.w1, &setup)?,
            SweepVar::Weight => sweep_weight(values, a.n_iot, a.n_embb, &setup)?,
        }
    };
    let csv = to_csv(&records);
    match &a.out {
        Some(path) => write_atomically(path, &csv)?,
        None => emit(&csv)?,
    }
    if let Some(path) = &a.json {
        let text = serde_json::to_string_pretty(&records).expect("records serialize");
        write_atomically(path, &text)?;
    }
    Ok(())
}

fn relative_gap(oracle: f64, solver: f64) -> f64 {
    (oracle - solver) / oracle.abs().max(f64::MIN_POSITIVE)
}

fn cmd_oracle_check(cfg: &RunConfig, a: &OracleArgs) -> Outcome<()> {
    if a.trials == 0 {
        return usage("--trials must be at least 1");
    }
    let grid = GridSpec::square(a.grid.unwrap_or(cfg.oracle_grid));
    grid.validate()?;
    let params = cfg.params();
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed.unwrap_or(cfg.seed));
    let mut schemes = vec![MaScheme::Oma];
    if a.kind != SubproblemKind::EE {
        schemes.insert(0, MaScheme::Noma);
    }
    let mut max_gap = vec![f64::NEG_INFINITY; schemes.len()];
    let mut bound_violations = 0usize;
    let mut dominance_violations = 0usize;
    for _ in 0..a.trials {
        let x: f64 = rng.gen_range(0.1..=100.0);
        let y: f64 = rng.gen_range(0.1..=100.0);
        let w1: f64 = rng.gen_range(0.05..=0.95);
        let spec = ClusterSpec::of_kind(a.kind, x.min(y), x.max(y), w1, cfg.p_max)?;
        for (k, &scheme) in schemes.iter().enumerate() {
            let r = match scheme {
                MaScheme::Noma => checked(solve_noma(&spec, &params, &cfg.solver)?, "NOMA")?,
                MaScheme::Oma => checked(solve_oma(&spec, &params, &cfg.solver)?, "OMA")?,
            };
            let o = oracle_solve(&spec, scheme, &params, grid)?;
            max_gap[k] = max_gap[k].max(relative_gap(o.objective, r.objective));
            if r.objective > o.objective + o.gap_bound + 1e-12 {
                bound_violations += 1;
            }
            if a.kind == SubproblemKind::EE {
                let noma = oracle_solve(&spec, MaScheme::Noma, &params, grid)?;
                if r.objective < noma.objective {
                    dominance_violations += 1;
                }
            }
        }
    }
    let mut out = json!({
        "kind": a.kind,
        "trials": a.trials,
        "grid": grid.n1,
        "max_relative_gap": max_gap.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        "bound_violations": bound_violations,
    });
    for (scheme, gap) in schemes.iter().zip(&max_gap) {
        out[format!("{}_max_relative_gap", scheme.to_string().to_lowercase())] = json!(gap);
    }
    if a.kind == SubproblemKind::EE {
        out["oma_dominance_violations"] = json!(dominance_violations);
    }
    print_json(&out)
}

fn run(cli: &Cli) -> Outcome<()> {
    let cfg = RunConfig::load(cli.config.as_deref()).map_err(Failure::Usage)?;
    cfg.params().validate()?;
    cfg.solver.validate()?;
    match &cli.command {
        Command::Solve(a) => cmd_solve(&cfg, a),
        Command::Cluster(a) => cmd_cluster(&cfg, a),
        Command::Sweep(a) => cmd_sweep(&cfg, a),
        Command::OracleCheck(a) => cmd_oracle_check(&cfg, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(3)
        }
    }
}
