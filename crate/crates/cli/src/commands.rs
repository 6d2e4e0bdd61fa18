//! Subcommand definitions and dispatch.

use crate::output::{emit, object};
use anyhow::{Context, Result, anyhow, bail};
use clap::{Args, Parser, Subcommand, ValueEnum};
use fairbid_core::io;
use fairbid_core::lp::{self, DualCertificate, MWConfig};
use fairbid_core::model::{FractionalAllocation, Instance, PriceModel};
use fairbid_core::online::{self, HorizonParams, InstanceSampler};
use fairbid_core::oracle;
use fairbid_core::rounding;
use fairbid_core::sim::{
    self, AuctionConfig, CompareConfig, PayPer, ScenarioSpec, SimulationReport, Strategy, StrategySpec,
};
use serde::{Deserialize, Serialize};
use serde_json::{Value, json};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "fairbid", version, about = "Constrained autobidding: solve, round, simulate")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the relaxed allocation program on an instance config
    Solve(SolveArgs),
    /// Round a saved fractional solution to bid decisions
    Round(RoundArgs),
    /// Exact small-instance solvers and the threshold certificate check
    Oracle(OracleArgs),
    /// Run the per-step online bidder over i.i.d. arrivals
    Online(OnlineArgs),
    /// Simulate one strategy on a population
    Simulate(SimulateArgs),
    /// Sweep strategies across budgets and emit plot-ready CSV
    Compare(CompareArgs),
    /// Generate a synthetic population CSV
    Generate(GenerateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum PriceArg {
    First,
    Second,
}

impl From<PriceArg> for PriceModel {
    fn from(p: PriceArg) -> Self {
        match p {
            PriceArg::First => PriceModel::First,
            PriceArg::Second => PriceModel::Second,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PayArg {
    Click,
    Impression,
}

impl From<PayArg> for PayPer {
    fn from(p: PayArg) -> Self {
        match p {
            PayArg::Click => PayPer::Click,
            PayArg::Impression => PayPer::Impression,
        }
    }
}

/// Where the population comes from: an instance config file or a named
/// scenario (or a scenario JSON file).
#[derive(Args)]
struct InstanceArgs {
    /// Instance config JSON ({"budget", "groups", "population"})
    #[arg(long, conflicts_with = "scenario")]
    config: Option<PathBuf>,
    /// Built-in scenario name (example_3_1, appendix_a1, appendix_a2,
    /// synthetic, synthetic_21) or path to a scenario JSON file
    #[arg(long)]
    scenario: Option<String>,
    /// Override the instance budget
    #[arg(long)]
    budget: Option<f64>,
    /// Override per-group representation targets (comma-separated)
    #[arg(long, value_delimiter = ',')]
    mu: Option<Vec<f64>>,
}

impl InstanceArgs {
    fn load(&self, seed: u64) -> Result<Instance> {
        let mut instance = match (&self.config, &self.scenario) {
            (Some(path), None) => io::load_instance(path)?,
            (None, Some(name)) => {
                let spec = if Path::new(name).exists() {
                    let text = std::fs::read_to_string(name)?;
                    serde_json::from_str::<ScenarioSpec>(&text)
                        .with_context(|| format!("scenario file {name}"))?
                } else {
                    ScenarioSpec { scenario: name.clone(), budget: None, mu: None, synthetic: None }
                };
                sim::scenario_instance(&spec, seed)?
            }
            _ => bail!("exactly one of --config or --scenario is required"),
        };
        if let Some(budget) = self.budget {
            if budget < 0.0 {
                bail!("--budget {budget} is negative");
            }
            instance.budget = budget;
        }
        if let Some(mu) = &self.mu {
            if mu.len() != instance.n_groups() {
                bail!("--mu needs {} values, got {}", instance.n_groups(), mu.len());
            }
            for (g, &m) in mu.iter().enumerate() {
                if !(0.0..=1.0).contains(&m) {
                    bail!("--mu value {m} for group {} outside [0, 1]", instance.groups[g].name);
                }
                instance.groups[g].mu = m;
            }
        }
        Ok(instance)
    }
}

fn resolve_seed(explicit: Option<u64>) -> u64 {
    explicit
        .or_else(|| std::env::var("FAIRBID_SEED").ok().and_then(|s| s.parse().ok()))
        .unwrap_or(0)
}

/// Saved fractional solution, composable between `solve` and `round`.
#[derive(Serialize, Deserialize)]
struct SolutionFile {
    x: Vec<f64>,
    objective: f64,
    delta: f64,
    #[serde(rename = "achieved_V")]
    achieved_v: f64,
    duals: Option<DualCertificate>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Approximation parameter δ
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long)]
    seed: Option<u64>,
    /// Write the report JSON here as well as stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the fractional solution here (input for `round`)
    #[arg(long)]
    solution: Option<PathBuf>,
    /// Suppress the timestamp field for byte-identical reruns
    #[arg(long)]
    deterministic: bool,
}

fn run_solve(args: SolveArgs) -> Result<()> {
    let seed = resolve_seed(args.seed);
    let instance = args.instance.load(seed)?;
    let bounds = lp::derive_bounds(&instance);
    let config = MWConfig::for_delta(args.delta, instance.n_groups())?;
    let solution = lp::solve_mw(&instance, &config, &bounds)?;
    let report = solution.report(&instance, args.delta);
    if let Some(path) = &args.solution {
        let file = SolutionFile {
            x: solution.allocation.values().to_vec(),
            objective: solution.evaluation.objective,
            delta: args.delta,
            achieved_v: solution.achieved_v,
            duals: solution.duals.clone(),
        };
        std::fs::write(path, serde_json::to_string_pretty(&file)?)?;
    }
    let mut value = serde_json::to_value(&report)?;
    if let Value::Object(map) = &mut value {
        map.insert("degenerate".into(), Value::from(solution.degenerate));
    }
    emit(value, args.deterministic, args.out.as_deref())
}

#[derive(Clone, Copy, ValueEnum)]
enum RoundMode {
    Det,
    Rand,
}

#[derive(Args)]
struct RoundArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Fractional solution JSON written by `solve`
    #[arg(long)]
    solution: PathBuf,
    #[arg(long, value_enum)]
    mode: RoundMode,
    /// Scaling parameter ε for randomized rounding
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long)]
    seed: Option<u64>,
    /// Randomized trials
    #[arg(long, default_value_t = 100)]
    trials: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    deterministic: bool,
}

fn run_round(args: RoundArgs) -> Result<()> {
    let seed = resolve_seed(args.seed);
    let instance = args.instance.load(seed)?;
    let text = std::fs::read_to_string(&args.solution)?;
    let file: SolutionFile = serde_json::from_str(&text).context("solution file")?;
    let x = FractionalAllocation::new(file.x.clone())
        .map_err(|e| anyhow!("solution allocation invalid: {e}"))?;
    let eval_x = instance.evaluate(x.values(), fairbid_core::model::DEFAULT_TOLERANCE)?;

    match args.mode {
        RoundMode::Det => {
            let repaired = rounding::repair_round_condition(&instance, &x)?;
            let y = rounding::deterministic_round(&instance, &repaired)?;
            let eval_rep = instance.evaluate(repaired.values(), fairbid_core::model::DEFAULT_TOLERANCE)?;
            let eval_y = instance.evaluate(&y.as_floats(), fairbid_core::model::DEFAULT_TOLERANCE)?;
            let v_max = instance.queries.iter().map(|q| q.value).fold(0.0, f64::max);
            let report = object(vec![
                ("mode", json!("det")),
                ("objective", json!(eval_y.objective)),
                ("spend", json!(eval_y.spend)),
                ("group_slack", json!(eval_y.group_slack)),
                ("bits", json!(y.bits().iter().map(|&b| b as u8).collect::<Vec<u8>>())),
                ("budget_within_fractional", json!(eval_y.spend <= eval_rep.spend + 1e-9)),
                (
                    "objective_within_lemma",
                    json!(eval_y.objective >= eval_rep.objective - instance.n_groups().max(1) as f64 * v_max - 1e-9),
                ),
            ]);
            emit(report, args.deterministic, args.out.as_deref())
        }
        RoundMode::Rand => {
            let flex = rounding::flexibility(&instance, &x);
            let mut trials_json = Vec::new();
            let mut budget_ok = 0usize;
            let mut fairness_ok = 0usize;
            let mut utility_sum = 0.0;
            for t in 0..args.trials {
                let round = rounding::randomized_round(&instance, &x, &flex.s_zero, args.epsilon, seed + t)?;
                // realized clicks from a distinct stream of the same trial seed
                let outcome = rounding::realize_clicks(&instance, &round.y, (seed + t) ^ 0x9e3779b9);
                let b_ok = outcome.spend <= eval_x.spend + 1e-9;
                let f_ok =
                    outcome.group_slack.iter().zip(&eval_x.group_slack).all(|(&s, &sx)| s <= sx + 1e-9);
                budget_ok += b_ok as usize;
                fairness_ok += f_ok as usize;
                utility_sum += outcome.utility;
                trials_json.push(json!({
                    "trial": t,
                    "spend": outcome.spend,
                    "utility": outcome.utility,
                    "budget_ok": b_ok,
                    "fairness_ok": f_ok,
                }));
            }
            let trials = args.trials.max(1) as f64;
            let report = object(vec![
                ("mode", json!("rand")),
                ("epsilon", json!(args.epsilon)),
                ("gamma", json!(flex.gamma)),
                ("s_zero_size", json!(flex.s_zero.len())),
                ("trials", json!(args.trials)),
                ("budget_ok_rate", json!(budget_ok as f64 / trials)),
                ("fairness_ok_rate", json!(fairness_ok as f64 / trials)),
                ("mean_utility", json!(utility_sum / trials)),
                ("fractional_utility", json!(eval_x.objective)),
                ("utility_floor", json!((1.0 - args.epsilon) * eval_x.objective)),
                ("per_trial", Value::Array(trials_json)),
            ]);
            emit(report, args.deterministic, args.out.as_deref())
        }
    }
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    deterministic: bool,
}

fn run_oracle(args: OracleArgs) -> Result<()> {
    let seed = resolve_seed(args.seed);
    let instance = args.instance.load(seed)?;
    let exact = oracle::exact_lp(&instance)?;
    let eval = instance.evaluate(exact.allocation.values(), fairbid_core::model::DEFAULT_TOLERANCE)?;
    let group_slack: serde_json::Map<String, Value> = instance
        .groups
        .iter()
        .zip(&eval.group_slack)
        .map(|(g, &s)| (g.name.clone(), json!(s)))
        .collect();
    let integer = if instance.len() <= oracle::BRUTE_FORCE_MAX {
        let (y, obj) = oracle::brute_force_integer_opt(&instance)?;
        json!({"objective": obj, "bits": y.bits().iter().map(|&b| b as u8).collect::<Vec<u8>>()})
    } else {
        Value::Null
    };
    let threshold_check = if exact.duals.alpha > 0.0 {
        let report = oracle::verify_threshold_theorem(&instance, &exact.allocation, &exact.duals)?;
        json!({"passed": report.passed(), "checked": report.checked,
               "skipped_zero_ctr": report.skipped_zero_ctr, "fractional": report.fractional})
    } else {
        Value::Null
    };
    let report = object(vec![
        ("objective", json!(eval.objective)),
        ("spend", json!(eval.spend)),
        ("group_slack", Value::Object(group_slack)),
        ("delta", json!(0.0)),
        ("achieved_V", json!(eval.objective)),
        ("iterations", json!(exact.pivots)),
        ("dual_objective", json!(exact.dual_objective)),
        ("alpha", json!(exact.duals.alpha)),
        ("beta", json!(exact.duals.beta)),
        ("integer_opt", integer),
        ("threshold_check", threshold_check),
    ]);
    emit(report, args.deterministic, args.out.as_deref())
}

#[derive(Args)]
struct OnlineArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long)]
    horizon: usize,
    /// Dual step size; defaults to horizon^{-1/2}
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Per-step CSV output path
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Solve the realized sequence offline at this δ and report regret
    #[arg(long)]
    hindsight_delta: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    deterministic: bool,
}

fn run_online(args: OnlineArgs) -> Result<()> {
    let seed = resolve_seed(args.seed);
    let instance = args.instance.load(seed)?;
    let budget = instance.budget;
    let source = InstanceSampler { instance: &instance };
    let report = online::run_horizon(
        &source,
        &HorizonParams {
            budget,
            horizon: args.horizon,
            eta: args.eta,
            seed,
            record_steps: args.csv.is_some(),
            hindsight_delta: args.hindsight_delta,
        },
    )?;
    if let Some(path) = &args.csv {
        let mut text = String::from("t,x,spend,lambda_budget");
        for g in &instance.groups {
            text.push_str(&format!(",lambda_{}", g.name));
        }
        text.push_str(",c_budget");
        for g in &instance.groups {
            text.push_str(&format!(",c_{}", g.name));
        }
        text.push('\n');
        for step in &report.steps {
            text.push_str(&format!("{},{},{},{}", step.t, step.x as u8, step.spend, step.lambda_budget));
            for l in &step.lambda_group {
                text.push_str(&format!(",{l}"));
            }
            text.push_str(&format!(",{}", step.c_budget));
            for c in &step.c_group {
                text.push_str(&format!(",{c}"));
            }
            text.push('\n');
        }
        std::fs::write(path, text)?;
    }
    let summary = object(vec![
        ("horizon", json!(report.horizon)),
        ("utility", json!(report.utility)),
        ("spend", json!(report.spend)),
        ("budget", json!(budget)),
        ("avg_budget_constraint", json!(report.avg_budget_constraint)),
        ("avg_group_constraint", json!(report.avg_group_constraint)),
        ("violations", json!(report.violations())),
        ("hindsight_objective", json!(report.hindsight_objective)),
        ("regret", json!(report.regret)),
    ]);
    emit(summary, args.deterministic, args.out.as_deref())
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Strategy spec, e.g. single_bid:1.0, bid_parity, outcome_parity,
    /// average_bid_parity:1.0:0.01, approximate_parity:1.0:0.01,
    /// autobidder:0.05:0.1, bids_file:\<path\>, example_parity_bids
    #[arg(long)]
    strategy: String,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "second")]
    price: PriceArg,
    #[arg(long, value_enum, default_value = "impression")]
    pay: PayArg,
    /// Skip unaffordable arrivals instead of stopping the run
    #[arg(long)]
    skip_unaffordable: bool,
    /// Trial-level parallelism
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    deterministic: bool,
}

fn parse_strategy_spec(instance: &Instance, text: &str) -> Result<(String, StrategySpec)> {
    let parts: Vec<&str> = text.split(':').collect();
    let num = |s: &str, what: &str| -> Result<f64> {
        s.parse::<f64>().map_err(|_| anyhow!("strategy field {what}: bad number `{s}`"))
    };
    let spec = match parts[0] {
        "single_bid" => {
            if parts.len() != 2 {
                bail!("single_bid takes one value, e.g. single_bid:1.0");
            }
            StrategySpec::Fixed(Strategy::single_bid(num(parts[1], "bid")?))
        }
        "bid_parity" => StrategySpec::BidParity,
        "outcome_parity" => match parts.len() {
            1 => StrategySpec::BidOutcomeParity { group_a: 0, group_b: 1 },
            3 => StrategySpec::BidOutcomeParity {
                group_a: parts[1].parse()?,
                group_b: parts[2].parse()?,
            },
            _ => bail!("outcome_parity takes no fields or two group indices"),
        },
        "average_bid_parity" => {
            if parts.len() != 3 {
                bail!("average_bid_parity takes w and eps, e.g. average_bid_parity:1.0:0.01");
            }
            StrategySpec::AverageBidParity {
                group_a: 0,
                group_b: 1,
                w: num(parts[1], "w")?,
                eps: num(parts[2], "eps")?,
            }
        }
        "approximate_parity" => {
            if parts.len() != 3 {
                bail!("approximate_parity takes w and eps");
            }
            StrategySpec::ApproximateParity {
                group_a: 0,
                group_b: 1,
                w: num(parts[1], "w")?,
                eps: num(parts[2], "eps")?,
            }
        }
        "autobidder" => match parts.len() {
            1 => StrategySpec::Autobidder { delta: 0.05, epsilon: 0.1 },
            3 => StrategySpec::Autobidder { delta: num(parts[1], "delta")?, epsilon: num(parts[2], "epsilon")? },
            _ => bail!("autobidder takes no fields or delta and epsilon"),
        },
        "bids_file" => {
            if parts.len() != 2 {
                bail!("bids_file takes a path");
            }
            let text = std::fs::read_to_string(parts[1])?;
            let bids: Vec<f64> = serde_json::from_str(&text).context("bids file must be a JSON array")?;
            StrategySpec::Fixed(Strategy::per_query(bids))
        }
        "example_parity_bids" => {
            StrategySpec::Fixed(Strategy::per_query(sim::example_3_1_parity_bids(instance)))
        }
        other => bail!("unknown strategy `{other}`"),
    };
    Ok((text.to_string(), spec))
}

fn run_simulate(args: SimulateArgs) -> Result<()> {
    let seed = resolve_seed(args.seed);
    let instance = args.instance.load(seed)?;
    let (name, spec) = parse_strategy_spec(&instance, &args.strategy)?;
    let pay: PayPer = args.pay.into();
    let strategy = sim::build_strategy(&instance, &instance, &spec, instance.budget, pay)?;

    let mut config = AuctionConfig::new(args.price.into(), pay, args.trials, seed);
    if args.skip_unaffordable {
        config.budget_rule = sim::BudgetRule::Skip;
    }
    let jobs = args.jobs.clamp(1, args.trials.max(1));
    let report = if jobs == 1 {
        sim::run_auction(&instance, &strategy, &config)?
    } else {
        let chunk = args.trials.div_ceil(jobs);
        let parts: Vec<SimulationReport> = std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for j in 0..jobs {
                let start = j * chunk;
                let count = chunk.min(args.trials.saturating_sub(start));
                if count == 0 {
                    continue;
                }
                let mut part_config = config.clone();
                part_config.trials = count;
                part_config.stream_offset = start as u64;
                let instance = &instance;
                let strategy = &strategy;
                handles.push(scope.spawn(move || sim::run_auction(instance, strategy, &part_config)));
            }
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect::<Result<_, _>>()
        })?;
        SimulationReport::merge(&parts, pay).ok_or_else(|| anyhow!("no trials were run"))?
    };
    let mut value = serde_json::to_value(&report)?;
    if let Value::Object(map) = &mut value {
        map.insert("strategy".into(), Value::from(name));
        map.insert(
            "groups".into(),
            Value::from(instance.groups.iter().map(|g| g.name.clone()).collect::<Vec<_>>()),
        );
    }
    emit(value, args.deterministic, args.out.as_deref())
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Comma-separated strategy specs (see `simulate --strategy`)
    #[arg(long, value_delimiter = ',')]
    strategies: Vec<String>,
    /// Comma-separated budget levels
    #[arg(long, value_delimiter = ',')]
    budgets: Vec<f64>,
    #[arg(long, default_value_t = 500)]
    trials: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "second")]
    price: PriceArg,
    #[arg(long, value_enum, default_value = "impression")]
    pay: PayArg,
    #[arg(long, default_value_t = 0.5)]
    calibration_fraction: f64,
    /// Plot-ready CSV output path
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    deterministic: bool,
}

fn run_compare(args: CompareArgs) -> Result<()> {
    let seed = resolve_seed(args.seed);
    let instance = args.instance.load(seed)?;
    if args.budgets.is_empty() {
        bail!("--budgets must list at least one budget");
    }
    let specs: Vec<(String, StrategySpec)> = args
        .strategies
        .iter()
        .map(|s| parse_strategy_spec(&instance, s))
        .collect::<Result<_>>()?;
    let config = CompareConfig {
        budgets: args.budgets.clone(),
        trials: args.trials,
        seed,
        price: args.price.into(),
        pay_per: args.pay.into(),
        calibration_fraction: args.calibration_fraction,
    };
    let rows = sim::compare_strategies(&instance, &specs, &config)?;
    let names: Vec<String> = instance.groups.iter().map(|g| g.name.clone()).collect();
    let csv = sim::comparison_to_csv(&rows, &names);
    if let Some(path) = &args.out {
        std::fs::write(path, &csv)?;
    }
    let report = object(vec![
        ("rows", serde_json::to_value(&rows)?),
        ("groups", json!(names)),
        ("csv_written", json!(args.out.is_some())),
    ]);
    emit(report, args.deterministic, None)
}

#[derive(Args)]
struct GenerateArgs {
    /// Scenario name (synthetic, synthetic_21) or scenario JSON file
    #[arg(long, default_value = "synthetic")]
    scenario: String,
    #[arg(long)]
    seed: Option<u64>,
    /// Population CSV output path
    #[arg(long)]
    out: PathBuf,
    /// Also write an instance config JSON pointing at the CSV
    #[arg(long)]
    config_out: Option<PathBuf>,
    #[arg(long)]
    budget: Option<f64>,
}

fn run_generate(args: GenerateArgs) -> Result<()> {
    let seed = resolve_seed(args.seed);
    let instance_args = InstanceArgs {
        config: None,
        scenario: Some(args.scenario.clone()),
        budget: args.budget,
        mu: None,
    };
    let instance = instance_args.load(seed)?;
    io::write_population_csv(&args.out, &instance.queries, &instance.groups)?;
    if let Some(config_path) = &args.config_out {
        let population = args
            .out
            .file_name()
            .map(|f| f.to_string_lossy().into_owned())
            .unwrap_or_else(|| args.out.display().to_string());
        let config = io::InstanceConfig {
            budget: instance.budget,
            groups: instance.groups.clone(),
            population,
        };
        io::write_instance_config(config_path, &config)?;
    }
    eprintln!("wrote {} queries to {}", instance.len(), args.out.display());
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve(args) => run_solve(args),
        Command::Round(args) => run_round(args),
        Command::Oracle(args) => run_oracle(args),
        Command::Online(args) => run_online(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Compare(args) => run_compare(args),
        Command::Generate(args) => run_generate(args),
    }
}
