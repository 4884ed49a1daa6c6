use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ctmdp_reach::benchmarks::{generate_birth_chain, generate_sjs, Benchmark, SjsParams};
use ctmdp_reach::poisson::{poisson_weights, truncation_depth};
use ctmdp_reach::simulate::{simulate_baseline, simulate_scheduler, BaselinePolicy, SimConfig, SimOutcome};
use ctmdp_reach::sweep::{parse_grid, run_sweep, write_csv, SweepModel, SweepSpec};
use ctmdp_reach::{
    gu_solve_with, uniformise, Ctmdp, Error, GoalSpec, Objective, Query, Solution, SolverConfig, Variant,
};

/// Time-bounded reachability for continuous-time Markov decision processes.
#[derive(Debug, Parser)]
#[command(name = "ctmdp-reach", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Approximate optimal reachability values within epsilon.
    Solve(SolveArgs),
    /// Monte Carlo estimate under the extracted scheduler or a baseline policy.
    Simulate(SimulateArgs),
    /// Generate a benchmark model in the JSON model format.
    Gen(GenArgs),
    /// Run a grid of solver configurations and write one CSV row each.
    Sweep(SweepArgs),
    /// Print Poisson truncation weights as CSV.
    Poisson(PoissonArgs),
    /// Dump the uniformised model plus a state mapping sidecar.
    Uniformise(UniformiseArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VariantArg {
    Early,
    Late,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Early => Variant::Early,
            VariantArg::Late => Variant::Late,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Max,
    Min,
}

impl From<ObjectiveArg> for Objective {
    fn from(o: ObjectiveArg) -> Self {
        match o {
            ObjectiveArg::Max => Objective::Maximize,
            ObjectiveArg::Min => Objective::Minimize,
        }
    }
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Model file in the JSON model format.
    model: PathBuf,
    /// Comma-separated goal states.
    #[arg(long, value_delimiter = ',')]
    goal: Vec<usize>,
    /// Goal file of the form {"goal": [..]}.
    #[arg(long, conflicts_with = "goal")]
    goal_file: Option<PathBuf>,
}

impl ModelArgs {
    fn load(&self) -> Result<(Ctmdp, GoalSpec)> {
        let text = read(&self.model)?;
        let model = Ctmdp::from_json_str(&text).with_context(|| format!("model file {}", self.model.display()))?;
        let goal = match (&self.goal_file, self.goal.is_empty()) {
            (Some(path), _) => {
                GoalSpec::from_json_str(&read(path)?).with_context(|| format!("goal file {}", path.display()))?
            }
            (None, false) => GoalSpec::new(self.goal.iter().copied()),
            (None, true) => bail!("goal set required (use --goal or --goal-file)"),
        };
        goal.validate_for(&model).context("goal set")?;
        Ok((model, goal))
    }
}

#[derive(Debug, Args)]
struct QueryArgs {
    /// Time bound T.
    #[arg(short = 'T', long = "time")]
    time: f64,
    #[arg(long, value_enum, default_value = "late")]
    variant: VariantArg,
    #[arg(long, value_enum, default_value = "max")]
    objective: ObjectiveArg,
    #[arg(long, default_value_t = 1e-6)]
    eps: f64,
    #[arg(long, default_value_t = 0.1)]
    kappa: f64,
    /// Maximum number of rate-doubling rounds.
    #[arg(long, default_value_t = 40)]
    lambda_cap_doublings: usize,
}

impl QueryArgs {
    fn query(&self) -> Result<Query> {
        Ok(Query::new(
            self.time,
            self.variant.into(),
            self.objective.into(),
            self.eps,
            self.kappa,
        )?)
    }

    fn config(&self) -> SolverConfig {
        SolverConfig {
            max_rounds: self.lambda_cap_doublings,
            ..SolverConfig::default()
        }
    }
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    query: QueryArgs,
    /// Write the result JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the step scheduler dump.
    #[arg(long)]
    scheduler_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PolicyArg {
    /// The step scheduler extracted by the solver.
    Scheduler,
    /// Uniformly random enabled action on every state entry.
    Uniform,
    /// Fixed actions from --actions.
    Fixed,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    query: QueryArgs,
    #[arg(long, value_enum, default_value = "scheduler")]
    policy: PolicyArg,
    /// Fixed policy table as state:action pairs, e.g. 0:1,3:0.
    #[arg(long, value_delimiter = ',')]
    actions: Vec<String>,
    #[arg(long, default_value_t = 100_000)]
    runs: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.99)]
    confidence: f64,
    /// Original state the trajectories start from.
    #[arg(long, default_value_t = 0)]
    initial: usize,
    /// Append a CSV row with the outcome to this file.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[command(subcommand)]
    family: GenFamily,
}

#[derive(Debug, Subcommand)]
enum GenFamily {
    /// Stochastic job scheduling on identical processors.
    Sjs {
        #[arg(long)]
        processors: usize,
        /// Comma-separated job rates.
        #[arg(long, value_delimiter = ',', required = true)]
        rates: Vec<f64>,
        #[command(flatten)]
        out: GenOut,
    },
    /// Birth chain 0 -> 1 -> ... -> n-1.
    Birth {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        rate: f64,
        #[command(flatten)]
        out: GenOut,
    },
}

#[derive(Debug, Args)]
struct GenOut {
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write {"goal": [..], "initial": s} here.
    #[arg(long)]
    goal_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Sweep spec JSON; the flags below override its grids.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Model files to add; each needs --goal, shared by all files.
    #[arg(long)]
    model: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    goal: Vec<usize>,
    /// SJS generator spec PROCESSORS:RATE,RATE,...
    #[arg(long)]
    sjs: Vec<String>,
    /// Time-bound grid: a,b,c or start:stop:step.
    #[arg(long)]
    times: Option<String>,
    /// Precision grid: a,b,c or start:stop:step.
    #[arg(long)]
    eps: Option<String>,
    #[arg(long, value_enum, value_delimiter = ',')]
    variants: Vec<VariantArg>,
    #[arg(long, value_enum, value_delimiter = ',')]
    objectives: Vec<ObjectiveArg>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PoissonArgs {
    /// Poisson parameter λT.
    #[arg(long)]
    rate_time: f64,
    /// Tail mass budget used to pick the depth.
    #[arg(long, default_value_t = 1e-7)]
    delta: f64,
    /// Explicit depth; overrides --delta.
    #[arg(long)]
    depth: Option<usize>,
}

#[derive(Debug, Args)]
struct UniformiseArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Uniformisation rate; defaults to the maximal exit rate.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, value_enum, default_value = "late")]
    variant: VariantArg,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    mapping_out: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                out.write_all(b"\n")?;
            }
            Ok(())
        }
    }
}

/// Solves, keeping the best partial result when the rate cap is hit.
fn solve_or_partial(model: &Ctmdp, goal: &GoalSpec, q: &QueryArgs) -> Result<(Solution, bool)> {
    match gu_solve_with(model, goal, &q.query()?, &q.config()) {
        Ok(s) => Ok((s, true)),
        Err(Error::LambdaCapExceeded { best, rounds, best_gap }) => {
            log::warn!("lambda cap exceeded after {rounds} rounds, best gap {best_gap:e}");
            Ok((*best, false))
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_solve(a: &SolveArgs) -> Result<ExitCode> {
    let (model, goal) = a.model.load()?;
    let start = Instant::now();
    let (solution, converged) = solve_or_partial(&model, &goal, &a.query)?;
    log::info!("solved in {:.3}s", start.elapsed().as_secs_f64());
    emit(a.out.as_deref(), &solution.result_json_string())?;
    if let Some(p) = &a.scheduler_out {
        let dump = serde_json::to_string(&solution.scheduler_dump())?;
        emit(Some(p), &dump)?;
    }
    Ok(if converged {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

#[derive(Serialize)]
struct SimulateJson {
    estimate: f64,
    half_width: f64,
    successes: u64,
    runs: u64,
    seed: u64,
    policy: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    lower: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    upper: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
}

fn parse_actions(pairs: &[String]) -> Result<BTreeMap<usize, usize>> {
    pairs
        .iter()
        .map(|p| {
            let (s, a) = p
                .split_once(':')
                .ok_or_else(|| anyhow!("bad state:action pair {p:?}"))?;
            Ok((s.trim().parse()?, a.trim().parse()?))
        })
        .collect()
}

fn cmd_simulate(a: &SimulateArgs) -> Result<ExitCode> {
    let (model, goal) = a.model.load()?;
    let cfg = SimConfig {
        runs: a.runs,
        seed: a.seed,
        time_bound: a.query.time,
        confidence: a.confidence,
    };
    let (outcome, json, code): (SimOutcome, SimulateJson, ExitCode) = match a.policy {
        PolicyArg::Scheduler => {
            let (sol, converged) = solve_or_partial(&model, &goal, &a.query)?;
            let out = simulate_scheduler(&sol.uniformised, &sol.scheduler, &cfg, a.initial)?;
            let b = &sol.bounds;
            let json = SimulateJson {
                estimate: out.estimate,
                half_width: out.half_width,
                successes: out.successes,
                runs: out.runs,
                seed: out.seed,
                policy: "scheduler",
                lower: b.lower.get(a.initial).copied(),
                upper: b.upper.get(a.initial).copied(),
                lambda: Some(b.lambda_used),
            };
            (
                out,
                json,
                if converged {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(2)
                },
            )
        }
        PolicyArg::Uniform | PolicyArg::Fixed => {
            let (policy, name) = match a.policy {
                PolicyArg::Uniform => (BaselinePolicy::UniformRandom, "uniform"),
                _ => (BaselinePolicy::FixedActions(parse_actions(&a.actions)?), "fixed"),
            };
            let out = simulate_baseline(&model, &goal, &policy, &cfg, a.initial)?;
            let json = SimulateJson {
                estimate: out.estimate,
                half_width: out.half_width,
                successes: out.successes,
                runs: out.runs,
                seed: out.seed,
                policy: name,
                lower: None,
                upper: None,
                lambda: None,
            };
            (out, json, ExitCode::SUCCESS)
        }
    };
    emit(None, &serde_json::to_string_pretty(&json)?)?;
    if let Some(p) = &a.csv {
        let fresh = !p.exists();
        let mut f = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(p)
            .with_context(|| format!("cannot open {}", p.display()))?;
        if fresh {
            writeln!(f, "{}", SimOutcome::csv_header())?;
        }
        writeln!(f, "{}", outcome.csv_row())?;
    }
    Ok(code)
}

#[derive(Serialize)]
struct GoalOutJson {
    goal: Vec<usize>,
    initial: usize,
}

fn cmd_gen(a: &GenArgs) -> Result<ExitCode> {
    let (bench, out): (Benchmark, &GenOut) = match &a.family {
        GenFamily::Sjs { processors, rates, out } => (generate_sjs(&SjsParams::new(*processors, rates.clone()))?, out),
        GenFamily::Birth { n, rate, out } => (generate_birth_chain(*n, *rate)?, out),
    };
    emit(out.out.as_deref(), &bench.model.to_json_string())?;
    if let Some(p) = &out.goal_out {
        let g = GoalOutJson {
            goal: bench.goal.goal_states.iter().copied().collect(),
            initial: bench.initial,
        };
        emit(Some(p), &serde_json::to_string(&g)?)?;
    }
    log::info!(
        "{}: {} states, initial {}",
        bench.name,
        bench.model.num_states(),
        bench.initial
    );
    Ok(ExitCode::SUCCESS)
}

fn parse_sjs(text: &str) -> Result<SjsParams> {
    let (m, rates) = text
        .split_once(':')
        .ok_or_else(|| anyhow!("--sjs expects PROCESSORS:RATES, got {text:?}"))?;
    Ok(SjsParams::new(m.trim().parse()?, parse_grid(rates)?))
}

fn cmd_sweep(a: &SweepArgs) -> Result<ExitCode> {
    let (mut spec, base) = match &a.spec {
        Some(p) => (
            SweepSpec::from_json_str(&read(p)?).with_context(|| format!("sweep spec {}", p.display()))?,
            p.parent().map(Path::to_path_buf).unwrap_or_default(),
        ),
        None => (
            SweepSpec {
                models: Vec::new(),
                time_bounds: Vec::new(),
                epsilons: vec![1e-6],
                variants: vec![Variant::Late],
                objectives: vec![Objective::Maximize],
                kappa: ctmdp_reach::model::DEFAULT_KAPPA,
                max_rounds: SolverConfig::default().max_rounds,
                out: None,
            },
            PathBuf::from("."),
        ),
    };
    if !a.model.is_empty() && a.goal.is_empty() {
        bail!("goal set required for --model (use --goal)");
    }
    for m in &a.model {
        spec.models.push(SweepModel::File {
            path: std::env::current_dir()?.join(m),
            goal: a.goal.clone(),
            initial: 0,
            name: Some(m.display().to_string()),
        });
    }
    for s in &a.sjs {
        spec.models.push(SweepModel::Sjs(parse_sjs(s)?));
    }
    if let Some(t) = &a.times {
        spec.time_bounds = parse_grid(t)?;
    }
    if let Some(e) = &a.eps {
        spec.epsilons = parse_grid(e)?;
    }
    if !a.variants.is_empty() {
        spec.variants = a.variants.iter().map(|&v| v.into()).collect();
    }
    if !a.objectives.is_empty() {
        spec.objectives = a.objectives.iter().map(|&o| o.into()).collect();
    }
    if let Some(k) = a.kappa {
        spec.kappa = k;
    }
    let records = run_sweep(&spec, &base)?;
    let mut buf = Vec::new();
    write_csv(&records, &mut buf)?;
    let out = a.out.clone().or_else(|| spec.out.as_ref().map(|p| base.join(p)));
    emit(out.as_deref(), std::str::from_utf8(&buf)?)?;
    Ok(if records.iter().all(|r| r.converged) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn cmd_poisson(a: &PoissonArgs) -> Result<ExitCode> {
    let depth = match a.depth {
        Some(d) => d,
        None => truncation_depth(a.rate_time, a.delta)?,
    };
    let p = poisson_weights(a.rate_time, depth)?;
    let mut text = String::from("i,weight\n");
    for (i, w) in p.weights().iter().enumerate() {
        text.push_str(&format!("{i},{w}\n"));
    }
    emit(None, &text)?;
    log::info!("depth {depth}, tail mass {:e}", p.tail_mass);
    Ok(ExitCode::SUCCESS)
}

fn cmd_uniformise(a: &UniformiseArgs) -> Result<ExitCode> {
    let (model, goal) = a.model.load()?;
    let lambda = a.lambda.unwrap_or_else(|| model.max_exit_rate());
    let um = uniformise(&model, &goal, lambda, a.variant.into())?;
    emit(a.out.as_deref(), &um.model.to_json_string())?;
    if let Some(p) = &a.mapping_out {
        emit(Some(p), &serde_json::to_string_pretty(&um.mapping())?)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage errors are input errors; exit code 2 is reserved for the rate cap.
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Poisson(a) => cmd_poisson(a),
        Command::Uniformise(a) => cmd_uniformise(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
