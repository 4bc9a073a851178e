use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use mlrcpf::io::{
    export_plan, generate_case_study, load_document, load_plan, render_map, save_document,
    InstanceDocument,
};
use mlrcpf::optimizer::{
    baseline_deterministic, baseline_robust, brute_force_with_bound, evaluate, format_log,
    local_search_optimize, nominal_profit, parse_rho_grid, sensitivity_sweep, PlanMetrics,
    SolverConfig, SweepMode, DEFAULT_SEARCH_BOUND,
};
use mlrcpf::seed::derive_seed;
use mlrcpf::spatial::build_adjacency;
use mlrcpf::temporal::simulate;
use mlrcpf::uncertainty::{generate_scenarios, ScenarioSet, ScenarioSpec};
use mlrcpf::{Plan, PlanningInstance};

/// Robust multi-period crop planning on a land-unit grid.
#[derive(Parser)]
#[command(name = "mlrcpf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize a plan and write the plan table, states, metrics, and maps.
    Solve(SolveArgs),
    /// Metrics of an existing plan table.
    Evaluate(EvaluateArgs),
    /// Worst-case profit over a list of radii.
    Sweep(SweepArgs),
    /// Write the synthetic 54-unit case study as an instance document.
    GenCaseStudy(GenArgs),
    /// Exhaustive search on a small instance.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct ScenarioArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Scenario count; defaults to the document's scenario spec, else 200.
    #[arg(long)]
    scenarios: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SearchArgs {
    /// Iterations per restart.
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    /// Solver settings as JSON; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Proposed,
    BaselineDet,
    BaselineRob,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    input: ScenarioArgs,
    #[arg(long, default_value_t = 0.05)]
    rho: f64,
    #[arg(long, value_enum, default_value_t = Mode::Proposed)]
    mode: Mode,
    #[command(flatten)]
    search: SearchArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    input: ScenarioArgs,
    #[arg(long)]
    plan: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    rho: f64,
    /// Write the metrics document here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    input: ScenarioArgs,
    #[arg(long, default_value = "0,0.01,0.02,0.05,0.1,0.15,0.2")]
    rho_grid: String,
    /// Plan to sweep; without it the proposed plan at --rho is solved first.
    #[arg(long)]
    plan: Option<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    rho: f64,
    /// Re-solve at every radius instead of re-evaluating one plan.
    #[arg(long)]
    resolve: bool,
    #[command(flatten)]
    search: SearchArgs,
    /// Write the curve here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    input: ScenarioArgs,
    #[arg(long, default_value_t = 0.05)]
    rho: f64,
    /// Largest number of candidate plans to enumerate.
    #[arg(long, default_value_t = DEFAULT_SEARCH_BOUND)]
    bound: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Machine-readable metrics; money in raw CNY.
#[derive(Serialize)]
struct MetricsReport {
    unit: &'static str,
    rho: f64,
    scenarios: usize,
    seed: u64,
    total_expected_profit: f64,
    worst_case_profit: f64,
    volatility: f64,
    legume_ratio: f64,
    nominal_profit: f64,
}

impl MetricsReport {
    fn new(metrics: &PlanMetrics, nominal: f64, rho: f64, scenarios: usize, seed: u64) -> Self {
        MetricsReport {
            unit: "CNY",
            rho,
            scenarios,
            seed,
            total_expected_profit: metrics.total_expected_profit,
            worst_case_profit: metrics.worst_case_profit,
            volatility: metrics.volatility,
            legume_ratio: metrics.legume_ratio,
            nominal_profit: nominal,
        }
    }

    fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("metrics serialize");
        s.push('\n');
        s
    }

    fn summary(&self) -> String {
        let wan = |x: f64| x / 1e4;
        format!(
            "expected profit   {:>12.2} x10^4 CNY\n\
             worst-case profit {:>12.2} x10^4 CNY\n\
             nominal profit    {:>12.2} x10^4 CNY\n\
             volatility        {:>12.2} x10^4 CNY\n\
             legume ratio      {:>12.1} %\n",
            wan(self.total_expected_profit),
            wan(self.worst_case_profit),
            wan(self.nominal_profit),
            wan(self.volatility),
            100.0 * self.legume_ratio
        )
    }
}

struct Loaded {
    instance: PlanningInstance,
    set: ScenarioSet,
}

fn load(args: &ScenarioArgs) -> Result<Loaded> {
    let doc = load_document(&args.instance)?;
    let mut spec = doc.scenario_spec.clone().unwrap_or_default();
    if let Some(n) = args.scenarios {
        spec.count = n;
    }
    let instance = doc.instance();
    let set = generate_scenarios(&instance, &spec, derive_seed(args.seed, "scenarios"))?;
    Ok(Loaded { instance, set })
}

fn solver_config(search: &SearchArgs, seed: u64, rho: f64) -> Result<SolverConfig> {
    let mut config = match &search.config {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => SolverConfig::default(),
    };
    if let Some(n) = search.iterations {
        config = config.with_iterations(n);
    }
    if let Some(r) = search.restarts {
        config.restarts = r;
    }
    config.seed = derive_seed(seed, "solver");
    config.rho = rho;
    config.validate()?;
    Ok(config)
}

fn report(plan: &Plan, loaded: &Loaded, rho: f64, seed: u64) -> Result<MetricsReport> {
    let metrics = evaluate(plan, &loaded.instance, &loaded.set, rho)?;
    let nominal = nominal_profit(plan, &loaded.instance)?;
    Ok(MetricsReport::new(
        &metrics,
        nominal,
        rho,
        loaded.set.len(),
        seed,
    ))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_plan_outputs(
    plan: &Plan,
    loaded: &Loaded,
    report: &MetricsReport,
    out: &Path,
) -> Result<()> {
    let adjacency = build_adjacency(&loaded.instance.units)?;
    let trajectory = simulate(plan, &loaded.instance, &adjacency);
    export_plan(plan, &loaded.instance, &trajectory, out)?;
    write(&out.join("metrics.json"), &report.to_json())?;
    let maps = out.join("maps");
    fs::create_dir_all(&maps).with_context(|| format!("creating {}", maps.display()))?;
    for t in 0..loaded.instance.horizon {
        render_map(
            plan,
            &loaded.instance,
            t,
            maps.join(format!("period-{t:02}.svg")),
        )?;
    }
    Ok(())
}

fn solve(args: &SolveArgs) -> Result<()> {
    let loaded = load(&args.input)?;
    let config = solver_config(&args.search, args.input.seed, args.rho)?;
    let (plan, log) = match args.mode {
        Mode::Proposed => {
            let outcome = local_search_optimize(&loaded.instance, &loaded.set, &config)?;
            (outcome.plan, Some(format_log(&outcome.log)))
        }
        Mode::BaselineDet => (baseline_deterministic(&loaded.instance, &config)?, None),
        Mode::BaselineRob => (
            baseline_robust(&loaded.instance, &loaded.set, &config)?,
            None,
        ),
    };
    let report = report(&plan, &loaded, args.rho, args.input.seed)?;
    write_plan_outputs(&plan, &loaded, &report, &args.out)?;
    if let Some(log) = log {
        write(&args.out.join("log.csv"), &log)?;
    }
    print!("{}", report.summary());
    Ok(())
}

fn evaluate_cmd(args: &EvaluateArgs) -> Result<()> {
    let loaded = load(&args.input)?;
    let plan = load_plan(&args.plan, &loaded.instance)?;
    let report = report(&plan, &loaded, args.rho, args.input.seed)?;
    match &args.out {
        Some(path) => {
            write(path, &report.to_json())?;
            print!("{}", report.summary());
        }
        None => print!("{}", report.to_json()),
    }
    Ok(())
}

fn sweep(args: &SweepArgs) -> Result<()> {
    let grid = parse_rho_grid(&args.rho_grid)?;
    let loaded = load(&args.input)?;
    let config = solver_config(&args.search, args.input.seed, args.rho)?;
    let plan = match &args.plan {
        Some(path) => load_plan(path, &loaded.instance)?,
        None => local_search_optimize(&loaded.instance, &loaded.set, &config)?.plan,
    };
    let mode = if args.resolve {
        SweepMode::Resolve {
            initial: &plan,
            config: &config,
        }
    } else {
        SweepMode::Fixed(&plan)
    };
    let points = sensitivity_sweep(&loaded.instance, &loaded.set, mode, &grid)?;
    let mut table = String::from("rho,worst_case_profit\n");
    for p in &points {
        table.push_str(&format!("{},{}\n", p.rho, p.worst_case_profit));
    }
    match &args.out {
        Some(path) => write(path, &table),
        None => {
            print!("{table}");
            Ok(())
        }
    }
}

fn gen_case_study(args: &GenArgs) -> Result<()> {
    let instance = generate_case_study(args.seed);
    let doc = InstanceDocument::new(&instance, Some(ScenarioSpec::default()));
    save_document(&doc, &args.out)?;
    Ok(())
}

fn oracle(args: &OracleArgs) -> Result<()> {
    let loaded = load(&args.input)?;
    let solution = brute_force_with_bound(&loaded.instance, &loaded.set, args.rho, args.bound)?;
    let nominal = nominal_profit(&solution.plan, &loaded.instance)?;
    let report = MetricsReport::new(
        &solution.metrics,
        nominal,
        args.rho,
        loaded.set.len(),
        args.input.seed,
    );
    if let Some(out) = &args.out {
        write_plan_outputs(&solution.plan, &loaded, &report, out)?;
    }
    print!("{}", report.summary());
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Solve(a) => solve(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Sweep(a) => sweep(a),
        Command::GenCaseStudy(a) => gen_case_study(a),
        Command::Oracle(a) => oracle(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
