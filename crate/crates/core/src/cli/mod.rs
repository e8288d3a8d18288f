//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 for invalid arguments or configuration, 1 for
//! failures while running or writing results.

mod config;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

pub use config::{parse_seeds, AblationSpec, EnvSpec, RunConfig};

use crate::emulator::{EstimatorMode, NoiseModel};
use crate::engine::{run_qpolicy, LambdaMode, QPolicyConfig};
use crate::error::QPolicyError;
use crate::experiments::{
    estimate_resources_with, run_ablation, run_noise_comparison, run_query_complexity_study,
    run_update_rule_ablation, AblationGrid, MethodArm, SeedRun, SummaryStats,
};
use crate::mdp::{save_mdp, SlipMode, TabularMdp};
use crate::output::{csv_string, fmt_real, records_csv, write_atomic, Manifest};

/// Environment variable capping worker threads (0 or unset = automatic).
pub const THREADS_ENV: &str = "QPOLICY_THREADS";

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments, configuration or input files (exit code 2).
    Config(String),
    /// Failure during computation or output (exit code 1).
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Validation problems are configuration errors; anything else is a runtime error.
fn classify(e: QPolicyError) -> CliError {
    match e {
        QPolicyError::InvalidArgument(_)
        | QPolicyError::InvalidModel(_)
        | QPolicyError::UnknownVariant(_)
        | QPolicyError::ShapeMismatch { .. } => config_err(e),
        other => runtime_err(other),
    }
}

#[derive(Parser, Debug)]
#[command(name = "qpolicy", version, about = "Policy iteration with emulated quantum Bellman evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a benchmark environment as MDP JSON.
    GenEnv {
        #[command(subcommand)]
        env: GenEnv,
    },
    /// Run Q-Policy for one or more seeds.
    Run(CommonArgs),
    /// Sweep precision and shot counts.
    Ablate {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated AE precisions.
        #[arg(long, value_delimiter = ',')]
        epsilons: Option<Vec<f64>>,
    },
    /// Compare query counts against Monte Carlo policy iteration.
    CompareQueries {
        #[command(flatten)]
        common: CommonArgs,
        /// Rollouts per Monte Carlo evaluation.
        #[arg(long)]
        mc_budget: Option<usize>,
    },
    /// Paired runs at several depolarizing strengths.
    NoiseStudy {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated depolarizing probabilities; must include 0.
        #[arg(long, value_delimiter = ',')]
        p_values: Option<Vec<f64>>,
    },
    /// Compare update-rule variants on matched seeds.
    UpdateRules {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated variant names.
        #[arg(long, value_delimiter = ',')]
        variants: Option<Vec<String>>,
    },
    /// Print the resource estimate as JSON.
    Resources {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long)]
        c_gate: Option<f64>,
        #[arg(long)]
        c_overhead: Option<f64>,
    },
}

#[derive(Subcommand, Debug)]
enum GenEnv {
    Gridworld {
        #[arg(long, default_value_t = 4)]
        width: usize,
        #[arg(long, default_value_t = 4)]
        height: usize,
        #[arg(long, default_value_t = 0.2)]
        slip: f64,
        /// Goal cell as `x,y`; defaults to the bottom-right corner.
        #[arg(long, value_delimiter = ',')]
        goal: Option<Vec<usize>>,
        #[arg(long, default_value_t = 0.95)]
        gamma: f64,
        #[arg(long, value_enum, default_value_t = SlipArg::All)]
        slip_mode: SlipArg,
        #[arg(long, default_value = "env.json")]
        out: PathBuf,
    },
    Frozenlake {
        #[arg(long, default_value_t = 8)]
        size: usize,
        #[arg(long)]
        slippery: bool,
        #[arg(long, default_value_t = 0.95)]
        gamma: f64,
        #[arg(long, default_value = "env.json")]
        out: PathBuf,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SlipArg {
    All,
    Others,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ModeArg {
    Shot,
    Ae,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum LambdaArg {
    FixedBeta,
    AutoLambda,
}

/// Options shared by the run and study commands. Flags override values from
/// `--config`, which override the defaults.
#[derive(Args, Debug, Default)]
struct CommonArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// MDP JSON file; the default is the 4x4 GridWorld.
    #[arg(long)]
    env: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, conflicts_with = "seeds")]
    seed: Option<u64>,
    /// `1,2,3`, `a..b` or a count `n` meaning `0..n`.
    #[arg(long, value_parser = parse_seed_list)]
    seeds: Option<SeedList>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Shots per readout; `ablate` accepts a comma-separated list.
    #[arg(long, value_delimiter = ',')]
    shots: Option<Vec<u64>>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    c_ae: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, value_enum)]
    lambda_mode: Option<LambdaArg>,
    /// Depolarizing probability on the readout qubit.
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    q_variance_repeats: Option<usize>,
    #[arg(long)]
    convergence_tol: Option<f64>,
}

#[derive(Debug, Clone)]
struct SeedList(Vec<u64>);

fn parse_seed_list(text: &str) -> Result<SeedList, String> {
    parse_seeds(text).map(SeedList)
}

/// Fully resolved inputs of a study command.
struct Resolved {
    run: RunConfig,
    mdp: TabularMdp,
    seeds: Vec<u64>,
    out: PathBuf,
}

impl Resolved {
    fn manifest(&self, study: &str, extra: serde_json::Value) -> CliResult<String> {
        let mut config = serde_json::to_value(&self.run.qpolicy).map_err(runtime_err)?;
        if let (Some(obj), serde_json::Value::Object(more)) = (config.as_object_mut(), extra) {
            obj.extend(more);
        }
        let environment = serde_json::to_value(&self.run.environment).map_err(runtime_err)?;
        Ok(Manifest::new(study, environment, config, self.seeds.clone()).to_json())
    }

    fn write(&self, name: &str, contents: &str) -> CliResult<()> {
        let path = self.out.join(name);
        write_atomic(&path, contents.as_bytes()).map_err(|e| runtime_err(format!("cannot write {}: {e}", path.display())))
    }
}

fn single_shots(shots: &[u64]) -> CliResult<u64> {
    match shots {
        [s] => Ok(*s),
        _ => Err(config_err("--shots takes a single value for this command")),
    }
}

fn resolve(study: &str, args: &CommonArgs) -> CliResult<Resolved> {
    let mut run = match &args.config {
        Some(path) => RunConfig::load(path).map_err(CliError::Config)?,
        None => RunConfig::default(),
    };
    if let Some(s) = &run.study {
        if s != study {
            return Err(config_err(format!("config is for study `{s}`, not `{study}`")));
        }
    }
    if let Some(path) = &args.env {
        run.environment = EnvSpec::File { path: path.clone() };
    }
    let q = &mut run.qpolicy;
    if let Some(e) = args.epsilon {
        q.estimator.epsilon = e;
    }
    if let Some(shots) = &args.shots {
        if study == "ablate" {
            run.ablation.shot_counts = shots.clone();
        } else {
            q.estimator.shots = single_shots(shots)?;
        }
    }
    if let Some(k) = args.iters {
        q.max_iterations = k;
    }
    if let Some(m) = args.mode {
        q.estimator.mode = match m {
            ModeArg::Shot => EstimatorMode::ShotSampling,
            ModeArg::Ae => EstimatorMode::AeOracle,
        };
    }
    if let Some(c) = args.c_ae {
        q.estimator.c_ae = c;
    }
    if let Some(b) = args.beta {
        q.beta = b;
    }
    if let Some(e) = args.eta {
        q.eta = e;
    }
    if let Some(l) = args.lambda_mode {
        q.lambda_mode = match l {
            LambdaArg::FixedBeta => LambdaMode::FixedBeta,
            LambdaArg::AutoLambda => LambdaMode::AutoLambda,
        };
    }
    if let Some(p) = args.noise {
        q.estimator.noise = NoiseModel { depolarizing_p: p };
    }
    if let Some(g) = args.gamma {
        q.gamma = Some(g);
    }
    if let Some(r) = args.q_variance_repeats {
        q.q_variance_repeats = r;
    }
    if let Some(t) = args.convergence_tol {
        q.convergence_tol = t;
    }
    let seeds = match (args.seed, &args.seeds, &run.seeds) {
        (Some(s), _, _) => vec![s],
        (None, Some(SeedList(list)), _) => list.clone(),
        (None, None, Some(list)) if !list.is_empty() => list.clone(),
        (None, None, Some(_)) => return Err(config_err("seed list is empty")),
        (None, None, None) => vec![run.qpolicy.seed],
    };
    run.seeds = Some(seeds.clone());
    run.qpolicy.validate().map_err(config_err)?;
    let mdp = run.environment.build().map_err(config_err)?;
    let out = args
        .out
        .clone()
        .or_else(|| run.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("results"));
    Ok(Resolved { run, mdp, seeds, out })
}

fn prepare_out(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| runtime_err(format!("cannot create {}: {e}", dir.display())))
}

fn cmd_gen_env(env: GenEnv) -> CliResult<()> {
    let (mdp, out) = match env {
        GenEnv::Gridworld {
            width,
            height,
            slip,
            goal,
            gamma,
            slip_mode,
            out,
        } => {
            let goal = match goal.as_deref() {
                Some([x, y]) => (*x, *y),
                Some(other) => return Err(config_err(format!("--goal takes `x,y`, got {} values", other.len()))),
                None => (width.saturating_sub(1), height.saturating_sub(1)),
            };
            let mode = match slip_mode {
                SlipArg::All => SlipMode::UniformAll,
                SlipArg::Others => SlipMode::UniformOthers,
            };
            let grid = crate::mdp::GridWorld::new(width, height, slip, goal, gamma).with_slip_mode(mode);
            (grid.build().map_err(config_err)?, out)
        }
        GenEnv::Frozenlake {
            size,
            slippery,
            gamma,
            out,
        } => (crate::mdp::build_frozenlake(size, slippery, gamma).map_err(config_err)?, out),
    };
    if let Some(dir) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        prepare_out(dir)?;
    }
    save_mdp(&mdp, &out).map_err(|e| runtime_err(format!("cannot write {}: {e}", out.display())))?;
    eprintln!("wrote {} ({} states, {} actions)", out.display(), mdp.num_states(), mdp.num_actions());
    Ok(())
}

fn cmd_run(args: &CommonArgs) -> CliResult<()> {
    let r = resolve("run", args)?;
    prepare_out(&r.out)?;
    let runs = r
        .seeds
        .iter()
        .map(|&seed| {
            let cfg = QPolicyConfig { seed, ..r.run.qpolicy.clone() };
            run_qpolicy(&r.mdp, &cfg).map(|run| SeedRun { seed, records: run.records })
        })
        .collect::<crate::Result<Vec<_>>>()
        .map_err(classify)?;
    r.write("records.csv", &records_csv(&runs).map_err(runtime_err)?)?;
    r.write("manifest.json", &r.manifest("run", json!({}))?)?;
    Ok(())
}

fn fmt_label(x: f64) -> String {
    format!("{x}")
}

fn summary_rows(label: &[String], stats: &Option<Vec<SummaryStats>>) -> Vec<Vec<String>> {
    stats
        .iter()
        .flatten()
        .enumerate()
        .map(|(i, s)| {
            let mut row = label.to_vec();
            row.extend([
                (i + 1).to_string(),
                fmt_real(s.mean),
                fmt_real(s.std),
                fmt_real(s.ci95_low),
                fmt_real(s.ci95_high),
                s.n.to_string(),
            ]);
            row
        })
        .collect()
}

fn warn_single_seed(seeds: &[u64]) {
    if seeds.len() < 2 {
        eprintln!("note: confidence intervals need at least two seeds; summary rows omitted");
    }
}

fn cmd_ablate(args: &CommonArgs, epsilons: &Option<Vec<f64>>) -> CliResult<()> {
    let mut r = resolve("ablate", args)?;
    if let Some(e) = epsilons {
        r.run.ablation.epsilons = e.clone();
    }
    let grid = AblationGrid {
        epsilons: r.run.ablation.epsilons.clone(),
        shot_counts: r.run.ablation.shot_counts.clone(),
        seeds: r.seeds.clone(),
        iterations: r.run.qpolicy.max_iterations,
    };
    grid.validate().map_err(config_err)?;
    prepare_out(&r.out)?;
    let cells = run_ablation(&r.mdp, &grid, &r.run.qpolicy).map_err(classify)?;
    let mut rows = Vec::new();
    for cell in &cells {
        let name = format!("ablation_eps{}_shots{}.csv", fmt_label(cell.epsilon), cell.shots);
        r.write(&name, &records_csv(&cell.runs).map_err(runtime_err)?)?;
        rows.extend(summary_rows(&[fmt_label(cell.epsilon), cell.shots.to_string()], &cell.summary));
    }
    let header = ["epsilon", "shots", "iteration", "mean", "std", "ci95_low", "ci95_high", "n"];
    r.write("ablation_summary.csv", &csv_string(&header, rows).map_err(runtime_err)?)?;
    warn_single_seed(&r.seeds);
    let extra = json!({"epsilons": grid.epsilons, "shot_counts": grid.shot_counts});
    r.write("manifest.json", &r.manifest("ablate", extra)?)?;
    Ok(())
}

fn method_row(arm: &MethodArm) -> Vec<String> {
    let mut row = vec![
        arm.method.clone(),
        arm.queries_per_iteration().to_string(),
        arm.total_queries().to_string(),
        fmt_real(arm.mean_final_error()),
    ];
    match arm.final_error_summary() {
        Some(s) => row.extend([fmt_real(s.ci95_low), fmt_real(s.ci95_high)]),
        None => row.extend([String::new(), String::new()]),
    }
    row.push(arm.runs.len().to_string());
    row
}

fn cmd_compare_queries(args: &CommonArgs, mc_budget: Option<usize>) -> CliResult<()> {
    let mut r = resolve("compare-queries", args)?;
    if let Some(b) = mc_budget {
        r.run.mc_budget = b;
    }
    if r.run.mc_budget == 0 {
        return Err(config_err("--mc-budget must be at least 1"));
    }
    prepare_out(&r.out)?;
    let iterations = r.run.qpolicy.max_iterations;
    let cmp = run_query_complexity_study(&r.mdp, &r.run.qpolicy, r.run.mc_budget, iterations, &r.seeds)
        .map_err(classify)?;
    r.write("compare_q_policy.csv", &records_csv(&cmp.quantum.runs).map_err(runtime_err)?)?;
    r.write("compare_monte_carlo.csv", &records_csv(&cmp.monte_carlo.runs).map_err(runtime_err)?)?;
    let header = [
        "method",
        "queries_per_iteration",
        "total_queries",
        "final_bellman_error_mean",
        "ci95_low",
        "ci95_high",
        "n",
    ];
    let rows = vec![method_row(&cmp.quantum), method_row(&cmp.monte_carlo)];
    r.write("compare_summary.csv", &csv_string(&header, rows).map_err(runtime_err)?)?;
    let extra = json!({"mc_budget": r.run.mc_budget, "iterations": iterations});
    r.write("manifest.json", &r.manifest("compare-queries", extra)?)?;
    Ok(())
}

fn cmd_noise_study(args: &CommonArgs, p_values: &Option<Vec<f64>>) -> CliResult<()> {
    let mut r = resolve("noise-study", args)?;
    if let Some(p) = p_values {
        r.run.p_values = p.clone();
    }
    for &p in &r.run.p_values {
        NoiseModel::depolarizing(p).map_err(config_err)?;
    }
    if !r.run.p_values.contains(&0.0) {
        return Err(config_err("--p-values must include 0"));
    }
    prepare_out(&r.out)?;
    let arms = run_noise_comparison(&r.mdp, &r.run.p_values, &r.run.qpolicy, &r.seeds).map_err(classify)?;
    let mut rows = Vec::new();
    for arm in &arms {
        r.write(&format!("noise_p{}.csv", fmt_label(arm.p)), &records_csv(&arm.runs).map_err(runtime_err)?)?;
        rows.extend(summary_rows(&[fmt_label(arm.p)], &arm.summary));
    }
    let header = ["p", "iteration", "mean", "std", "ci95_low", "ci95_high", "n"];
    r.write("noise_summary.csv", &csv_string(&header, rows).map_err(runtime_err)?)?;
    warn_single_seed(&r.seeds);
    let extra = json!({"p_values": r.run.p_values});
    r.write("manifest.json", &r.manifest("noise-study", extra)?)?;
    Ok(())
}

fn cmd_update_rules(args: &CommonArgs, variants: &Option<Vec<String>>) -> CliResult<()> {
    let mut r = resolve("update-rules", args)?;
    if let Some(v) = variants {
        r.run.variants = v.clone();
    }
    for v in &r.run.variants {
        v.parse::<crate::experiments::Variant>().map_err(config_err)?;
    }
    prepare_out(&r.out)?;
    let arms = run_update_rule_ablation(&r.mdp, &r.run.qpolicy, &r.run.variants, &r.seeds).map_err(classify)?;
    let mut rows = Vec::new();
    for arm in &arms {
        r.write(&format!("variant_{}.csv", arm.variant), &records_csv(&arm.runs).map_err(runtime_err)?)?;
        rows.extend(summary_rows(&[arm.variant.to_string()], &arm.summary));
    }
    let header = ["variant", "iteration", "mean", "std", "ci95_low", "ci95_high", "n"];
    r.write("update_rules_summary.csv", &csv_string(&header, rows).map_err(runtime_err)?)?;
    warn_single_seed(&r.seeds);
    let extra = json!({"variants": r.run.variants});
    r.write("manifest.json", &r.manifest("update-rules", extra)?)?;
    Ok(())
}

fn cmd_resources(
    args: &CommonArgs,
    kappa: Option<f64>,
    c_gate: Option<f64>,
    c_overhead: Option<f64>,
) -> CliResult<()> {
    let mut r = resolve("resources", args)?;
    if let Some(k) = kappa {
        r.run.kappa = k;
    }
    if let Some(c) = c_gate {
        r.run.calibration.c_gate = c;
    }
    if let Some(c) = c_overhead {
        r.run.calibration.c_overhead = c;
    }
    let est = estimate_resources_with(&r.mdp, &r.run.qpolicy, r.run.kappa, r.run.calibration).map_err(config_err)?;
    let text = serde_json::to_string_pretty(&est).map_err(runtime_err)?;
    println!("{text}");
    if args.out.is_some() || r.run.output_dir.is_some() {
        prepare_out(&r.out)?;
        r.write("resources.json", &format!("{text}\n"))?;
    }
    Ok(())
}

fn thread_count() -> CliResult<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse::<usize>()
            .map_err(|_| config_err(format!("{THREADS_ENV} must be a nonnegative integer, got `{v}`"))),
        _ => Ok(0),
    }
}

fn dispatch(command: Command) -> CliResult<()> {
    match command {
        Command::GenEnv { env } => cmd_gen_env(env),
        Command::Run(args) => cmd_run(&args),
        Command::Ablate { common, epsilons } => cmd_ablate(&common, &epsilons),
        Command::CompareQueries { common, mc_budget } => cmd_compare_queries(&common, mc_budget),
        Command::NoiseStudy { common, p_values } => cmd_noise_study(&common, &p_values),
        Command::UpdateRules { common, variants } => cmd_update_rules(&common, &variants),
        Command::Resources {
            common,
            kappa,
            c_gate,
            c_overhead,
        } => cmd_resources(&common, kappa, c_gate, c_overhead),
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = thread_count().and_then(|n| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(runtime_err)?;
        pool.install(|| dispatch(cli.command))
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("qpolicy: {e}");
            e.exit_code()
        }
    }
}
