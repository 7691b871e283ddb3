//! `leo` command line: seeded experiments, the baseline comparison table,
//! ZDT fronts, explore-pool statistics and transcript replay.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use leo::baselines::{default_table_methods, run_comparison_table, TableMethod};
use leo::benchmarks::{zdt_true_front, BenchmarkId};
use leo::engine::LeoConfig;
use leo::experiment::{
    replay_experiment, run_experiment, stats_tables, ExperimentConfig, ExperimentError, ExperimentOutcome, Method,
    Seeds, EXIT_OK, EXIT_PARTIAL,
};
use leo::generator::{BackendKind, GeneratorConfig};
use leo::moo::{MooConfig, OffspringOperator};
use leo::par::Execution;
use leo::problems::ProblemId;

#[derive(Parser)]
#[command(name = "leo", version, about = "Generator-driven population optimizer")]
struct Cli {
    /// Emit floats with full precision instead of six decimals.
    #[arg(long, global = true)]
    full_precision: bool,
    /// Run seeds and objective batches on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a seeded experiment and write its artifact directory.
    Run(RunArgs),
    /// Median best value of every baseline on the benchmark table.
    Table(TableArgs),
    /// NSGA-II on a ZDT problem; writes the obtained and analytic fronts.
    Front(FrontArgs),
    /// Explore-pool variance and KDE tables for an experiment directory.
    Stats(StatsArgs),
    /// Re-run an experiment directory against its recorded transcript.
    Replay(ReplayArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Backend {
    Mock,
    Remote,
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment file; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Canned experiment: windfarm_2, windfarm_4 or windfarm_8.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Objective, e.g. goldstein_price, rosenbrock_nd_10, zdt1, nosecone, nozzle, heat_16, windfarm_4.
    #[arg(long)]
    problem: Option<String>,
    /// leo, leo_rnd, trajectory, baseline or nsga2.
    #[arg(long)]
    method: Option<String>,
    /// Number of seeds, run as 0..N.
    #[arg(long, conflicts_with = "seed_list")]
    seeds: Option<u64>,
    /// Explicit comma-separated seeds.
    #[arg(long, value_delimiter = ',')]
    seed_list: Option<Vec<u64>>,
    /// Experiment directory.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    backend: Option<Backend>,
    /// Model name sent to the remote backend.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    pop_size: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    n_hist: Option<usize>,
    /// Trajectory sweep, e.g. `1,5,10`.
    #[arg(long, value_delimiter = ',')]
    n_hist_sweep: Option<Vec<usize>>,
}

#[derive(Args)]
struct TableArgs {
    #[arg(long, default_value_t = 10)]
    seeds: usize,
    /// Evaluation budget per run.
    #[arg(long, default_value_t = 1000)]
    budget: usize,
    /// Append a LEO column driven by the offline mock backend.
    #[arg(long)]
    with_leo: bool,
    /// CSV destination; stdout when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct FrontArgs {
    #[arg(long, default_value = "zdt1")]
    problem: String,
    #[arg(long, default_value_t = 200)]
    pop_size: usize,
    #[arg(long, default_value_t = 100)]
    generations: usize,
    /// Offspring from generator prompts instead of SBX and mutation.
    #[arg(long)]
    llm: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, short, default_value = "runs/front")]
    output: PathBuf,
}

#[derive(Args)]
struct StatsArgs {
    dir: PathBuf,
    /// Sample every k-th iteration.
    #[arg(long, default_value_t = 5)]
    every: usize,
    /// Output directory; defaults to the experiment directory.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ReplayArgs {
    dir: PathBuf,
    #[arg(long, short)]
    output: PathBuf,
}

fn execution(cli: &Cli) -> Execution {
    if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn build_config(cli: &Cli, args: &RunArgs) -> Result<ExperimentConfig, ExperimentError> {
    let mut cfg = match (&args.config, &args.preset) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(name)) => {
            ExperimentConfig::preset(name).ok_or_else(|| ExperimentError::Config(format!("unknown preset `{name}`")))?
        }
        (None, None) => ExperimentConfig::default(),
    };
    if let Some(p) = &args.problem {
        cfg.problem = p.clone();
    }
    if let Some(m) = &args.method {
        cfg.method = m.parse().map_err(|e: leo::CoreError| ExperimentError::Config(e.to_string()))?;
    }
    if let Some(n) = args.seeds {
        cfg.seeds = Seeds::Count(n);
    }
    if let Some(list) = &args.seed_list {
        cfg.seeds = Seeds::List(list.clone());
    }
    if let Some(o) = &args.output {
        cfg.output_dir = o.clone();
    }
    match args.backend {
        Some(Backend::Mock) => cfg.generator.backend = BackendKind::Mock,
        Some(Backend::Remote) => cfg.generator.backend = BackendKind::Remote,
        None => {}
    }
    if let Some(m) = &args.model {
        cfg.generator.model_name = m.clone();
    }
    if let Some(n) = args.pop_size {
        cfg.leo.pop_size = n;
        cfg.moo.pop_size = n;
    }
    if let Some(n) = args.iterations {
        cfg.leo.max_iterations = n;
        cfg.moo.generations = n;
    }
    if let Some(n) = args.n_hist {
        cfg.leo.n_hist = n;
    }
    if let Some(sweep) = &args.n_hist_sweep {
        cfg.n_hist_sweep = sweep.clone();
    }
    cfg.full_precision |= cli.full_precision;
    if cli.sequential {
        cfg.execution = Execution::Sequential;
        cfg.leo.execution = Execution::Sequential;
        cfg.moo.execution = Execution::Sequential;
    }
    Ok(cfg)
}

fn report(outcome: &ExperimentOutcome) -> i32 {
    for g in &outcome.groups {
        let s = g.summary();
        println!(
            "{}: {} of {} seeds finished, {} median {:.6} (mean {:.6} +/- {:.6})",
            g.label,
            s.runs,
            g.seeds.len(),
            g.metric,
            s.median,
            s.mean,
            s.std
        );
    }
    for (label, s) in outcome.failures() {
        eprintln!("{label} seed {}: {}", s.seed, s.failure.as_deref().unwrap_or(""));
    }
    println!("wrote {}", outcome.dir.display());
    outcome.exit_code()
}

fn cmd_run(cli: &Cli, args: &RunArgs) -> Result<i32, ExperimentError> {
    let cfg = build_config(cli, args)?;
    Ok(report(&run_experiment(&cfg)?))
}

fn write_out(path: &Path, text: &str) -> Result<(), ExperimentError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| ExperimentError::Io(format!("{}: {e}", parent.display())))?;
    }
    fs::write(path, text).map_err(|e| ExperimentError::Io(format!("{}: {e}", path.display())))
}

fn cmd_table(cli: &Cli, args: &TableArgs) -> Result<i32, ExperimentError> {
    if args.seeds == 0 || args.budget == 0 {
        return Err(ExperimentError::Config("seeds and budget must be positive".into()));
    }
    let mut methods = default_table_methods(args.budget);
    if args.with_leo {
        methods.push(TableMethod::Leo {
            label: "leo".into(),
            leo: LeoConfig { max_evaluations: Some(args.budget), execution: execution(cli), ..Default::default() },
            generator: GeneratorConfig { timestamps: false, ..Default::default() },
        });
    }
    let table = run_comparison_table(&BenchmarkId::TABLE_FUNCTIONS, &methods, args.seeds, execution(cli))
        .map_err(|e| ExperimentError::Config(e.to_string()))?;
    let csv = table.to_csv(cli.full_precision);
    match &args.output {
        Some(p) => write_out(p, &csv)?,
        None => print!("{csv}"),
    }
    for f in &table.failures {
        eprintln!("failed: {f}");
    }
    Ok(if table.failures.is_empty() { EXIT_OK } else { EXIT_PARTIAL })
}

fn cmd_front(cli: &Cli, args: &FrontArgs) -> Result<i32, ExperimentError> {
    let id = match args.problem.parse::<ProblemId>() {
        Ok(ProblemId::Benchmark(b)) if b.is_zdt() => b,
        _ => return Err(ExperimentError::Config(format!("`{}` is not a ZDT problem", args.problem))),
    };
    let cfg = ExperimentConfig {
        problem: args.problem.clone(),
        method: Method::Nsga2,
        seeds: Seeds::List(vec![args.seed]),
        output_dir: args.output.clone(),
        full_precision: cli.full_precision,
        moo: MooConfig {
            pop_size: args.pop_size,
            generations: args.generations,
            operator: if args.llm { OffspringOperator::LlmPair } else { OffspringOperator::SbxPoly },
            execution: execution(cli),
            ..Default::default()
        },
        ..Default::default()
    };
    let outcome = run_experiment(&cfg)?;
    let reference = zdt_true_front(id, 1000).map_err(|e| ExperimentError::Config(e.to_string()))?;
    let mut csv = String::from("f1,f2\n");
    for p in &reference {
        csv.push_str(&format!(
            "{},{}\n",
            leo::fmt_float(p[0], cli.full_precision),
            leo::fmt_float(p[1], cli.full_precision)
        ));
    }
    write_out(&args.output.join("reference_front.csv"), &csv)?;

    for seed in outcome.groups.iter().flat_map(|g| &g.seeds) {
        let extra: Vec<String> = seed.extra.iter().map(|(k, v)| format!("{k} {v:.6}")).collect();
        println!("{id} seed {}: {}", seed.seed, extra.join(", "));
    }
    Ok(report(&outcome))
}

fn cmd_stats(cli: &Cli, args: &StatsArgs) -> Result<i32, ExperimentError> {
    let (variance, kde) = stats_tables(&args.dir, args.every, cli.full_precision)?;
    let out = args.output.clone().unwrap_or_else(|| args.dir.clone());
    write_out(&out.join("variance.csv"), &variance)?;
    write_out(&out.join("kde.csv"), &kde)?;
    println!("wrote {} and {}", out.join("variance.csv").display(), out.join("kde.csv").display());
    Ok(EXIT_OK)
}

fn cmd_replay(args: &ReplayArgs) -> Result<i32, ExperimentError> {
    Ok(report(&replay_experiment(&args.dir, &args.output)?))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => cmd_run(&cli, a),
        Command::Table(a) => cmd_table(&cli, a),
        Command::Front(a) => cmd_front(&cli, a),
        Command::Stats(a) => cmd_stats(&cli, a),
        Command::Replay(a) => cmd_replay(a),
    };
    let code = match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
