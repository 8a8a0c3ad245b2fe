use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ubsga::bench_io::{load_bks_file, write_run_records};
use ubsga::harness::{
    characterize, compare, emit_plot_data, load_run_summaries, published_best_configs, read_configs, run_single,
    build_report, write_report, ClockMode, Dataset, ExperimentSettings, Instance, ProblemKind, RunConfig,
    SweepGrid, UbsCsvDump,
};
use ubsga::StrategyId;

#[derive(Parser)]
#[command(name = "ubsga", version, about = "Genetic algorithm selection-strategy experiments on TOP and QAP")]
struct Cli {
    /// Log verbosity (error, warn, info, debug, trace)
    #[arg(long, global = true, default_value = "info")]
    log: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the parameter grid for one strategy and report its best configuration
    Characterize(CharacterizeArgs),
    /// Run fixed configurations and compare strategies
    Compare(CompareArgs),
    /// Recompute reports from stored run records
    Metrics(MetricsArgs),
    /// Emit grouped error statistics for plotting
    Plotdata(PlotArgs),
    /// Run a single GA on one instance
    Run(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ProblemArg {
    Top,
    Qap,
}

impl From<ProblemArg> for ProblemKind {
    fn from(p: ProblemArg) -> Self {
        match p {
            ProblemArg::Top => ProblemKind::Top,
            ProblemArg::Qap => ProblemKind::Qap,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Published,
}

#[derive(Args)]
struct DatasetArgs {
    /// Directory holding the instance files
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, value_enum)]
    problem: ProblemArg,
    /// File listing the instances to use (one per line, relative to --dataset)
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Best-known values as `name,value` lines
    #[arg(long)]
    bks: PathBuf,
    /// Multiplier applied to every TOP time budget
    #[arg(long, default_value_t = 1.0)]
    tmax_scale: f64,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Output directory
    #[arg(long)]
    out: PathBuf,
    /// Wall-clock limit per run in seconds
    #[arg(long, default_value_t = 300.0)]
    time_limit: f64,
    /// Replications (seeds) per instance and configuration
    #[arg(long, default_value_t = 3)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed_base: u64,
    /// Concurrent runs
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Also stop after this many generations
    #[arg(long)]
    max_generations: Option<usize>,
    /// Target elite share; adjusted per population so the rest pairs up
    #[arg(long, default_value_t = 0.10)]
    elite_fraction: f64,
}

impl ExperimentArgs {
    fn settings(&self) -> Result<ExperimentSettings, String> {
        Ok(ExperimentSettings {
            time_limit: seconds(self.time_limit)?,
            replications: self.reps,
            seed_base: self.seed_base,
            workers: self.workers,
            max_generations: self.max_generations,
            elite_fraction: self.elite_fraction,
            clock: ClockMode::Wall,
        })
    }
}

#[derive(Args)]
struct CharacterizeArgs {
    #[command(flatten)]
    data: DatasetArgs,
    #[command(flatten)]
    exp: ExperimentArgs,
    #[arg(long)]
    strategy: StrategyId,
    /// Population sizes to sweep (comma-separated)
    #[arg(long, value_delimiter = ',')]
    pop: Vec<usize>,
    /// Recombination probabilities to sweep
    #[arg(long, value_delimiter = ',')]
    pr: Vec<f64>,
    /// Mutation probabilities to sweep
    #[arg(long, value_delimiter = ',')]
    pm: Vec<f64>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    data: DatasetArgs,
    #[command(flatten)]
    exp: ExperimentArgs,
    /// CSV of `strategy,population_size,p_r,p_m` rows
    #[arg(long, conflicts_with_all = ["preset", "strategy"])]
    configs: Option<PathBuf>,
    /// Built-in configuration set (used when neither --configs nor --strategy is given)
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Strategies sharing the --pop/--pr/--pm configuration
    #[arg(long, value_delimiter = ',', requires_all = ["pop", "pr", "pm"])]
    strategy: Vec<StrategyId>,
    #[arg(long)]
    pop: Option<usize>,
    #[arg(long)]
    pr: Option<f64>,
    #[arg(long)]
    pm: Option<f64>,
}

#[derive(Args)]
struct MetricsArgs {
    /// Directory of per-run CSV files
    #[arg(long)]
    runs: PathBuf,
    #[arg(long)]
    bks: PathBuf,
    #[arg(long, value_enum)]
    problem: ProblemArg,
    /// Directory receiving the report files
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long)]
    runs: PathBuf,
    #[arg(long)]
    bks: PathBuf,
    /// Output CSV (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Instance file
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_enum)]
    problem: ProblemArg,
    #[arg(long)]
    strategy: StrategyId,
    #[arg(long, default_value_t = 100)]
    pop: usize,
    #[arg(long, default_value_t = 0.8)]
    pr: f64,
    #[arg(long, default_value_t = 1.0)]
    pm: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 300.0)]
    time_limit: f64,
    #[arg(long)]
    max_generations: Option<usize>,
    #[arg(long, default_value_t = 0.10)]
    elite_fraction: f64,
    #[arg(long, default_value_t = 1.0)]
    tmax_scale: f64,
    /// Run record CSV (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write per-generation UBS bound state to this CSV
    #[arg(long)]
    ubs_dump: Option<PathBuf>,
}

fn seconds(s: f64) -> Result<Duration, String> {
    Duration::try_from_secs_f64(s).map_err(|_| format!("invalid time limit {s}"))
}

fn load_dataset(d: &DatasetArgs) -> Result<(Dataset, ubsga::bench_io::BksTable), String> {
    let dataset = Dataset::load(d.problem.into(), &d.dataset, d.manifest.as_deref(), d.tmax_scale)
        .map_err(|e| e.to_string())?;
    let bks = load_bks_file(&d.bks).map_err(|e| e.to_string())?;
    Ok((dataset, bks))
}

fn print_ranking(report: &ubsga::harness::MetricReport) {
    for c in report.ranking() {
        println!(
            "{:<28} instances={:<3} ARPE={:.4} MRPE={:.4} RPE={:.4}",
            c.config().label(),
            c.instances,
            c.arpe,
            c.mrpe,
            c.rpe
        );
    }
}

fn cmd_characterize(a: &CharacterizeArgs) -> Result<(), String> {
    let (dataset, bks) = load_dataset(&a.data)?;
    let mut grid = SweepGrid::default();
    if !a.pop.is_empty() {
        grid.population_sizes = a.pop.clone();
    }
    if !a.pr.is_empty() {
        grid.recombination_probabilities = a.pr.clone();
    }
    if !a.pm.is_empty() {
        grid.mutation_probabilities = a.pm.clone();
    }
    let (report, best) = characterize(&dataset, a.strategy, &grid, &bks, &a.exp.settings()?, &a.exp.out)
        .map_err(|e| e.to_string())?;
    let m = report.config_metrics(&best).expect("best config is in the report");
    println!("best {}: ARPE={:.4} MRPE={:.4} RPE={:.4}", best.label(), m.arpe, m.mrpe, m.rpe);
    Ok(())
}

fn cmd_compare(a: &CompareArgs) -> Result<(), String> {
    let (dataset, bks) = load_dataset(&a.data)?;
    let configs: Vec<RunConfig> = if let Some(path) = &a.configs {
        read_configs(path).map_err(|e| e.to_string())?
    } else if !a.strategy.is_empty() {
        let (pop, pr, pm) = (a.pop.unwrap(), a.pr.unwrap(), a.pm.unwrap());
        a.strategy.iter().map(|&s| RunConfig::new(s, pop, pr, pm)).collect()
    } else {
        match a.preset.unwrap_or(Preset::Published) {
            Preset::Published => published_best_configs(dataset.kind),
        }
    };
    let report = compare(&dataset, &configs, &bks, &a.exp.settings()?, &a.exp.out).map_err(|e| e.to_string())?;
    print_ranking(&report);
    Ok(())
}

fn cmd_metrics(a: &MetricsArgs) -> Result<(), String> {
    let bks = load_bks_file(&a.bks).map_err(|e| e.to_string())?;
    let runs = load_run_summaries(&a.runs).map_err(|e| e.to_string())?;
    let kind: ProblemKind = a.problem.into();
    let report = build_report(&runs, &bks, kind.direction()).map_err(|e| e.to_string())?;
    write_report(&report, &a.out).map_err(|e| e.to_string())?;
    print_ranking(&report);
    Ok(())
}

fn cmd_plotdata(a: &PlotArgs) -> Result<(), String> {
    let bks = load_bks_file(&a.bks).map_err(|e| e.to_string())?;
    let runs = load_run_summaries(&a.runs).map_err(|e| e.to_string())?;
    match &a.out {
        Some(path) => {
            let file = fs::File::create(path).map_err(|e| format!("{}: {e}", path.display()))?;
            emit_plot_data(&runs, &bks, BufWriter::new(file))
        }
        None => emit_plot_data(&runs, &bks, io::stdout().lock()),
    }
    .map_err(|e| e.to_string())
}

fn cmd_run(a: &RunArgs) -> Result<(), String> {
    let text = fs::read_to_string(&a.instance).map_err(|e| format!("{}: {e}", a.instance.display()))?;
    let instance = Instance::parse(a.problem.into(), &text, a.tmax_scale).map_err(|e| e.to_string())?;
    let name = a
        .instance
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let settings = ExperimentSettings {
        time_limit: seconds(a.time_limit)?,
        max_generations: a.max_generations,
        elite_fraction: a.elite_fraction,
        ..ExperimentSettings::default()
    };
    let config = RunConfig::new(a.strategy, a.pop, a.pr, a.pm);
    let rows = match &a.ubs_dump {
        Some(path) => {
            let file = fs::File::create(path).map_err(|e| format!("{}: {e}", path.display()))?;
            let mut dump = UbsCsvDump::new(BufWriter::new(file));
            let rows = run_single(&name, &instance, &config, a.seed, &settings, &mut dump);
            dump.finish().map_err(|e| format!("{}: {e}", path.display()))?;
            rows
        }
        None => run_single(&name, &instance, &config, a.seed, &settings, &mut ()),
    }
    .map_err(|e| e.to_string())?;
    match &a.out {
        Some(path) => write_run_records(&rows, path).map_err(|e| e.to_string())?,
        None => {
            let mut out = io::stdout().lock();
            ubsga::bench_io::write_run_records_to(&rows, &mut out).map_err(|e| e.to_string())?;
            out.flush().map_err(|e| e.to_string())?;
        }
    }
    if let Some(last) = rows.last() {
        log::info!("best {} after {} generations", last.best_objective, last.generation);
    }
    Ok(())
}

fn ensure_parent(path: Option<&Path>) -> Result<(), String> {
    if let Some(parent) = path.and_then(Path::parent).filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| format!("{}: {e}", parent.display()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new().parse_filters(&cli.log).format_target(false).init();
    let result = match &cli.command {
        Command::Characterize(a) => cmd_characterize(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Metrics(a) => cmd_metrics(a),
        Command::Plotdata(a) => ensure_parent(a.out.as_deref()).and_then(|_| cmd_plotdata(a)),
        Command::Run(a) => ensure_parent(a.out.as_deref()).and_then(|_| cmd_run(a)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
