//! Experiment driver: characterization sweeps, comparison runs, metric
//! reports and plot data.
//!
//! Every run is identified by `(instance, config, replication)` and writes
//! its own CSV under `<out>/runs/`. Reports are rebuilt from those files
//! (or from the in-memory equivalents) in a fixed order, so the worker
//! count never changes any output besides wall-clock columns.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bench_io::{
    parse_manifest, parse_qap_instance, parse_top_instance_scaled, read_run_records, read_to_string,
    write_run_records, BksTable, RunRecordRow,
};
use crate::error::{Error, Result};
use crate::ga::{run_ga_with, Clock, GaParams, GenerationObserver, Population, TracePoint, VirtualClock, WallClock};
use crate::metrics::{compute_arpe, compute_mrpe, compute_rpe, mean, median, standard_error, wilcoxon_signed_rank, WilcoxonResult};
use crate::problem::{Direction, Problem};
use crate::qap::{QapInstance, QapSolution};
use crate::selection::ubs::UbsState;
use crate::selection::StrategyId;
use crate::top::{TopInstance, TopSolution};

/// Target share of elites; adjusted per population size to keep the
/// non-elite count even (see [`GaParams::even_elite_fraction`]).
pub const DEFAULT_ELITE_FRACTION: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Top,
    Qap,
}

impl ProblemKind {
    pub fn direction(self) -> Direction {
        match self {
            ProblemKind::Top => Direction::Maximize,
            ProblemKind::Qap => Direction::Minimize,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            ProblemKind::Top => "txt",
            ProblemKind::Qap => "dat",
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProblemKind::Top => "top",
            ProblemKind::Qap => "qap",
        })
    }
}

impl FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "top" => Ok(ProblemKind::Top),
            "qap" => Ok(ProblemKind::Qap),
            other => Err(Error::Config(format!("unknown problem `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Instance {
    Top(TopInstance),
    Qap(QapInstance),
}

impl Instance {
    pub fn kind(&self) -> ProblemKind {
        match self {
            Instance::Top(_) => ProblemKind::Top,
            Instance::Qap(_) => ProblemKind::Qap,
        }
    }

    pub fn parse(kind: ProblemKind, text: &str, tmax_scale: f64) -> Result<Self> {
        Ok(match kind {
            ProblemKind::Top => Instance::Top(parse_top_instance_scaled(text, tmax_scale)?),
            ProblemKind::Qap => Instance::Qap(parse_qap_instance(text)?),
        })
    }
}

/// Named instances of one problem family.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub kind: ProblemKind,
    pub instances: Vec<(String, Instance)>,
}

impl Dataset {
    /// Loads the files listed in `manifest` (relative to `dir`), or every
    /// file with the problem's extension in `dir` when no manifest is given.
    /// Instance names are the file stems.
    pub fn load(kind: ProblemKind, dir: &Path, manifest: Option<&Path>, tmax_scale: f64) -> Result<Self> {
        let files: Vec<PathBuf> = match manifest {
            Some(m) => parse_manifest(&read_to_string(m)?).into_iter().map(|f| dir.join(f)).collect(),
            None => {
                let mut files: Vec<PathBuf> = fs::read_dir(dir)
                    .map_err(|e| Error::io(dir, e))?
                    .filter_map(|e| e.ok().map(|e| e.path()))
                    .filter(|p| p.extension().is_some_and(|x| x == kind.extension()))
                    .collect();
                files.sort();
                files
            }
        };
        let mut instances = Vec::with_capacity(files.len());
        for path in files {
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .ok_or_else(|| Error::Config(format!("bad instance path {}", path.display())))?;
            let text = read_to_string(&path)?;
            let inst = Instance::parse(kind, &text, tmax_scale).map_err(|e| match e {
                Error::Parse { line, message } => Error::Parse {
                    line,
                    message: format!("{}: {message}", path.display()),
                },
                other => other,
            })?;
            instances.push((name, inst));
        }
        if instances.is_empty() {
            return Err(Error::Config(format!("no {kind} instances found in {}", dir.display())));
        }
        Ok(Self { kind, instances })
    }

    /// Fails on the first instance without a best-known value.
    pub fn check_bks(&self, bks: &BksTable) -> Result<()> {
        for (name, _) in &self.instances {
            bks.require(name)?;
        }
        Ok(())
    }
}

/// One point of the GA parameter space for a strategy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub strategy: StrategyId,
    pub population_size: usize,
    pub p_r: f64,
    pub p_m: f64,
}

impl RunConfig {
    pub fn new(strategy: StrategyId, population_size: usize, p_r: f64, p_m: f64) -> Self {
        Self {
            strategy,
            population_size,
            p_r,
            p_m,
        }
    }

    pub fn label(&self) -> String {
        format!("{}:{}:{}:{}", self.strategy, self.population_size, self.p_r, self.p_m)
    }

    fn file_tag(&self) -> String {
        format!("{}__p{}_r{}_m{}", self.strategy, self.population_size, self.p_r, self.p_m)
    }
}

impl Eq for RunConfig {}

impl Ord for RunConfig {
    fn cmp(&self, other: &Self) -> Ordering {
        self.strategy
            .cmp(&other.strategy)
            .then(self.population_size.cmp(&other.population_size))
            .then(self.p_r.total_cmp(&other.p_r))
            .then(self.p_m.total_cmp(&other.p_m))
    }
}

impl PartialOrd for RunConfig {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Best configurations reported by the characterization studies.
pub fn published_best_configs(kind: ProblemKind) -> Vec<RunConfig> {
    use StrategyId::*;
    let rows: &[(StrategyId, usize, f64, f64)] = match kind {
        ProblemKind::Top => &[
            (Ubs, 200, 0.8, 1.0),
            (Rs, 200, 0.8, 1.0),
            (Ts, 200, 0.8, 1.0),
            (Sus, 200, 0.9, 1.0),
            (Urs, 200, 0.7, 1.0),
            (Rws, 200, 0.9, 1.0),
        ],
        ProblemKind::Qap => &[
            (Ubs, 150, 0.7, 1.0),
            (Rs, 50, 0.1, 1.0),
            (Ts, 100, 0.2, 1.0),
            (Rws, 50, 0.1, 1.0),
            (Sus, 50, 0.1, 1.0),
            (Urs, 100, 0.2, 1.0),
        ],
    };
    rows.iter().map(|&(s, p, r, m)| RunConfig::new(s, p, r, m)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub population_sizes: Vec<usize>,
    pub recombination_probabilities: Vec<f64>,
    pub mutation_probabilities: Vec<f64>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            population_sizes: vec![50, 100, 150, 200],
            recombination_probabilities: (1..=10).map(|k| k as f64 / 10.0).collect(),
            mutation_probabilities: vec![0.001, 0.01, 0.1, 1.0],
        }
    }
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        if self.population_sizes.is_empty()
            || self.recombination_probabilities.is_empty()
            || self.mutation_probabilities.is_empty()
        {
            return Err(Error::Config("sweep grid lists must be non-empty".into()));
        }
        let probs = self.recombination_probabilities.iter().chain(&self.mutation_probabilities);
        if let Some(p) = probs.into_iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Config(format!("probability {p} is outside [0, 1]")));
        }
        Ok(())
    }

    pub fn configs(&self, strategy: StrategyId) -> Vec<RunConfig> {
        let mut out = Vec::new();
        for &pop in &self.population_sizes {
            for &pr in &self.recombination_probabilities {
                for &pm in &self.mutation_probabilities {
                    out.push(RunConfig::new(strategy, pop, pr, pm));
                }
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.population_sizes.len() * self.recombination_probabilities.len() * self.mutation_probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClockMode {
    Wall,
    /// Elapsed time advances by the given tick per generation.
    Virtual(Duration),
}

/// Settings shared by every run of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSettings {
    pub time_limit: Duration,
    pub replications: usize,
    pub seed_base: u64,
    pub workers: usize,
    pub max_generations: Option<usize>,
    pub elite_fraction: f64,
    pub clock: ClockMode,
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        Self {
            time_limit: Duration::from_secs(300),
            replications: 3,
            seed_base: 0,
            workers: 1,
            max_generations: None,
            elite_fraction: DEFAULT_ELITE_FRACTION,
            clock: ClockMode::Wall,
        }
    }
}

/// Seed of one sweep cell: a hash of the instance, the GA parameters and
/// the replication index (the strategy is deliberately left out so that
/// strategies sharing a configuration also share seeds).
pub fn derive_seed(seed_base: u64, instance: &str, config: &RunConfig, replication: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(seed_base.to_le_bytes());
    h.update(instance.as_bytes());
    h.update([0]);
    h.update((config.population_size as u64).to_le_bytes());
    h.update(config.p_r.to_bits().to_le_bytes());
    h.update(config.p_m.to_bits().to_le_bytes());
    h.update((replication as u64).to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

pub fn ga_params(config: &RunConfig, settings: &ExperimentSettings, seed: u64) -> GaParams {
    GaParams {
        population_size: config.population_size,
        recombination_probability: config.p_r,
        mutation_probability: config.p_m,
        elite_fraction: GaParams::even_elite_fraction(config.population_size, settings.elite_fraction),
        time_limit: settings.time_limit,
        max_generations: settings.max_generations,
        target_objective: None,
        seed,
    }
}

/// Writes the bandit state of every generation as CSV.
pub struct UbsCsvDump<W: Write> {
    out: W,
    wrote_header: bool,
    error: Option<std::io::Error>,
}

impl<W: Write> UbsCsvDump<W> {
    pub fn new(out: W) -> Self {
        Self {
            out,
            wrote_header: false,
            error: None,
        }
    }

    pub fn finish(mut self) -> std::io::Result<W> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        if !self.wrote_header {
            writeln!(self.out, "{}", UbsState::CSV_HEADER)?;
        }
        self.out.flush()?;
        Ok(self.out)
    }
}

impl<G, W: Write> GenerationObserver<G> for UbsCsvDump<W> {
    fn on_generation(&mut self, _population: &Population<G>, ubs: Option<&UbsState>) {
        let (Some(state), None) = (ubs, &self.error) else {
            return;
        };
        let res = (|| {
            if !self.wrote_header {
                writeln!(self.out, "{}", UbsState::CSV_HEADER)?;
                self.wrote_header = true;
            }
            state.write_csv_rows(&mut self.out)
        })();
        if let Err(e) = res {
            self.error = Some(e);
        }
    }
}

fn rows_from_trace(instance: &str, config: &RunConfig, seed: u64, trace: &[TracePoint]) -> Vec<RunRecordRow> {
    trace
        .iter()
        .map(|t| RunRecordRow {
            instance: instance.to_string(),
            strategy: config.strategy.to_string(),
            population_size: config.population_size,
            p_r: config.p_r,
            p_m: config.p_m,
            seed,
            generation: t.generation,
            elapsed_seconds: t.elapsed_seconds,
            best_objective: t.best_objective,
        })
        .collect()
}

fn run_problem<P: Problem, O: GenerationObserver<P::Genotype> + ?Sized>(
    problem: &P,
    params: &GaParams,
    strategy: StrategyId,
    clock: ClockMode,
    observer: &mut O,
) -> Result<Vec<TracePoint>> {
    let mut clock: Box<dyn Clock> = match clock {
        ClockMode::Wall => Box::new(WallClock::start()),
        ClockMode::Virtual(tick) => Box::new(VirtualClock::new(tick)),
    };
    Ok(run_ga_with(problem, params, strategy, clock.as_mut(), observer)?.trace)
}

/// Runs one seeded GA and returns its per-generation rows.
pub fn run_single<O>(
    name: &str,
    instance: &Instance,
    config: &RunConfig,
    seed: u64,
    settings: &ExperimentSettings,
    observer: &mut O,
) -> Result<Vec<RunRecordRow>>
where
    O: GenerationObserver<TopSolution> + GenerationObserver<QapSolution>,
{
    let params = ga_params(config, settings, seed);
    let trace = match instance {
        Instance::Top(p) => run_problem(p, &params, config.strategy, settings.clock, observer)?,
        Instance::Qap(p) => run_problem(p, &params, config.strategy, settings.clock, observer)?,
    };
    Ok(rows_from_trace(name, config, seed, &trace))
}

/// Final best objective of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub instance: String,
    pub config: RunConfig,
    pub seed: u64,
    pub generations: usize,
    pub best_objective: f64,
}

impl RunSummary {
    pub fn from_rows(rows: &[RunRecordRow]) -> Result<Self> {
        let last = rows
            .iter()
            .max_by_key(|r| r.generation)
            .ok_or_else(|| Error::Config("run record has no rows".into()))?;
        Ok(Self {
            instance: last.instance.clone(),
            config: RunConfig::new(last.strategy.parse()?, last.population_size, last.p_r, last.p_m),
            seed: last.seed,
            generations: last.generation,
            best_objective: last.best_objective,
        })
    }
}

pub fn run_file_name(instance: &str, config: &RunConfig, replication: usize, seed: u64) -> String {
    format!("{instance}__{}__rep{replication}_s{seed:016x}.csv", config.file_tag())
}

struct Job<'a> {
    name: &'a str,
    instance: &'a Instance,
    config: RunConfig,
    replication: usize,
}

/// Runs every `(instance, config, replication)` cell on a pool of
/// `settings.workers` threads, persisting each run under `out/runs`.
pub fn run_cells(
    dataset: &Dataset,
    configs: &[RunConfig],
    settings: &ExperimentSettings,
    out: &Path,
) -> Result<Vec<RunSummary>> {
    use rayon::prelude::*;

    if settings.replications == 0 {
        return Err(Error::Config("replication count must be positive".into()));
    }
    for c in configs {
        ga_params(c, settings, 0).layout()?;
    }
    let mut jobs = Vec::new();
    for (name, instance) in &dataset.instances {
        for config in configs {
            for replication in 0..settings.replications {
                jobs.push(Job {
                    name,
                    instance,
                    config: *config,
                    replication,
                });
            }
        }
    }
    let runs_dir = out.join("runs");
    fs::create_dir_all(&runs_dir).map_err(|e| Error::io(&runs_dir, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(settings.workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let total = jobs.len();
    let results: Vec<Result<RunSummary>> = pool.install(|| {
        jobs.par_iter()
            .enumerate()
            .map(|(k, job)| {
                let seed = derive_seed(settings.seed_base, job.name, &job.config, job.replication);
                let rows = run_single(job.name, job.instance, &job.config, seed, settings, &mut ())?;
                let path = runs_dir.join(run_file_name(job.name, &job.config, job.replication, seed));
                write_run_records(&rows, &path)?;
                let summary = RunSummary::from_rows(&rows)?;
                log::info!(
                    "[{}/{total}] {} {} rep {}: best {} after {} generations",
                    k + 1,
                    job.name,
                    job.config.label(),
                    job.replication,
                    summary.best_objective,
                    summary.generations
                );
                Ok(summary)
            })
            .collect()
    });
    results.into_iter().collect()
}

/// Final results of every run file under `runs_dir`, sorted by file name.
pub fn load_run_summaries(runs_dir: &Path) -> Result<Vec<RunSummary>> {
    let mut files: Vec<PathBuf> = fs::read_dir(runs_dir)
        .map_err(|e| Error::io(runs_dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    files.iter().map(|f| RunSummary::from_rows(&read_run_records(f)?)).collect()
}

/// Metrics of one `(instance, config)` cell across replications.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellMetrics {
    pub instance: String,
    pub strategy: StrategyId,
    pub population_size: usize,
    pub p_r: f64,
    pub p_m: f64,
    pub runs: usize,
    pub bks: f64,
    pub mean_objective: f64,
    pub median_objective: f64,
    pub best_objective: f64,
    pub arpe: f64,
    pub mrpe: f64,
    pub rpe: f64,
}

impl CellMetrics {
    pub fn config(&self) -> RunConfig {
        RunConfig::new(self.strategy, self.population_size, self.p_r, self.p_m)
    }
}

/// Means over instances for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigMetrics {
    pub strategy: StrategyId,
    pub population_size: usize,
    pub p_r: f64,
    pub p_m: f64,
    pub instances: usize,
    pub arpe: f64,
    pub mrpe: f64,
    pub rpe: f64,
}

impl ConfigMetrics {
    pub fn config(&self) -> RunConfig {
        RunConfig::new(self.strategy, self.population_size, self.p_r, self.p_m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseTest {
    pub a: RunConfig,
    pub b: RunConfig,
    /// Instances both configurations were run on.
    pub instances: usize,
    pub result: WilcoxonResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub cells: Vec<CellMetrics>,
    pub configs: Vec<ConfigMetrics>,
    pub pairwise: Vec<PairwiseTest>,
}

impl MetricReport {
    pub fn config_metrics(&self, config: &RunConfig) -> Option<&ConfigMetrics> {
        self.configs.iter().find(|c| c.config() == *config)
    }

    /// Minimum mean ARPE; ties to the smaller population, then the smaller
    /// recombination and mutation probabilities.
    pub fn best_config(&self) -> Option<RunConfig> {
        self.configs
            .iter()
            .min_by(|a, b| {
                a.arpe
                    .total_cmp(&b.arpe)
                    .then(a.population_size.cmp(&b.population_size))
                    .then(a.p_r.total_cmp(&b.p_r))
                    .then(a.p_m.total_cmp(&b.p_m))
                    .then(a.strategy.cmp(&b.strategy))
            })
            .map(ConfigMetrics::config)
    }

    /// Configurations ordered by mean ARPE, best first.
    pub fn ranking(&self) -> Vec<&ConfigMetrics> {
        let mut v: Vec<&ConfigMetrics> = self.configs.iter().collect();
        v.sort_by(|a, b| a.arpe.total_cmp(&b.arpe).then(a.config().cmp(&b.config())));
        v
    }
}

/// Groups runs by cell, computes ARPE/MRPE/RPE, per-configuration means and
/// pairwise Wilcoxon tests over instance-matched ARPE values.
pub fn build_report(runs: &[RunSummary], bks: &BksTable, direction: Direction) -> Result<MetricReport> {
    let mut grouped: BTreeMap<(String, RunConfig), Vec<(u64, f64)>> = BTreeMap::new();
    for r in runs {
        grouped
            .entry((r.instance.clone(), r.config))
            .or_default()
            .push((r.seed, r.best_objective));
    }
    let mut cells = Vec::with_capacity(grouped.len());
    for ((instance, config), mut values) in grouped {
        values.sort_by_key(|v| v.0);
        let objectives: Vec<f64> = values.iter().map(|v| v.1).collect();
        let best = bks.require(&instance)?;
        cells.push(CellMetrics {
            strategy: config.strategy,
            population_size: config.population_size,
            p_r: config.p_r,
            p_m: config.p_m,
            runs: objectives.len(),
            bks: best,
            mean_objective: mean(&objectives),
            median_objective: median(&objectives),
            best_objective: objectives[1..].iter().fold(objectives[0], |b, &o| direction.best(b, o)),
            arpe: compute_arpe(&objectives, best),
            mrpe: compute_mrpe(&objectives, best),
            rpe: compute_rpe(&objectives, best, direction),
            instance,
        });
    }

    let mut by_config: BTreeMap<RunConfig, BTreeMap<String, &CellMetrics>> = BTreeMap::new();
    for c in &cells {
        by_config.entry(c.config()).or_default().insert(c.instance.clone(), c);
    }
    let configs: Vec<ConfigMetrics> = by_config
        .iter()
        .map(|(cfg, per_instance)| {
            let vals: Vec<&CellMetrics> = per_instance.values().copied().collect();
            let avg = |f: fn(&CellMetrics) -> f64| vals.iter().map(|c| f(c)).sum::<f64>() / vals.len() as f64;
            ConfigMetrics {
                strategy: cfg.strategy,
                population_size: cfg.population_size,
                p_r: cfg.p_r,
                p_m: cfg.p_m,
                instances: vals.len(),
                arpe: avg(|c| c.arpe),
                mrpe: avg(|c| c.mrpe),
                rpe: avg(|c| c.rpe),
            }
        })
        .collect();

    let keys: Vec<&RunConfig> = by_config.keys().collect();
    let mut pairwise = Vec::new();
    for i in 0..keys.len() {
        for j in (i + 1)..keys.len() {
            let (a, b) = (&by_config[keys[i]], &by_config[keys[j]]);
            let pairs: Vec<(f64, f64)> = a
                .iter()
                .filter_map(|(inst, ca)| b.get(inst).map(|cb| (ca.arpe, cb.arpe)))
                .collect();
            if pairs.is_empty() {
                continue;
            }
            pairwise.push(PairwiseTest {
                a: *keys[i],
                b: *keys[j],
                instances: pairs.len(),
                result: wilcoxon_signed_rank(&pairs),
            });
        }
    }
    Ok(MetricReport {
        cells,
        configs,
        pairwise,
    })
}

fn write_csv_file<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub const SUMMARY_HEADER: [&str; 13] = [
    "instance",
    "strategy",
    "population_size",
    "p_r",
    "p_m",
    "runs",
    "bks",
    "mean_objective",
    "median_objective",
    "best_objective",
    "arpe",
    "mrpe",
    "rpe",
];

pub const STRATEGY_SUMMARY_HEADER: [&str; 8] =
    ["strategy", "population_size", "p_r", "p_m", "instances", "arpe", "mrpe", "rpe"];

pub const WILCOXON_HEADER: [&str; 11] = [
    "config_a",
    "config_b",
    "instances",
    "nonzero",
    "w_plus",
    "w_minus",
    "statistic",
    "p_value",
    "exact",
    "small_sample",
    "significant",
];

pub const CONFIG_HEADER: [&str; 4] = ["strategy", "population_size", "p_r", "p_m"];

/// Writes `summary.csv`, `strategy_summary.csv` and `wilcoxon.csv` into `out`.
pub fn write_report(report: &MetricReport, out: &Path) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let cells: Vec<_> = report.cells.iter().map(|c| {
        (
            &c.instance,
            c.strategy,
            c.population_size,
            c.p_r,
            c.p_m,
            c.runs,
            c.bks,
            c.mean_objective,
            c.median_objective,
            c.best_objective,
            c.arpe,
            c.mrpe,
            c.rpe,
        )
    }).collect();
    write_csv_file(&out.join("summary.csv"), &cells, &SUMMARY_HEADER)?;
    let configs: Vec<_> = report
        .configs
        .iter()
        .map(|c| (c.strategy, c.population_size, c.p_r, c.p_m, c.instances, c.arpe, c.mrpe, c.rpe))
        .collect();
    write_csv_file(&out.join("strategy_summary.csv"), &configs, &STRATEGY_SUMMARY_HEADER)?;
    let tests: Vec<_> = report
        .pairwise
        .iter()
        .map(|t| {
            (
                t.a.label(),
                t.b.label(),
                t.instances,
                t.result.n,
                t.result.w_plus,
                t.result.w_minus,
                t.result.statistic,
                t.result.p_value,
                t.result.exact,
                t.result.small_sample,
                t.result.significant(),
            )
        })
        .collect();
    write_csv_file(&out.join("wilcoxon.csv"), &tests, &WILCOXON_HEADER)
}

pub fn write_configs(configs: &[RunConfig], path: &Path) -> Result<()> {
    write_csv_file(path, configs, &CONFIG_HEADER)
}

/// Reads a `strategy,population_size,p_r,p_m` CSV (with header).
pub fn read_configs(path: &Path) -> Result<Vec<RunConfig>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let rows: std::result::Result<Vec<RunConfig>, _> = csv::Reader::from_reader(file).deserialize().collect();
    Ok(rows?)
}

/// Runs the full grid for one strategy and reports the best configuration.
pub fn characterize(
    dataset: &Dataset,
    strategy: StrategyId,
    grid: &SweepGrid,
    bks: &BksTable,
    settings: &ExperimentSettings,
    out: &Path,
) -> Result<(MetricReport, RunConfig)> {
    grid.validate()?;
    dataset.check_bks(bks)?;
    let runs = run_cells(dataset, &grid.configs(strategy), settings, out)?;
    let report = build_report(&runs, bks, dataset.kind.direction())?;
    write_report(&report, out)?;
    let best = report
        .best_config()
        .ok_or_else(|| Error::Config("characterization produced no results".into()))?;
    write_configs(&[best], &out.join("best_config.csv"))?;
    Ok((report, best))
}

/// Runs each configuration for `settings.replications` seeds per instance.
pub fn compare(
    dataset: &Dataset,
    configs: &[RunConfig],
    bks: &BksTable,
    settings: &ExperimentSettings,
    out: &Path,
) -> Result<MetricReport> {
    if configs.is_empty() {
        return Err(Error::Config("no configurations to compare".into()));
    }
    dataset.check_bks(bks)?;
    let runs = run_cells(dataset, configs, settings, out)?;
    let report = build_report(&runs, bks, dataset.kind.direction())?;
    write_report(&report, out)?;
    Ok(report)
}

pub const PLOT_HEADER: [&str; 10] = [
    "strategy",
    "population_size",
    "p_r",
    "p_m",
    "count",
    "mean_rpe",
    "std_error",
    "min_rpe",
    "max_rpe",
    "instances",
];

/// Per-run relative percentage errors grouped by configuration: mean,
/// standard error, min and max, ready for external plotting.
pub fn emit_plot_data<W: Write>(runs: &[RunSummary], bks: &BksTable, out: W) -> Result<()> {
    let mut groups: BTreeMap<RunConfig, (Vec<f64>, std::collections::BTreeSet<String>)> = BTreeMap::new();
    for r in runs {
        let b = bks.require(&r.instance)?;
        let g = groups.entry(r.config).or_default();
        g.0.push((r.best_objective - b).abs() * 100.0 / b);
        g.1.insert(r.instance.clone());
    }
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(PLOT_HEADER)?;
    for (cfg, (errors, instances)) in groups {
        let min = errors.iter().copied().fold(f64::INFINITY, f64::min);
        let max = errors.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        w.serialize((
            cfg.strategy,
            cfg.population_size,
            cfg.p_r,
            cfg.p_m,
            errors.len(),
            mean(&errors),
            standard_error(&errors),
            min,
            max,
            instances.len(),
        ))?;
    }
    w.flush().map_err(|e| Error::io("<plot data>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(instance: &str, config: RunConfig, seed: u64, best: f64) -> RunSummary {
        RunSummary {
            instance: instance.into(),
            config,
            seed,
            generations: 10,
            best_objective: best,
        }
    }

    #[test]
    fn default_grid_matches_sweep_sizes() {
        let g = SweepGrid::default();
        assert_eq!(g.len(), 160);
        assert_eq!(g.configs(StrategyId::Ubs).len(), 160);
        assert!((g.recombination_probabilities[6] - 0.7).abs() < 1e-15);
        assert!(SweepGrid { mutation_probabilities: vec![], ..g.clone() }.validate().is_err());
        assert!(SweepGrid { mutation_probabilities: vec![1.5], ..g }.validate().is_err());
    }

    #[test]
    fn published_configs_run_with_adjusted_elites() {
        let s = ExperimentSettings::default();
        for kind in [ProblemKind::Top, ProblemKind::Qap] {
            let configs = published_best_configs(kind);
            assert_eq!(configs.len(), 6);
            for c in configs {
                ga_params(&c, &s, 0).layout().unwrap();
            }
        }
        let ubs_qap = published_best_configs(ProblemKind::Qap)[0];
        assert_eq!(ubs_qap, RunConfig::new(StrategyId::Ubs, 150, 0.7, 1.0));
        let ubs_top = published_best_configs(ProblemKind::Top)[0];
        assert_eq!(ubs_top, RunConfig::new(StrategyId::Ubs, 200, 0.8, 1.0));
    }

    #[test]
    fn seeds_are_pure_functions_of_the_cell() {
        let c = RunConfig::new(StrategyId::Ubs, 50, 0.5, 0.1);
        let d = RunConfig { strategy: StrategyId::Urs, ..c };
        assert_eq!(derive_seed(1, "a", &c, 0), derive_seed(1, "a", &c, 0));
        assert_eq!(derive_seed(1, "a", &c, 0), derive_seed(1, "a", &d, 0));
        assert_ne!(derive_seed(1, "a", &c, 0), derive_seed(1, "a", &c, 1));
        assert_ne!(derive_seed(1, "a", &c, 0), derive_seed(1, "b", &c, 0));
        assert_ne!(derive_seed(1, "a", &c, 0), derive_seed(2, "a", &c, 0));
    }

    #[test]
    fn report_metrics_and_best_config() {
        let mut bks = BksTable::default();
        bks.insert("i1", 100.0);
        bks.insert("i2", 200.0);
        let a = RunConfig::new(StrategyId::Ubs, 50, 0.5, 1.0);
        let b = RunConfig::new(StrategyId::Ubs, 100, 0.5, 1.0);
        let runs = vec![
            summary("i1", a, 1, 90.0),
            summary("i1", a, 2, 95.0),
            summary("i1", a, 3, 100.0),
            summary("i2", a, 1, 200.0),
            summary("i1", b, 1, 100.0),
            summary("i2", b, 1, 190.0),
        ];
        let r = build_report(&runs, &bks, Direction::Maximize).unwrap();
        assert_eq!(r.cells.len(), 4);
        assert_eq!(r.cells[0].arpe, 5.0);
        assert_eq!(r.cells[0].rpe, 0.0);
        let ma = r.config_metrics(&a).unwrap();
        assert_eq!(ma.arpe, 2.5);
        let mb = r.config_metrics(&b).unwrap();
        assert_eq!(mb.arpe, 2.5);
        // Tie on ARPE: smaller population wins.
        assert_eq!(r.best_config(), Some(a));
        assert_eq!(r.pairwise.len(), 1);
        assert_eq!(r.pairwise[0].instances, 2);
    }

    #[test]
    fn identical_strategies_are_not_significantly_different() {
        let mut bks = BksTable::default();
        let a = RunConfig::new(StrategyId::Ubs, 50, 0.5, 1.0);
        let b = RunConfig::new(StrategyId::Ts, 50, 0.5, 1.0);
        let mut runs = Vec::new();
        for i in 0..8 {
            let name = format!("i{i}");
            bks.insert(name.clone(), 100.0);
            for seed in 0..3 {
                let v = 80.0 + i as f64 + seed as f64;
                runs.push(summary(&name, a, seed, v));
                runs.push(summary(&name, b, seed, v));
            }
        }
        let r = build_report(&runs, &bks, Direction::Maximize).unwrap();
        assert_eq!(r.pairwise[0].result.p_value, 1.0);
        assert!(!r.pairwise[0].result.significant());
    }

    #[test]
    fn missing_bks_names_the_instance() {
        let runs = vec![summary("lost", RunConfig::new(StrategyId::Urs, 10, 0.1, 0.1), 0, 1.0)];
        match build_report(&runs, &BksTable::default(), Direction::Maximize) {
            Err(Error::MissingBks(name)) => assert_eq!(name, "lost"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn plot_data_rows() {
        let mut bks = BksTable::default();
        bks.insert("i1", 100.0);
        let c = RunConfig::new(StrategyId::Rws, 50, 0.1, 1.0);
        let runs = vec![summary("i1", c, 1, 90.0), summary("i1", c, 2, 95.0), summary("i1", c, 3, 100.0)];
        let mut buf = Vec::new();
        emit_plot_data(&runs, &bks, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        let fields: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(fields[..5], ["rws", "50", "0.1", "1.0", "3"]);
        assert_eq!(fields[5].parse::<f64>().unwrap(), 5.0);
        let se: f64 = fields[6].parse().unwrap();
        assert!((se - 5.0 / 3f64.sqrt()).abs() < 1e-12, "{se}");
        assert_eq!(fields[7..], ["0.0", "10.0", "1"]);

        let mut buf = Vec::new();
        emit_plot_data(&[], &bks, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1);
    }

    #[test]
    fn configs_round_trip_through_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("configs.csv");
        let configs = published_best_configs(ProblemKind::Qap);
        write_configs(&configs, &path).unwrap();
        assert_eq!(read_configs(&path).unwrap(), configs);
    }
}
