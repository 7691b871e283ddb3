//! Seeded batch experiments and their on-disk artifacts.
//!
//! One experiment directory holds `config.snapshot` (the resolved TOML
//! config), `summary.csv`, `transcripts.jsonl` and one `seed_<n>/` directory
//! per seed with `record.json` and `convergence.csv`. An `n_hist` sweep nests
//! the seed directories under `n_hist_<k>/`.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::baselines::{run_baseline, BaselineConfig};
use crate::benchmarks::{front_segments, igd, zdt_true_front};
use crate::engine::{self, LeoConfig, LeoMode, RunRecord, StopReason};
use crate::error::CoreError;
use crate::fmt_float;
use crate::generator::{
    derive_seed, read_transcript, Backend, BackendKind, Generator, GeneratorConfig, MemoryTranscript, MockBackend,
    RemoteBackend, ReplayBackend, TranscriptEntry,
};
use crate::moo::{hypervolume_2d, run_nsga2, MooConfig, OffspringOperator, HYPERVOLUME_REFERENCE};
use crate::par::{self, Execution};
use crate::problems::ProblemId;
use crate::stats::{explore_variance_series, EnsembleSummary};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BACKEND_UNAVAILABLE: i32 = 3;
pub const EXIT_PARTIAL: i32 = 4;
pub const EXIT_IO: i32 = 1;

pub const SNAPSHOT_FILE: &str = "config.snapshot";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const TRANSCRIPT_FILE: &str = "transcripts.jsonl";

const IGD_REFERENCE_POINTS: usize = 1000;
/// f1 gap that separates two pieces of a disconnected front.
pub const SEGMENT_GAP: f64 = 0.05;
const MOCK_SEED_LABEL: u64 = 0x6d6f_636b;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Leo,
    LeoRnd,
    Trajectory,
    Baseline,
    Nsga2,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Leo => "leo",
            Method::LeoRnd => "leo_rnd",
            Method::Trajectory => "trajectory",
            Method::Baseline => "baseline",
            Method::Nsga2 => "nsga2",
        }
    }

    fn leo_mode(self) -> Option<LeoMode> {
        match self {
            Method::Leo => Some(LeoMode::Leo),
            Method::LeoRnd => Some(LeoMode::LeoRnd),
            Method::Trajectory => Some(LeoMode::Trajectory),
            _ => None,
        }
    }
}

impl std::str::FromStr for Method {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self, CoreError> {
        Ok(match s {
            "leo" => Method::Leo,
            "leo_rnd" => Method::LeoRnd,
            "trajectory" => Method::Trajectory,
            "baseline" => Method::Baseline,
            "nsga2" => Method::Nsga2,
            _ => return Err(CoreError::Parameter(format!("unknown method `{s}`"))),
        })
    }
}

/// Either a seed count (`seeds = 20` means 0..20) or an explicit list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Seeds {
    Count(u64),
    List(Vec<u64>),
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds::Count(1)
    }
}

impl Seeds {
    pub fn resolve(&self) -> Vec<u64> {
        match self {
            Seeds::Count(n) => (0..*n).collect(),
            Seeds::List(v) => v.clone(),
        }
    }
}

fn experiment_generator() -> GeneratorConfig {
    // Wall-clock stamps would break byte-identical reruns.
    GeneratorConfig { timestamps: false, ..GeneratorConfig::default() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: String,
    pub method: Method,
    pub seeds: Seeds,
    pub output_dir: PathBuf,
    /// Trajectory only: one labeled record set per value.
    pub n_hist_sweep: Vec<usize>,
    pub full_precision: bool,
    /// How seeds are dispatched.
    pub execution: Execution,
    pub leo: LeoConfig,
    pub baseline: BaselineConfig,
    pub moo: MooConfig,
    #[serde(default = "experiment_generator")]
    pub generator: GeneratorConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: "sphere2d".into(),
            method: Method::Leo,
            seeds: Seeds::default(),
            output_dir: PathBuf::from("runs/experiment"),
            n_hist_sweep: Vec::new(),
            full_precision: false,
            execution: Execution::Parallel,
            leo: LeoConfig::default(),
            baseline: BaselineConfig::default(),
            moo: MooConfig::default(),
            generator: experiment_generator(),
        }
    }
}

pub const PRESETS: [&str; 3] = ["windfarm_2", "windfarm_4", "windfarm_8"];

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = fs::read_to_string(path).map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment config serializes")
    }

    /// Canned windfarm ensembles: LEO with 30 seeds.
    pub fn preset(name: &str) -> Option<Self> {
        PRESETS.contains(&name).then(|| Self {
            problem: name.into(),
            seeds: Seeds::Count(30),
            output_dir: PathBuf::from(format!("runs/{name}")),
            ..Self::default()
        })
    }

    pub fn problem_id(&self) -> Result<ProblemId, ExperimentError> {
        self.problem.parse().map_err(|e: CoreError| ExperimentError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let cfg = |m: String| Err(ExperimentError::Config(m));
        let id = self.problem_id()?;
        let seeds = self.seeds.resolve();
        if seeds.is_empty() {
            return cfg("seed list is empty".into());
        }
        let mut seen = BTreeSet::new();
        if let Some(dup) = seeds.iter().find(|s| !seen.insert(**s)) {
            return cfg(format!("seed {dup} appears more than once"));
        }
        let objectives = id.num_objectives();
        match self.method {
            Method::Nsga2 if objectives != 2 => {
                return cfg(format!("nsga2 needs a two-objective problem, `{id}` has {objectives}"))
            }
            Method::Nsga2 => {}
            _ if objectives != 1 => return cfg(format!("{} needs a single-objective problem", self.method.as_str())),
            _ => {}
        }
        if !self.n_hist_sweep.is_empty() && self.method != Method::Trajectory {
            return cfg("n_hist_sweep applies only to the trajectory method".into());
        }
        if self.n_hist_sweep.contains(&0) {
            return cfg("n_hist_sweep values must be positive".into());
        }
        let wrap = |r: Result<(), CoreError>| r.map_err(|e| ExperimentError::Config(e.to_string()));
        match self.method {
            Method::Baseline => wrap(self.baseline.validate())?,
            Method::Nsga2 => wrap(self.moo.validate())?,
            m => wrap(LeoConfig { mode: m.leo_mode().expect("leo method"), ..self.leo.clone() }.validate())?,
        }
        if self.uses_generator() {
            wrap(self.generator.validate())?;
        }
        Ok(())
    }

    fn uses_generator(&self) -> bool {
        match self.method {
            Method::Baseline => false,
            Method::Nsga2 => self.moo.operator == OffspringOperator::LlmPair,
            _ => true,
        }
    }

    /// (label, subdirectory, config for that group).
    fn groups(&self) -> Vec<(String, Option<String>, LeoConfig)> {
        let mode = self.method.leo_mode().unwrap_or_default();
        let base = LeoConfig { mode, ..self.leo.clone() };
        if self.n_hist_sweep.is_empty() {
            vec![(self.method.as_str().to_string(), None, base)]
        } else {
            self.n_hist_sweep
                .iter()
                .map(|&k| {
                    let label = format!("n_hist_{k}");
                    (label.clone(), Some(label), LeoConfig { n_hist: k, ..base.clone() })
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl ExperimentError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) => EXIT_CONFIG,
            ExperimentError::BackendUnavailable(_) => EXIT_BACKEND_UNAVAILABLE,
            ExperimentError::Io(_) => EXIT_IO,
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> ExperimentError {
    ExperimentError::Io(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, contents: &str) -> Result<(), ExperimentError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedOutcome {
    pub seed: u64,
    /// Final best objective (hypervolume for nsga2).
    pub value: f64,
    pub failure: Option<String>,
    pub backend_unavailable: bool,
    /// Method-specific scalars, e.g. `igd` and `segments` for ZDT fronts.
    pub extra: Vec<(&'static str, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupOutcome {
    pub label: String,
    pub metric: &'static str,
    pub seeds: Vec<SeedOutcome>,
}

impl GroupOutcome {
    pub fn summary(&self) -> EnsembleSummary {
        let ok: Vec<f64> = self.seeds.iter().filter(|s| s.failure.is_none()).map(|s| s.value).collect();
        EnsembleSummary::of(&ok)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub dir: PathBuf,
    pub groups: Vec<GroupOutcome>,
}

impl ExperimentOutcome {
    pub fn failures(&self) -> impl Iterator<Item = (&str, &SeedOutcome)> {
        self.groups
            .iter()
            .flat_map(|g| g.seeds.iter().map(move |s| (g.label.as_str(), s)))
            .filter(|(_, s)| s.failure.is_some())
    }

    /// 0 when every seed finished, 3 when every seed lost its backend, 4 for
    /// any other mix of failures.
    pub fn exit_code(&self) -> i32 {
        let total: usize = self.groups.iter().map(|g| g.seeds.len()).sum();
        let failed: Vec<&SeedOutcome> = self.failures().map(|(_, s)| s).collect();
        if failed.is_empty() {
            EXIT_OK
        } else if failed.len() == total && failed.iter().all(|s| s.backend_unavailable) {
            EXIT_BACKEND_UNAVAILABLE
        } else {
            EXIT_PARTIAL
        }
    }
}

/// `label,metric,runs,failed,mean,std,median,min,max`, one row per group.
pub fn summary_csv(groups: &[GroupOutcome], full_precision: bool) -> String {
    let f = |v: f64| fmt_float(v, full_precision);
    let mut out = String::from("label,metric,runs,failed,mean,std,median,min,max\n");
    for g in groups {
        let s = g.summary();
        let failed = g.seeds.len() - s.runs;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            g.label,
            g.metric,
            s.runs,
            failed,
            f(s.mean),
            f(s.std),
            f(s.median),
            f(s.min),
            f(s.max)
        );
    }
    out
}

struct SeedArtifacts {
    outcome: SeedOutcome,
    files: Vec<(&'static str, String)>,
    transcript: Vec<TranscriptEntry>,
}

/// Where per-seed generators get their answers.
enum Source {
    None,
    Shared(Arc<dyn Backend>),
    Replay(Vec<TranscriptEntry>),
}

fn run_id(label: &Option<String>, seed: u64) -> String {
    match label {
        Some(l) => format!("{l}/seed_{seed}"),
        None => format!("seed_{seed}"),
    }
}

fn backend_source(cfg: &ExperimentConfig) -> Result<Source, ExperimentError> {
    if !cfg.uses_generator() {
        return Ok(Source::None);
    }
    match cfg.generator.backend {
        // Mock backends are rebuilt per seed with a seed-derived policy.
        BackendKind::Mock => Ok(Source::None),
        BackendKind::Remote => {
            let key = std::env::var(&cfg.generator.api_key_env).unwrap_or_default();
            let backend = RemoteBackend::new(&cfg.generator, key).map_err(|e| {
                ExperimentError::BackendUnavailable(format!("{e} (set ${})", cfg.generator.api_key_env))
            })?;
            Ok(Source::Shared(Arc::new(backend)))
        }
        BackendKind::Replay => {
            let path = cfg.generator.replay_path.as_ref().expect("validated");
            let entries = read_transcript(path).map_err(|e| ExperimentError::Config(e.to_string()))?;
            Ok(Source::Replay(entries))
        }
    }
}

fn seed_generator(cfg: &ExperimentConfig, source: &Source, id: &str, seed: u64) -> (Generator, Arc<MemoryTranscript>) {
    let backend: Arc<dyn Backend> = match source {
        Source::Shared(b) => Arc::clone(b),
        Source::Replay(entries) => Arc::new(ReplayBackend::from_entries(entries, Some(id))),
        Source::None => {
            let policy =
                crate::generator::MockPolicy { seed: derive_seed(seed, &[MOCK_SEED_LABEL]), ..cfg.generator.mock };
            Arc::new(MockBackend::new(policy))
        }
    };
    let sink = Arc::new(MemoryTranscript::default());
    let generator = Generator::new(backend, cfg.generator.max_retries)
        .with_run_id(id)
        .with_sink(sink.clone())
        .with_timestamps(cfg.generator.timestamps);
    (generator, sink)
}

/// Name of the backend that produced the answers, so replayed records match
/// the originals.
fn recorded_backend_name(cfg: &ExperimentConfig, generator: &Generator) -> String {
    match (&cfg.generator.backend, &cfg.generator.replay_path) {
        (BackendKind::Replay, Some(path)) => path
            .parent()
            .map(|d| d.join(SNAPSHOT_FILE))
            .and_then(|p| fs::read_to_string(p).ok())
            .and_then(|t| ExperimentConfig::from_toml(&t).ok())
            .map(|c| match c.generator.backend {
                BackendKind::Mock => "mock",
                BackendKind::Remote => "remote",
                BackendKind::Replay => "replay",
            })
            .unwrap_or("replay")
            .to_string(),
        _ => generator.backend_name().to_string(),
    }
}

fn failure_of(stop: &StopReason) -> (Option<String>, bool) {
    match stop {
        StopReason::Completed | StopReason::BudgetExhausted => (None, false),
        StopReason::BackendUnavailable { message, .. } => (Some(message.clone()), true),
        StopReason::GeneratorFailure { message, .. } | StopReason::ObjectiveFailure { message } => {
            (Some(message.clone()), false)
        }
    }
}

fn run_seed(
    cfg: &ExperimentConfig,
    problem: ProblemId,
    leo: &LeoConfig,
    label: &Option<String>,
    source: &Source,
    seed: u64,
) -> SeedArtifacts {
    let id = run_id(label, seed);
    let (generator, sink) = seed_generator(cfg, source, &id, seed);
    let failed = |msg: String| SeedArtifacts {
        outcome: SeedOutcome {
            seed,
            value: f64::NAN,
            failure: Some(msg),
            backend_unavailable: false,
            extra: Vec::new(),
        },
        files: Vec::new(),
        transcript: Vec::new(),
    };
    let spec = match problem.objective_spec(seed) {
        Ok(s) => s,
        Err(e) => return failed(e.to_string()),
    };
    let full = cfg.full_precision;
    let mut files = Vec::new();
    let outcome = match cfg.method {
        Method::Baseline => match run_baseline(&spec, &BaselineConfig { seed, ..cfg.baseline.clone() }) {
            Ok(rec) => {
                let mut csv = String::from("step,best_f\n");
                for (i, v) in rec.best_series.iter().enumerate() {
                    let _ = writeln!(csv, "{i},{}", fmt_float(*v, full));
                }
                files.push(("record.json", serde_json::to_string_pretty(&rec).expect("record serializes")));
                files.push(("convergence.csv", csv));
                let failure = rec.diverged.then(|| "iterates diverged".to_string());
                SeedOutcome { seed, value: rec.best_f, failure, backend_unavailable: false, extra: Vec::new() }
            }
            Err(e) => return failed(e.to_string()),
        },
        Method::Nsga2 => {
            let moo = MooConfig { seed, ..cfg.moo.clone() };
            match run_nsga2(&spec, &moo, Some(&generator)) {
                Ok(res) => {
                    let mut csv = String::from("generation,hypervolume,front_size,fallbacks\n");
                    for h in &res.history {
                        let _ = writeln!(
                            csv,
                            "{},{},{},{}",
                            h.generation,
                            fmt_float(h.hypervolume, full),
                            h.front_size,
                            h.fallbacks
                        );
                    }
                    let mut summary = serde_json::to_value(&res).expect("result serializes");
                    let points = res.front_points();
                    let mut extra = vec![("front_size", points.len() as f64)];
                    if let ProblemId::Benchmark(b) = problem {
                        if let Ok(reference) = zdt_true_front(b, IGD_REFERENCE_POINTS) {
                            let d = igd(&reference, &points);
                            summary["igd"] = serde_json::json!(d);
                            extra.push(("igd", d));
                        }
                    }
                    extra.push(("segments", front_segments(&points, SEGMENT_GAP).len() as f64));
                    files.push(("record.json", serde_json::to_string_pretty(&summary).expect("json")));
                    files.push(("convergence.csv", csv));
                    files.push(("front.csv", res.front_csv(full)));
                    let hv = hypervolume_2d(&points, HYPERVOLUME_REFERENCE);
                    SeedOutcome { seed, value: hv, failure: None, backend_unavailable: false, extra }
                }
                Err(e) => return failed(e.to_string()),
            }
        }
        _ => match engine::run_with(&spec, &LeoConfig { seed, ..leo.clone() }, &generator) {
            Ok(mut rec) => {
                rec.backend = recorded_backend_name(cfg, &generator);
                let (failure, unavailable) = failure_of(&rec.stop_reason);
                files.push(("record.json", rec.to_json()));
                files.push(("convergence.csv", rec.to_csv(full)));
                SeedOutcome {
                    seed,
                    value: rec.min_fun_val,
                    failure,
                    backend_unavailable: unavailable,
                    extra: Vec::new(),
                }
            }
            Err(e) => return failed(e.to_string()),
        },
    };
    let mut transcript = sink.entries();
    // Explore and exploit requests may interleave; order by request.
    transcript.sort_by_key(|e| (e.key, e.attempt));
    SeedArtifacts { outcome, files, transcript }
}

/// Run every seed of `cfg`, write the artifact directory and report the
/// per-seed outcomes. Seed failures are recorded, not fatal.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome, ExperimentError> {
    cfg.validate()?;
    let problem = cfg.problem_id()?;
    let source = backend_source(cfg)?;
    let dir = cfg.output_dir.clone();
    fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    write_file(&dir.join(SNAPSHOT_FILE), &cfg.to_toml())?;

    let seeds = cfg.seeds.resolve();
    let mut groups = Vec::new();
    let mut transcript = String::new();
    for (label, subdir, leo) in cfg.groups() {
        let artifacts = par::map_with(cfg.execution, &seeds, |&s| run_seed(cfg, problem, &leo, &subdir, &source, s));
        let base = subdir.as_ref().map_or_else(|| dir.clone(), |s| dir.join(s));
        let mut outcomes = Vec::with_capacity(artifacts.len());
        for a in artifacts {
            let seed_dir = base.join(format!("seed_{}", a.outcome.seed));
            for (name, contents) in &a.files {
                write_file(&seed_dir.join(name), contents)?;
            }
            if let Some(msg) = &a.outcome.failure {
                write_file(&seed_dir.join("failure.txt"), &format!("{msg}\n"))?;
            }
            for e in &a.transcript {
                transcript.push_str(&serde_json::to_string(e).expect("entry serializes"));
                transcript.push('\n');
            }
            outcomes.push(a.outcome);
        }
        let metric = if cfg.method == Method::Nsga2 { "hypervolume" } else { "best_f" };
        groups.push(GroupOutcome { label, metric, seeds: outcomes });
    }
    write_file(&dir.join(SUMMARY_FILE), &summary_csv(&groups, cfg.full_precision))?;
    write_file(&dir.join(TRANSCRIPT_FILE), &transcript)?;
    Ok(ExperimentOutcome { dir, groups })
}

/// Re-run the experiment stored in `source_dir` against its own transcript,
/// writing into `output_dir`.
pub fn replay_experiment(source_dir: &Path, output_dir: &Path) -> Result<ExperimentOutcome, ExperimentError> {
    let mut cfg = ExperimentConfig::load(&source_dir.join(SNAPSHOT_FILE))?;
    cfg.generator.backend = BackendKind::Replay;
    cfg.generator.replay_path = Some(source_dir.join(TRANSCRIPT_FILE));
    cfg.output_dir = output_dir.to_path_buf();
    run_experiment(&cfg)
}

/// Every LEO run record below `dir`, in path order.
pub fn load_run_records(dir: &Path) -> Result<Vec<(PathBuf, RunRecord)>, ExperimentError> {
    let mut paths = Vec::new();
    collect_records(dir, &mut paths)?;
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let text = fs::read_to_string(&p).map_err(|e| io_err(&p, e))?;
            let rec = serde_json::from_str(&text)
                .map_err(|e| ExperimentError::Config(format!("{} is not a LEO run record: {e}", p.display())))?;
            Ok((p, rec))
        })
        .collect()
}

fn collect_records(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), ExperimentError> {
    for entry in fs::read_dir(dir).map_err(|e| io_err(dir, e))? {
        let path = entry.map_err(|e| io_err(dir, e))?.path();
        if path.is_dir() {
            collect_records(&path, out)?;
        } else if path.file_name().is_some_and(|n| n == "record.json") {
            out.push(path);
        }
    }
    Ok(())
}

/// Explore-pool variance and KDE tables for every run record below `dir`.
/// Returns (`variance.csv`, `kde.csv`) contents.
pub fn stats_tables(dir: &Path, every_k: usize, full_precision: bool) -> Result<(String, String), ExperimentError> {
    let loaded = load_run_records(dir)?;
    if loaded.is_empty() {
        return Err(ExperimentError::Config(format!("no run records under {}", dir.display())));
    }
    let records: Vec<RunRecord> = loaded.iter().map(|(_, r)| r.clone()).collect();
    let series = explore_variance_series(&records, every_k).map_err(|e| ExperimentError::Config(e.to_string()))?;
    let f = |v: f64| fmt_float(v, full_precision);
    let mut variance = String::from("run,seed,iteration,variable,variance\n");
    let mut kde = String::from("run,seed,iteration,variable,bandwidth,x,density\n");
    for ((path, rec), points) in loaded.iter().zip(&series) {
        let run =
            path.parent().and_then(|p| p.strip_prefix(dir).ok()).map_or_else(String::new, |p| p.display().to_string());
        for pt in points {
            for (v, var) in pt.variances.iter().enumerate() {
                let _ = writeln!(variance, "{run},{},{},{v},{}", rec.seed, pt.iteration, f(*var));
            }
            for k in pt.kdes.iter().flatten() {
                for (x, d) in k.grid.iter().zip(&k.density) {
                    let _ = writeln!(
                        kde,
                        "{run},{},{},{},{},{},{}",
                        rec.seed,
                        pt.iteration,
                        k.variable,
                        f(k.bandwidth),
                        f(*x),
                        f(*d)
                    );
                }
            }
        }
    }
    Ok((variance, kde))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_parse_as_count_or_list() {
        let c = ExperimentConfig::from_toml("seeds = 3").unwrap();
        assert_eq!(c.seeds.resolve(), vec![0, 1, 2]);
        let l = ExperimentConfig::from_toml("seeds = [5, 7]").unwrap();
        assert_eq!(l.seeds.resolve(), vec![5, 7]);
    }

    #[test]
    fn duplicate_and_empty_seeds_rejected() {
        let dup = ExperimentConfig { seeds: Seeds::List(vec![1, 2, 1]), ..Default::default() };
        assert!(matches!(dup.validate(), Err(ExperimentError::Config(_))));
        let empty = ExperimentConfig { seeds: Seeds::List(vec![]), ..Default::default() };
        assert!(empty.validate().is_err());
    }

    #[test]
    fn method_problem_compatibility() {
        let bad = ExperimentConfig { problem: "zdt1".into(), ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = ExperimentConfig { method: Method::Nsga2, ..Default::default() };
        assert!(bad.validate().is_err());
        let sweep = ExperimentConfig { n_hist_sweep: vec![1, 5], ..Default::default() };
        assert!(sweep.validate().is_err());
    }

    #[test]
    fn snapshot_round_trips() {
        let cfg = ExperimentConfig::preset("windfarm_4").unwrap();
        assert_eq!(cfg.seeds.resolve().len(), 30);
        assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        assert!(ExperimentConfig::preset("windfarm_3").is_none());
    }

    #[test]
    fn unknown_keys_are_config_errors() {
        assert!(ExperimentConfig::from_toml("problme = \"sphere2d\"").is_err());
    }
}
