//! Optimization loops: two-pool LEO, the context-free LEO-Rnd ablation, and
//! the single-trajectory history mode.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::generator::{derive_seed, GenerationRequest, Generator, GeneratorConfig, GeneratorError};
use crate::objective::{Budget, ObjectiveSpec};
use crate::par::{self, Execution};
use crate::pool::{default_num_port, port_and_filter, Candidate, Pool, PoolRole, PortRule, Source};
use crate::prompting::{build_prompt, JitterPolicy, PromptMode, PromptTemplate};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeoMode {
    #[default]
    Leo,
    LeoRnd,
    Trajectory,
}

impl LeoMode {
    pub fn as_str(self) -> &'static str {
        match self {
            LeoMode::Leo => "leo",
            LeoMode::LeoRnd => "leo_rnd",
            LeoMode::Trajectory => "trajectory",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LeoConfig {
    pub pop_size: usize,
    pub max_iterations: usize,
    /// `None` ports 20% of the population.
    pub num_port: Option<usize>,
    pub port_rule: PortRule,
    pub jitter_explore: JitterPolicy,
    pub jitter_exploit: JitterPolicy,
    pub seed: u64,
    pub mode: LeoMode,
    /// Trajectory mode: how many recent (x, f) pairs the prompt shows.
    pub n_hist: usize,
    /// Trajectory mode: size of the random starting history.
    pub n_init: usize,
    /// Hard cap on objective evaluations, initial population included.
    pub max_evaluations: Option<usize>,
    /// Draw the explore and exploit pools from separate random populations.
    pub independent_init: bool,
    /// Number of best exploit members shown in the exploit prompt.
    pub exploit_context: usize,
    pub execution: Execution,
    /// Store both pools after every iteration.
    pub record_snapshots: bool,
}

impl Default for LeoConfig {
    fn default() -> Self {
        Self {
            pop_size: 10,
            max_iterations: 30,
            num_port: None,
            port_rule: PortRule::Unconditional,
            jitter_explore: JitterPolicy::default(),
            jitter_exploit: JitterPolicy::default(),
            seed: 0,
            mode: LeoMode::Leo,
            n_hist: 10,
            n_init: 1,
            max_evaluations: Some(1000),
            independent_init: false,
            exploit_context: 1,
            execution: Execution::Parallel,
            record_snapshots: true,
        }
    }
}

impl LeoConfig {
    pub fn num_port(&self) -> usize {
        self.num_port.unwrap_or_else(|| default_num_port(self.pop_size))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(CoreError::Parameter(m.to_string()));
        if self.pop_size == 0 {
            return bad("pop_size must be positive");
        }
        if self.num_port() == 0 || self.num_port() > self.pop_size {
            return bad("num_port must lie in 1..=pop_size");
        }
        if self.n_hist == 0 || self.n_init == 0 {
            return bad("n_hist and n_init must be positive");
        }
        if self.exploit_context == 0 || self.exploit_context > self.pop_size {
            return bad("exploit_context must lie in 1..=pop_size");
        }
        self.jitter_explore.validate()?;
        self.jitter_exploit.validate()
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        crate::generator::sha256_hex(&serde_json::to_string(self).expect("config serializes"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StopReason {
    Completed,
    BudgetExhausted,
    GeneratorFailure { message: String, raw: Option<String> },
    BackendUnavailable { message: String, raw: Option<String> },
    ObjectiveFailure { message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Reported best: exploit-pool best for LEO, best-so-far otherwise.
    pub best_f: f64,
    pub exploit_best: f64,
    pub exploit_mean: f64,
    pub explore_best: f64,
    pub explore_mean: f64,
    pub evaluations_used: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explore_pool: Option<Vec<Candidate>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exploit_pool: Option<Vec<Candidate>>,
    /// Trajectory mode: the candidate proposed this iteration.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proposed: Option<Candidate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: LeoMode,
    pub problem: String,
    pub seed: u64,
    pub config_hash: String,
    pub backend: String,
    pub iterations: Vec<IterationRecord>,
    pub min_fun_val: f64,
    pub argmin: Vec<f64>,
    pub iterations_completed: usize,
    /// Every objective call, the initial population included.
    pub evaluations_used: usize,
    pub evaluations_excluding_init: usize,
    pub stop_reason: StopReason,
    pub warnings: Vec<String>,
}

impl RunRecord {
    pub fn is_complete(&self) -> bool {
        matches!(self.stop_reason, StopReason::Completed | StopReason::BudgetExhausted)
    }

    pub fn best_series(&self) -> Vec<f64> {
        self.iterations.iter().map(|r| r.best_f).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serializes")
    }

    /// Per-iteration convergence table.
    pub fn to_csv(&self, full_precision: bool) -> String {
        let f = |v: f64| crate::fmt_float(v, full_precision);
        let mut out =
            String::from("iteration,best_f,exploit_best,exploit_mean,explore_best,explore_mean,evaluations\n");
        for r in &self.iterations {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.iteration,
                f(r.best_f),
                f(r.exploit_best),
                f(r.exploit_mean),
                f(r.explore_best),
                f(r.explore_mean),
                r.evaluations_used
            );
        }
        out
    }
}

const INIT_LABEL: u64 = 0x1111;
const INIT_EXPLOIT_LABEL: u64 = 0x2222;
const ROLE_EXPLORE: u64 = 0;
const ROLE_EXPLOIT: u64 = 1;
const ROLE_TRAJECTORY: u64 = 2;

/// Generation key: unique per (iteration, role) within a run.
pub fn request_key(iteration: usize, role: u64) -> u64 {
    iteration as u64 * 4 + role
}

/// Run the mode selected by `cfg.mode` with a generator built from `gcfg`.
pub fn run(spec: &ObjectiveSpec, cfg: &LeoConfig, gcfg: &GeneratorConfig) -> Result<RunRecord> {
    let generator = Generator::from_config(gcfg)?;
    run_with(spec, cfg, &generator)
}

pub fn run_with(spec: &ObjectiveSpec, cfg: &LeoConfig, generator: &Generator) -> Result<RunRecord> {
    match cfg.mode {
        LeoMode::Leo => run_leo(spec, cfg, generator),
        LeoMode::LeoRnd => run_leo_rnd(spec, cfg, generator),
        LeoMode::Trajectory => run_trajectory(spec, cfg, generator),
    }
}

struct Run<'a> {
    spec: &'a ObjectiveSpec,
    cfg: &'a LeoConfig,
    generator: &'a Generator,
    budget: Budget,
    init_evaluations: usize,
    record: RunRecord,
}

impl<'a> Run<'a> {
    fn new(spec: &'a ObjectiveSpec, cfg: &'a LeoConfig, generator: &'a Generator) -> Result<Self> {
        cfg.validate()?;
        if cfg.mode != LeoMode::Trajectory && spec.num_objectives != 1 {
            return Err(CoreError::Parameter(format!(
                "`{}` has {} objectives; LEO is single-objective",
                spec.name, spec.num_objectives
            )));
        }
        let budget = match cfg.max_evaluations {
            Some(m) => Budget::new(cfg.max_iterations, m),
            None => Budget::ungated(cfg.max_iterations),
        };
        let record = RunRecord {
            method: cfg.mode,
            problem: spec.name.clone(),
            seed: cfg.seed,
            config_hash: cfg.hash(),
            backend: generator.backend_name().to_string(),
            iterations: Vec::new(),
            min_fun_val: f64::INFINITY,
            argmin: Vec::new(),
            iterations_completed: 0,
            evaluations_used: 0,
            evaluations_excluding_init: 0,
            stop_reason: StopReason::Completed,
            warnings: Vec::new(),
        };
        Ok(Self { spec, cfg, generator, budget, init_evaluations: 0, record })
    }

    fn evaluate(
        &mut self,
        xs: &[Vec<f64>],
        iteration: usize,
        source: Source,
    ) -> std::result::Result<Vec<Candidate>, StopReason> {
        if self.budget.charge(xs.len()).is_err() {
            return Err(StopReason::BudgetExhausted);
        }
        let spec = self.spec;
        let values = par::map_with(self.cfg.execution, xs, |x| spec.evaluate(x));
        let mut out = Vec::with_capacity(xs.len());
        for (x, f) in xs.iter().zip(values) {
            match f {
                Ok(f) => out.push(Candidate::new(x.clone(), f, iteration, source)),
                Err(e) => return Err(StopReason::ObjectiveFailure { message: e.to_string() }),
            }
        }
        Ok(out)
    }

    fn random_rows(&self, n: usize, label: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.cfg.seed, &[label]));
        (0..n).map(|_| self.spec.sample_uniform(&mut rng)).collect()
    }

    fn propose(
        &self,
        mode: PromptMode,
        view: &[Candidate],
        jitter: &JitterPolicy,
        rows: usize,
        iteration: usize,
        role: u64,
    ) -> Result<GenerationRequest> {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(jitter.seed, &[self.cfg.seed, iteration as u64, role]));
        let built = build_prompt(&PromptTemplate::standard(mode), view, self.spec, jitter, rows, &mut rng)?;
        Ok(GenerationRequest {
            prompt: built.text,
            mode,
            expected_rows: rows,
            expected_cols: self.spec.num_vars,
            context: built.context,
            key: request_key(iteration, role),
        })
    }

    fn observe(&mut self, candidates: &[Candidate]) {
        for c in candidates {
            if c.value() < self.record.min_fun_val {
                self.record.min_fun_val = c.value();
                self.record.argmin = c.x.clone();
            }
        }
    }

    fn push_iteration(
        &mut self,
        iteration: usize,
        best_f: f64,
        explore: Option<&Pool>,
        exploit: Option<&Pool>,
        proposed: Option<Candidate>,
    ) {
        let snap = |p: Option<&Pool>| if self.cfg.record_snapshots { p.map(|p| p.members.clone()) } else { None };
        self.record.iterations.push(IterationRecord {
            iteration,
            best_f,
            exploit_best: exploit.map_or(best_f, Pool::best_value),
            exploit_mean: exploit.map_or(best_f, Pool::mean_value),
            explore_best: explore.map_or(best_f, Pool::best_value),
            explore_mean: explore.map_or(best_f, Pool::mean_value),
            evaluations_used: self.budget.evaluations_used,
            explore_pool: snap(explore),
            exploit_pool: snap(exploit),
            proposed,
        });
    }

    fn generate_pair(
        &self,
        explore: &GenerationRequest,
        exploit: &GenerationRequest,
    ) -> std::result::Result<(Vec<Vec<f64>>, Vec<Vec<f64>>), GeneratorError> {
        let (a, b) = par::join_with(
            self.cfg.execution,
            || self.generator.generate(explore, self.spec),
            || self.generator.generate(exploit, self.spec),
        );
        Ok((a?.rows, b?.rows))
    }

    fn finish(mut self, stop: Option<StopReason>) -> RunRecord {
        if let Some(s) = stop {
            self.record.stop_reason = s;
        }
        self.record.iterations_completed = self.record.iterations.len().saturating_sub(1);
        self.record.evaluations_used = self.budget.evaluations_used;
        self.record.evaluations_excluding_init = self.budget.evaluations_used - self.init_evaluations;
        self.record.warnings.extend(self.generator.take_storage_warnings());
        self.record
    }
}

fn failure(e: GeneratorError) -> StopReason {
    match e {
        GeneratorError::BackendUnavailable { ref raw, .. } => {
            StopReason::BackendUnavailable { raw: raw.clone(), message: e.to_string() }
        }
        _ => StopReason::GeneratorFailure { raw: e.raw().map(str::to_string), message: e.to_string() },
    }
}

/// Initialize both pools, then per iteration: prompt, generate, evaluate,
/// merge, port, truncate. `min_fun_val` is the best exploit member.
pub fn run_leo(spec: &ObjectiveSpec, cfg: &LeoConfig, generator: &Generator) -> Result<RunRecord> {
    let mut run = Run::new(spec, cfg, generator)?;
    let n = cfg.pop_size;
    let init_rows = run.random_rows(n, INIT_LABEL);
    let init = match run.evaluate(&init_rows, 0, Source::Init) {
        Ok(c) => c,
        Err(stop) => return Ok(run.finish(Some(stop))),
    };
    let exploit_init = if cfg.independent_init {
        let rows = run.random_rows(n, INIT_EXPLOIT_LABEL);
        match run.evaluate(&rows, 0, Source::Init) {
            Ok(c) => c,
            Err(stop) => return Ok(run.finish(Some(stop))),
        }
    } else {
        init.clone()
    };
    run.init_evaluations = run.budget.evaluations_used;
    let mut explore = Pool::new(init, n, PoolRole::Explore)?.sorted();
    let mut exploit = Pool::new(exploit_init, n, PoolRole::Exploit)?.sorted();
    run.observe(&explore.members);
    run.observe(&exploit.members);
    run.push_iteration(0, exploit.best_value(), Some(&explore), Some(&exploit), None);

    let mut stop = None;
    for it in 1..=cfg.max_iterations {
        if !run.budget.can_afford(2 * n) {
            stop = Some(StopReason::BudgetExhausted);
            break;
        }
        let view: Vec<Candidate> = exploit.members.iter().take(cfg.exploit_context).cloned().collect();
        let req_explore =
            run.propose(PromptMode::Explore, &explore.members, &cfg.jitter_explore, n, it, ROLE_EXPLORE)?;
        let req_exploit = run.propose(PromptMode::Exploit, &view, &cfg.jitter_exploit, n, it, ROLE_EXPLOIT)?;
        let (rows_explore, rows_exploit) = match run.generate_pair(&req_explore, &req_exploit) {
            Ok(r) => r,
            Err(e) => {
                stop = Some(failure(e));
                break;
            }
        };
        let all: Vec<Vec<f64>> = rows_explore.into_iter().chain(rows_exploit).collect();
        let evaluated = match run.evaluate(&all, it, Source::Explore) {
            Ok(c) => c,
            Err(s) => {
                stop = Some(s);
                break;
            }
        };
        let (new_explore, mut new_exploit) = (evaluated[..n].to_vec(), evaluated[n..].to_vec());
        for c in &mut new_exploit {
            c.source = Source::Exploit;
        }
        let merged_explore = explore.update_population(&new_explore)?;
        let merged_exploit = exploit.update_population(&new_exploit)?;
        let ported = port_and_filter(&merged_explore, &merged_exploit, cfg.num_port(), cfg.port_rule)?;
        explore = merged_explore.sort_and_truncate()?;
        exploit = ported.sort_and_truncate()?;
        run.observe(&exploit.members);
        run.push_iteration(it, exploit.best_value(), Some(&explore), Some(&exploit), None);
    }
    let best = exploit.best().cloned();
    let mut record = run.finish(stop);
    if let Some(b) = best {
        record.min_fun_val = b.value();
        record.argmin = b.x;
    }
    Ok(record)
}

/// Context-free ablation: both pools are regenerated every iteration from
/// prompts that carry no candidates, so nothing is retained. Port-and-filter
/// still moves the best explore members into the exploit pool. The reported
/// best is the best value seen so far.
pub fn run_leo_rnd(spec: &ObjectiveSpec, cfg: &LeoConfig, generator: &Generator) -> Result<RunRecord> {
    let mut run = Run::new(spec, cfg, generator)?;
    let n = cfg.pop_size;
    let init_rows = run.random_rows(n, INIT_LABEL);
    let init = match run.evaluate(&init_rows, 0, Source::Init) {
        Ok(c) => c,
        Err(stop) => return Ok(run.finish(Some(stop))),
    };
    run.init_evaluations = run.budget.evaluations_used;
    let explore = Pool::new(init.clone(), n, PoolRole::Explore)?.sorted();
    let exploit = Pool::new(init, n, PoolRole::Exploit)?.sorted();
    run.observe(&explore.members);
    run.push_iteration(0, run.record.min_fun_val, Some(&explore), Some(&exploit), None);

    let mut stop = None;
    for it in 1..=cfg.max_iterations {
        if !run.budget.can_afford(2 * n) {
            stop = Some(StopReason::BudgetExhausted);
            break;
        }
        let req_explore = run.propose(PromptMode::RandomExplore, &[], &cfg.jitter_explore, n, it, ROLE_EXPLORE)?;
        let req_exploit = run.propose(PromptMode::RandomExploit, &[], &cfg.jitter_exploit, n, it, ROLE_EXPLOIT)?;
        let (rows_explore, rows_exploit) = match run.generate_pair(&req_explore, &req_exploit) {
            Ok(r) => r,
            Err(e) => {
                stop = Some(failure(e));
                break;
            }
        };
        let all: Vec<Vec<f64>> = rows_explore.into_iter().chain(rows_exploit).collect();
        let evaluated = match run.evaluate(&all, it, Source::Explore) {
            Ok(c) => c,
            Err(s) => {
                stop = Some(s);
                break;
            }
        };
        let explore = Pool::new(evaluated[..n].to_vec(), n, PoolRole::Explore)?;
        let mut fresh_exploit = evaluated[n..].to_vec();
        for c in &mut fresh_exploit {
            c.source = Source::Exploit;
        }
        let exploit =
            port_and_filter(&explore, &Pool::new(fresh_exploit, n, PoolRole::Exploit)?, cfg.num_port(), cfg.port_rule)?;
        run.observe(&explore.members);
        run.observe(&exploit.members);
        run.push_iteration(it, run.record.min_fun_val, Some(&explore.sorted()), Some(&exploit.sorted()), None);
    }
    Ok(run.finish(stop))
}

/// One candidate per iteration from a prompt holding the last `n_hist`
/// evaluated points in chronological order.
pub fn run_trajectory(spec: &ObjectiveSpec, cfg: &LeoConfig, generator: &Generator) -> Result<RunRecord> {
    let mut run = Run::new(spec, cfg, generator)?;
    let init_rows = run.random_rows(cfg.n_init, INIT_LABEL);
    let mut history = match run.evaluate(&init_rows, 0, Source::Init) {
        Ok(c) => c,
        Err(stop) => return Ok(run.finish(Some(stop))),
    };
    run.init_evaluations = run.budget.evaluations_used;
    run.observe(&history);
    run.push_iteration(0, run.record.min_fun_val, None, None, None);

    let mut stop = None;
    for it in 1..=cfg.max_iterations {
        if !run.budget.can_afford(1) {
            stop = Some(StopReason::BudgetExhausted);
            break;
        }
        let start = history.len().saturating_sub(cfg.n_hist);
        let req =
            run.propose(PromptMode::Trajectory, &history[start..], &cfg.jitter_exploit, 1, it, ROLE_TRAJECTORY)?;
        let rows = match generator.generate(&req, spec) {
            Ok(p) => p.rows,
            Err(e) => {
                stop = Some(failure(e));
                break;
            }
        };
        let c = match run.evaluate(&rows, it, Source::Exploit) {
            Ok(mut c) => c.remove(0),
            Err(s) => {
                stop = Some(s);
                break;
            }
        };
        run.observe(std::slice::from_ref(&c));
        history.push(c.clone());
        run.push_iteration(it, run.record.min_fun_val, None, None, Some(c));
    }
    Ok(run.finish(stop))
}
