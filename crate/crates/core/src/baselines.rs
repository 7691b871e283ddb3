//! Comparison optimizers: SGD, SGD with momentum, Adam and simulated
//! annealing, plus the table runner that sets them against LEO.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::benchmarks::BenchmarkId;
use crate::engine::{self, LeoConfig};
use crate::error::{CoreError, Result};
use crate::generator::{derive_seed, GeneratorConfig};
use crate::objective::{Budget, ObjectiveSpec};
use crate::par::{self, Execution};
use crate::stats::median;

/// Iterates beyond this magnitude count as divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineMethod {
    Sgd,
    SgdMomentum,
    Adam,
    SimAnneal,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientSource {
    /// Analytic when the objective provides one, finite differences otherwise.
    #[default]
    Auto,
    FiniteDifference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineConfig {
    pub method: BaselineMethod,
    /// `None` picks 0.01 for SGD variants and 0.05 for Adam.
    pub learning_rate: Option<f64>,
    pub momentum: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub t0: f64,
    pub decay: f64,
    /// Proposal std as a fraction of each dimension's search range.
    pub proposal_sigma: f64,
    pub gradient: GradientSource,
    pub seed: u64,
    pub max_evaluations: usize,
    /// Starting point; uniform in the search box when absent.
    pub x0: Option<Vec<f64>>,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            method: BaselineMethod::Sgd,
            learning_rate: None,
            momentum: 0.9,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            t0: 1.0,
            decay: 0.995,
            proposal_sigma: 0.05,
            gradient: GradientSource::Auto,
            seed: 0,
            max_evaluations: 1000,
            x0: None,
        }
    }
}

impl BaselineConfig {
    pub fn new(method: BaselineMethod) -> Self {
        Self { method, ..Self::default() }
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate.unwrap_or(match self.method {
            BaselineMethod::Adam => 0.05,
            _ => 0.01,
        })
    }

    pub fn label(&self) -> String {
        match self.method {
            BaselineMethod::Sgd => "sgd".into(),
            BaselineMethod::SgdMomentum => format!("sgd_momentum(nu={})", self.momentum),
            BaselineMethod::Adam => format!("adam(beta1={})", self.beta1),
            BaselineMethod::SimAnneal => format!("sim_anneal(T={})", self.t0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CoreError::Parameter(m));
        let lr = self.learning_rate();
        if !(lr > 0.0 && lr.is_finite()) {
            return bad(format!("learning_rate must be positive, got {lr}"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum must lie in [0, 1), got {}", self.momentum));
        }
        if self.method == BaselineMethod::Adam
            && !(self.beta1 >= 0.0 && self.beta1 < 1.0 && self.beta2 > 0.0 && self.beta2 < 1.0)
        {
            return bad(format!("betas must lie in [0, 1), got {} and {}", self.beta1, self.beta2));
        }
        if !(self.t0 > 0.0) || !(self.decay > 0.0 && self.decay <= 1.0) || !(self.proposal_sigma > 0.0) {
            return bad("annealing needs T0 > 0, decay in (0, 1] and a positive proposal sigma".into());
        }
        if self.max_evaluations == 0 {
            return bad("max_evaluations must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineRecord {
    pub method: String,
    pub problem: String,
    pub seed: u64,
    pub best_f: f64,
    pub best_x: Vec<f64>,
    pub evaluations_used: usize,
    pub steps: usize,
    pub diverged: bool,
    /// Best-so-far after each step.
    pub best_series: Vec<f64>,
    /// Iterates x_0, x_1, ... (gradient methods) or accepted states (annealing).
    pub iterates: Vec<Vec<f64>>,
}

fn start_point(spec: &ObjectiveSpec, cfg: &BaselineConfig) -> Result<Vec<f64>> {
    match &cfg.x0 {
        Some(x) if x.len() == spec.num_vars => Ok(spec.clamp(x)),
        Some(x) => Err(CoreError::DimensionMismatch { expected: spec.num_vars, got: x.len() }),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[0xB0]));
            Ok(spec.sample_uniform(&mut rng))
        }
    }
}

fn diverged(x: &[f64]) -> bool {
    x.iter().any(|v| !v.is_finite() || v.abs() > DIVERGENCE_LIMIT)
}

/// Gradient descent variants with projection onto the box. Each step charges
/// one evaluation for f(x) plus `2 n` when the gradient is finite-differenced.
pub fn run_gradient_baseline(spec: &ObjectiveSpec, cfg: &BaselineConfig) -> Result<BaselineRecord> {
    cfg.validate()?;
    if cfg.method == BaselineMethod::SimAnneal {
        return Err(CoreError::Parameter("use run_simulated_annealing for sim_anneal".into()));
    }
    let n = spec.num_vars;
    let analytic = cfg.gradient == GradientSource::Auto && spec.analytic_gradient(&vec![0.0; n]).is_some();
    let step_cost = if analytic { 1 } else { 1 + 2 * n };
    let mut budget = Budget::new(usize::MAX, cfg.max_evaluations);
    let lr = cfg.learning_rate();
    let mut x = start_point(spec, cfg)?;
    let mut velocity = vec![0.0; n];
    let mut m = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut rec = BaselineRecord {
        method: cfg.label(),
        problem: spec.name.clone(),
        seed: cfg.seed,
        best_f: f64::INFINITY,
        best_x: x.clone(),
        evaluations_used: 0,
        steps: 0,
        diverged: false,
        best_series: Vec::new(),
        iterates: vec![x.clone()],
    };
    while budget.can_afford(step_cost) {
        budget.charge(1)?;
        let f = match spec.evaluate_scalar(&x) {
            Ok(f) => f,
            Err(_) => {
                rec.diverged = true;
                break;
            }
        };
        if f < rec.best_f {
            rec.best_f = f;
            rec.best_x = x.clone();
        }
        rec.best_series.push(rec.best_f);
        let g = if analytic {
            spec.analytic_gradient(&x).expect("checked above")
        } else {
            budget.charge(2 * n)?;
            match spec.fd_gradient(&x) {
                Ok(g) => g,
                Err(_) => {
                    rec.diverged = true;
                    break;
                }
            }
        };
        rec.steps += 1;
        let t = rec.steps as f64;
        for i in 0..n {
            match cfg.method {
                BaselineMethod::Sgd => x[i] -= lr * g[i],
                BaselineMethod::SgdMomentum => {
                    velocity[i] = cfg.momentum * velocity[i] - lr * g[i];
                    x[i] += velocity[i];
                }
                BaselineMethod::Adam => {
                    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
                    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
                    let mh = m[i] / (1.0 - cfg.beta1.powf(t));
                    let vh = v[i] / (1.0 - cfg.beta2.powf(t));
                    x[i] -= lr * mh / (vh.sqrt() + cfg.epsilon);
                }
                BaselineMethod::SimAnneal => unreachable!(),
            }
        }
        x = spec.clamp(&x);
        rec.iterates.push(x.clone());
        if diverged(&x) {
            rec.diverged = true;
            break;
        }
    }
    rec.evaluations_used = budget.evaluations_used;
    Ok(rec)
}

/// Metropolis acceptance probability `min(1, exp(-delta / t))`.
pub fn metropolis_probability(delta: f64, temperature: f64) -> f64 {
    if delta <= 0.0 {
        1.0
    } else {
        (-delta / temperature).exp()
    }
}

pub fn metropolis_accept(delta: f64, temperature: f64, u: f64) -> bool {
    delta < 0.0 || u < metropolis_probability(delta, temperature)
}

/// Gaussian-proposal annealing with `T_k = T0 * decay^k`; one evaluation per
/// proposal.
pub fn run_simulated_annealing(spec: &ObjectiveSpec, cfg: &BaselineConfig) -> Result<BaselineRecord> {
    cfg.validate()?;
    let n = spec.num_vars;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[0x5A]));
    let mut budget = Budget::new(usize::MAX, cfg.max_evaluations);
    let mut x = start_point(spec, cfg)?;
    budget.charge(1)?;
    let mut fx = spec.evaluate_scalar(&x)?;
    let sigmas: Vec<Normal<f64>> =
        (0..n).map(|i| Normal::new(0.0, cfg.proposal_sigma * spec.search_range(i)).expect("positive std")).collect();
    let mut rec = BaselineRecord {
        method: cfg.label(),
        problem: spec.name.clone(),
        seed: cfg.seed,
        best_f: fx,
        best_x: x.clone(),
        evaluations_used: 0,
        steps: 0,
        diverged: false,
        best_series: vec![fx],
        iterates: vec![x.clone()],
    };
    let mut temperature = cfg.t0;
    while budget.can_afford(1) {
        let proposal: Vec<f64> = x.iter().zip(&sigmas).map(|(xi, d)| xi + d.sample(&mut rng)).collect();
        let y = spec.clamp(&proposal);
        budget.charge(1)?;
        rec.steps += 1;
        let u: f64 = rng.random();
        if let Ok(fy) = spec.evaluate_scalar(&y) {
            if metropolis_accept(fy - fx, temperature, u) {
                x = y;
                fx = fy;
                rec.iterates.push(x.clone());
                if fx < rec.best_f {
                    rec.best_f = fx;
                    rec.best_x = x.clone();
                }
            }
        }
        rec.best_series.push(rec.best_f);
        temperature *= cfg.decay;
    }
    rec.evaluations_used = budget.evaluations_used;
    Ok(rec)
}

pub fn run_baseline(spec: &ObjectiveSpec, cfg: &BaselineConfig) -> Result<BaselineRecord> {
    match cfg.method {
        BaselineMethod::SimAnneal => run_simulated_annealing(spec, cfg),
        _ => run_gradient_baseline(spec, cfg),
    }
}

/// A column of the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TableMethod {
    Baseline(BaselineConfig),
    Leo { label: String, leo: LeoConfig, generator: GeneratorConfig },
}

impl TableMethod {
    pub fn label(&self) -> String {
        match self {
            TableMethod::Baseline(b) => b.label(),
            TableMethod::Leo { label, .. } => label.clone(),
        }
    }

    fn best_f(&self, spec: &ObjectiveSpec, seed: u64) -> std::result::Result<f64, String> {
        match self {
            TableMethod::Baseline(b) => {
                let cfg = BaselineConfig { seed, ..b.clone() };
                run_baseline(spec, &cfg).map(|r| r.best_f).map_err(|e| e.to_string())
            }
            TableMethod::Leo { leo, generator, .. } => {
                let cfg = LeoConfig { seed, ..leo.clone() };
                let mut gcfg = generator.clone();
                gcfg.mock.seed = seed;
                let rec = engine::run(spec, &cfg, &gcfg).map_err(|e| e.to_string())?;
                if rec.is_complete() {
                    Ok(rec.min_fun_val)
                } else {
                    Err(format!("{:?}", rec.stop_reason))
                }
            }
        }
    }
}

/// The default column set: SGD, momentum 0.5/0.9, Adam beta1 0.1/0.5/0.9 and
/// annealing at T0 0.1/1/10.
pub fn default_table_methods(budget: usize) -> Vec<TableMethod> {
    let b = |cfg: BaselineConfig| TableMethod::Baseline(BaselineConfig { max_evaluations: budget, ..cfg });
    let mut out = vec![b(BaselineConfig::new(BaselineMethod::Sgd))];
    for nu in [0.5, 0.9] {
        out.push(b(BaselineConfig { momentum: nu, ..BaselineConfig::new(BaselineMethod::SgdMomentum) }));
    }
    for beta1 in [0.1, 0.5, 0.9] {
        out.push(b(BaselineConfig { beta1, ..BaselineConfig::new(BaselineMethod::Adam) }));
    }
    for t0 in [0.1, 1.0, 10.0] {
        out.push(b(BaselineConfig { t0, ..BaselineConfig::new(BaselineMethod::SimAnneal) }));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub functions: Vec<String>,
    pub methods: Vec<String>,
    /// `cells[function][method]`: median best value, NaN when a run failed.
    pub cells: Vec<Vec<f64>>,
    pub failures: Vec<String>,
}

impl ComparisonTable {
    pub fn to_csv(&self, full_precision: bool) -> String {
        let mut out = String::from("function");
        for m in &self.methods {
            out.push(',');
            out.push_str(m);
        }
        out.push('\n');
        for (f, row) in self.functions.iter().zip(&self.cells) {
            out.push_str(f);
            for v in row {
                let _ = write!(out, ",{}", crate::fmt_float(*v, full_precision));
            }
            out.push('\n');
        }
        out
    }
}

/// Median best value over `seeds` for every (function, method) pair. A
/// failing run turns its cell into NaN and is listed in `failures`.
pub fn run_comparison_table(
    functions: &[BenchmarkId],
    methods: &[TableMethod],
    seeds: usize,
    execution: Execution,
) -> Result<ComparisonTable> {
    let mut table = ComparisonTable {
        functions: functions.iter().map(|f| f.to_string()).collect(),
        methods: methods.iter().map(TableMethod::label).collect(),
        cells: Vec::new(),
        failures: Vec::new(),
    };
    for id in functions {
        let spec = id.objective_spec()?;
        let mut row = Vec::with_capacity(methods.len());
        for m in methods {
            let seed_list: Vec<u64> = (0..seeds as u64).collect();
            let results = par::map_with(execution, &seed_list, |&s| m.best_f(&spec, s));
            let mut values = Vec::with_capacity(seeds);
            let mut failed = false;
            for (s, r) in seed_list.iter().zip(results) {
                match r {
                    Ok(v) => values.push(v),
                    Err(e) => {
                        failed = true;
                        table.failures.push(format!("{id} / {} / seed {s}: {e}", m.label()));
                    }
                }
            }
            row.push(if failed || values.is_empty() { f64::NAN } else { median(&values) });
        }
        table.cells.push(row);
    }
    Ok(table)
}
