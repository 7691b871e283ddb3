//! NSGA-II with a pluggable offspring operator: simulated binary crossover
//! with polynomial mutation, or pairs proposed by a text generator.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::generator::{derive_seed, GenerationRequest, Generator, GeneratorError};
use crate::objective::ObjectiveSpec;
use crate::par::{self, Execution};
use crate::pool::{Candidate, Source};
use crate::prompting::{build_prompt, JitterPolicy, PromptMode, PromptTemplate};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MooIndividual {
    pub x: Vec<f64>,
    pub f: Vec<f64>,
    pub rank: usize,
    /// Infinite at the extremes of a front.
    pub crowding: f64,
}

impl MooIndividual {
    fn new(x: Vec<f64>, f: Vec<f64>) -> Self {
        Self { x, f, rank: usize::MAX, crowding: 0.0 }
    }

    fn as_candidate(&self) -> Candidate {
        Candidate::new(self.x.clone(), self.f.clone(), 0, Source::Init)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OffspringOperator {
    #[default]
    SbxPoly,
    LlmPair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MooConfig {
    pub pop_size: usize,
    pub generations: usize,
    pub operator: OffspringOperator,
    pub eta_c: f64,
    pub eta_m: f64,
    pub p_c: f64,
    /// `None` uses 1 / num_vars.
    pub p_m: Option<f64>,
    pub seed: u64,
    pub execution: Execution,
    /// Jitter applied to parent values shown in generator prompts.
    pub jitter: JitterPolicy,
}

impl Default for MooConfig {
    fn default() -> Self {
        Self {
            pop_size: 10,
            generations: 40,
            operator: OffspringOperator::SbxPoly,
            eta_c: 15.0,
            eta_m: 20.0,
            p_c: 0.9,
            p_m: None,
            seed: 0,
            execution: Execution::Parallel,
            jitter: JitterPolicy::none(),
        }
    }
}

impl MooConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pop_size < 2 || !self.pop_size.is_multiple_of(2) {
            return Err(CoreError::Parameter(format!("pop_size must be even and >= 2, got {}", self.pop_size)));
        }
        if self.generations == 0 {
            return Err(CoreError::Parameter("generations must be >= 1".into()));
        }
        if !(self.eta_c >= 0.0 && self.eta_m >= 0.0 && (0.0..=1.0).contains(&self.p_c)) {
            return Err(CoreError::Parameter("invalid SBX / mutation parameters".into()));
        }
        if let Some(p) = self.p_m {
            if !(0.0..=1.0).contains(&p) {
                return Err(CoreError::Parameter(format!("p_m must lie in [0, 1], got {p}")));
            }
        }
        self.jitter.validate()
    }
}

/// `a` is no worse everywhere and strictly better somewhere.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly = true;
        }
    }
    strictly
}

/// Fronts as index lists, best first.
pub fn fast_nondominated_sort(fs: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let n = fs.len();
    let mut dominated_by: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut counts = vec![0usize; n];
    let mut fronts = vec![Vec::new()];
    for p in 0..n {
        for q in 0..n {
            if dominates(&fs[p], &fs[q]) {
                dominated_by[p].push(q);
            } else if dominates(&fs[q], &fs[p]) {
                counts[p] += 1;
            }
        }
        if counts[p] == 0 {
            fronts[0].push(p);
        }
    }
    let mut k = 0;
    while !fronts[k].is_empty() {
        let mut next = Vec::new();
        for &p in &fronts[k] {
            for &q in &dominated_by[p] {
                counts[q] -= 1;
                if counts[q] == 0 {
                    next.push(q);
                }
            }
        }
        next.sort_unstable();
        fronts.push(next);
        k += 1;
    }
    fronts.pop();
    fronts
}

/// Crowding distance of each member of `front`, in the order given.
pub fn crowding_distance(fs: &[Vec<f64>], front: &[usize]) -> Vec<f64> {
    let n = front.len();
    let mut dist = vec![0.0; n];
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let m = fs[front[0]].len();
    for obj in 0..m {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| fs[front[a]][obj].total_cmp(&fs[front[b]][obj]));
        let lo = fs[front[order[0]]][obj];
        let hi = fs[front[order[n - 1]]][obj];
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        let range = hi - lo;
        if range <= 0.0 {
            continue;
        }
        for k in 1..n - 1 {
            let gap = fs[front[order[k + 1]]][obj] - fs[front[order[k - 1]]][obj];
            dist[order[k]] += gap / range;
        }
    }
    dist
}

/// Assign rank and crowding in place; returns the fronts.
pub fn assign_rank_and_crowding(pop: &mut [MooIndividual]) -> Vec<Vec<usize>> {
    let fs: Vec<Vec<f64>> = pop.iter().map(|p| p.f.clone()).collect();
    let fronts = fast_nondominated_sort(&fs);
    for (r, front) in fronts.iter().enumerate() {
        let d = crowding_distance(&fs, front);
        for (k, &i) in front.iter().enumerate() {
            pop[i].rank = r;
            pop[i].crowding = d[k];
        }
    }
    fronts
}

/// Crowded-comparison: lower rank, then larger crowding.
fn crowded_better(a: &MooIndividual, b: &MooIndividual) -> bool {
    a.rank < b.rank || (a.rank == b.rank && a.crowding > b.crowding)
}

pub fn binary_tournament<R: Rng + ?Sized>(pop: &[MooIndividual], rng: &mut R) -> usize {
    let a = rng.random_range(0..pop.len());
    let b = rng.random_range(0..pop.len());
    if crowded_better(&pop[b], &pop[a]) {
        b
    } else {
        a
    }
}

/// Bounded simulated binary crossover (Deb and Agrawal).
pub fn sbx_pair<R: Rng + ?Sized>(
    p1: &[f64],
    p2: &[f64],
    lower: &[f64],
    upper: &[f64],
    eta_c: f64,
    p_c: f64,
    rng: &mut R,
) -> (Vec<f64>, Vec<f64>) {
    let mut c1 = p1.to_vec();
    let mut c2 = p2.to_vec();
    if rng.random::<f64>() > p_c {
        return (c1, c2);
    }
    for i in 0..p1.len() {
        if rng.random::<f64>() > 0.5 || (p1[i] - p2[i]).abs() <= 1e-14 {
            continue;
        }
        let (y1, y2) = if p1[i] < p2[i] { (p1[i], p2[i]) } else { (p2[i], p1[i]) };
        let (lo, hi) = (lower[i], upper[i]);
        let u: f64 = rng.random();
        let spread = |beta: f64| -> f64 {
            let alpha = 2.0 - beta.powf(-(eta_c + 1.0));
            if u <= 1.0 / alpha {
                (u * alpha).powf(1.0 / (eta_c + 1.0))
            } else {
                (1.0 / (2.0 - u * alpha)).powf(1.0 / (eta_c + 1.0))
            }
        };
        let beta_lo = 1.0 + 2.0 * (y1 - lo) / (y2 - y1);
        let beta_hi = 1.0 + 2.0 * (hi - y2) / (y2 - y1);
        let a = (0.5 * ((y1 + y2) - spread(beta_lo) * (y2 - y1))).clamp(lo, hi);
        let b = (0.5 * ((y1 + y2) + spread(beta_hi) * (y2 - y1))).clamp(lo, hi);
        if rng.random::<f64>() < 0.5 {
            c1[i] = b;
            c2[i] = a;
        } else {
            c1[i] = a;
            c2[i] = b;
        }
    }
    (c1, c2)
}

/// Bounded polynomial mutation.
pub fn polynomial_mutation<R: Rng + ?Sized>(
    x: &mut [f64],
    lower: &[f64],
    upper: &[f64],
    eta_m: f64,
    p_m: f64,
    rng: &mut R,
) {
    for i in 0..x.len() {
        if rng.random::<f64>() >= p_m {
            continue;
        }
        let (lo, hi) = (lower[i], upper[i]);
        let range = hi - lo;
        if range <= 0.0 {
            continue;
        }
        let d1 = (x[i] - lo) / range;
        let d2 = (hi - x[i]) / range;
        let u: f64 = rng.random();
        let pow = 1.0 / (eta_m + 1.0);
        let dq = if u < 0.5 {
            let v = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - d1).powf(eta_m + 1.0);
            v.powf(pow) - 1.0
        } else {
            let v = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d2).powf(eta_m + 1.0);
            1.0 - v.powf(pow)
        };
        x[i] = (x[i] + dq * range).clamp(lo, hi);
    }
}

/// Source of two children for a selected parent pair. `None` asks the loop
/// to fall back to the classical operator.
pub trait OffspringSource: Sync {
    fn pair(
        &self,
        generation: usize,
        index: usize,
        parents: (&MooIndividual, &MooIndividual),
        rng: &mut ChaCha8Rng,
    ) -> Option<(Vec<f64>, Vec<f64>)>;
}

/// Classical SBX followed by polynomial mutation.
pub struct SbxPoly<'a> {
    pub spec: &'a ObjectiveSpec,
    pub cfg: &'a MooConfig,
}

impl SbxPoly<'_> {
    pub fn children(&self, parents: (&MooIndividual, &MooIndividual), rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
        let lo = self.spec.search_lower();
        let hi = self.spec.search_upper();
        let (mut a, mut b) = sbx_pair(&parents.0.x, &parents.1.x, lo, hi, self.cfg.eta_c, self.cfg.p_c, rng);
        let p_m = self.cfg.p_m.unwrap_or(1.0 / self.spec.num_vars as f64);
        polynomial_mutation(&mut a, lo, hi, self.cfg.eta_m, p_m, rng);
        polynomial_mutation(&mut b, lo, hi, self.cfg.eta_m, p_m, rng);
        (a, b)
    }
}

impl OffspringSource for SbxPoly<'_> {
    fn pair(
        &self,
        _generation: usize,
        _index: usize,
        parents: (&MooIndividual, &MooIndividual),
        rng: &mut ChaCha8Rng,
    ) -> Option<(Vec<f64>, Vec<f64>)> {
        Some(self.children(parents, rng))
    }
}

/// Generation key of pair `index` in `generation`.
pub fn pair_key(generation: usize, index: usize) -> u64 {
    ((generation as u64) << 24) | index as u64
}

/// Ask the generator for two children of `parents`.
pub fn generate_offspring_llm(
    parents: (&MooIndividual, &MooIndividual),
    spec: &ObjectiveSpec,
    mode: PromptMode,
    generator: &Generator,
    jitter: &JitterPolicy,
    key: u64,
    rng: &mut ChaCha8Rng,
) -> std::result::Result<(Vec<f64>, Vec<f64>), GeneratorError> {
    if !matches!(mode, PromptMode::NsgaExplore | PromptMode::NsgaExploit) {
        return Err(GeneratorError::InvalidRequest(format!("{mode} is not a pair prompt")));
    }
    let view = [parents.0.as_candidate(), parents.1.as_candidate()];
    let built = build_prompt(&PromptTemplate::standard(mode), &view, spec, jitter, 2, rng)
        .map_err(|e| GeneratorError::InvalidRequest(e.to_string()))?;
    let req = GenerationRequest {
        prompt: built.text,
        mode,
        expected_rows: 2,
        expected_cols: spec.num_vars,
        context: built.context,
        key,
    };
    let mut rows = generator.generate(&req, spec)?.rows;
    let b = rows.pop().expect("two rows");
    let a = rows.pop().expect("two rows");
    Ok((a, b))
}

/// Generator-backed pairs; even pair indices use the explore prompt, odd the
/// exploit prompt.
pub struct LlmPair<'a> {
    pub spec: &'a ObjectiveSpec,
    pub generator: &'a Generator,
    pub jitter: JitterPolicy,
}

impl OffspringSource for LlmPair<'_> {
    fn pair(
        &self,
        generation: usize,
        index: usize,
        parents: (&MooIndividual, &MooIndividual),
        rng: &mut ChaCha8Rng,
    ) -> Option<(Vec<f64>, Vec<f64>)> {
        let mode = if index.is_multiple_of(2) { PromptMode::NsgaExplore } else { PromptMode::NsgaExploit };
        generate_offspring_llm(parents, self.spec, mode, self.generator, &self.jitter, pair_key(generation, index), rng)
            .ok()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub hypervolume: f64,
    pub front_size: usize,
    pub fallbacks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MooResult {
    pub population: Vec<MooIndividual>,
    /// Rank-0 members of the final population, sorted by f1.
    pub front: Vec<MooIndividual>,
    pub history: Vec<GenerationStats>,
    pub evaluations: usize,
    /// Pairs that fell back to the classical operator.
    pub fallbacks: usize,
}

impl MooResult {
    pub fn front_points(&self) -> Vec<[f64; 2]> {
        self.front.iter().map(|m| [m.f[0], m.f[1]]).collect()
    }

    /// `x..., f1, f2, rank, crowding` per front member.
    pub fn front_csv(&self, full_precision: bool) -> String {
        let nx = self.front.first().map_or(0, |m| m.x.len());
        let mut out = String::new();
        let header: Vec<String> = (1..=nx).map(|i| format!("x{i}")).collect();
        let _ = writeln!(out, "{},f1,f2,rank,crowding", header.join(","));
        for m in &self.front {
            let vals: Vec<String> = m.x.iter().chain(&m.f).map(|v| crate::fmt_float(*v, full_precision)).collect();
            let crowd =
                if m.crowding.is_finite() { crate::fmt_float(m.crowding, full_precision) } else { "inf".into() };
            let _ = writeln!(out, "{},{},{}", vals.join(","), m.rank, crowd);
        }
        out
    }
}

/// Dominated area up to `reference` for a two-objective point set.
pub fn hypervolume_2d(points: &[[f64; 2]], reference: [f64; 2]) -> f64 {
    let mut pts: Vec<[f64; 2]> =
        points.iter().copied().filter(|p| p[0] < reference[0] && p[1] < reference[1]).collect();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut hv = 0.0;
    let mut ceiling = reference[1];
    for p in pts {
        if p[1] < ceiling {
            hv += (reference[0] - p[0]) * (ceiling - p[1]);
            ceiling = p[1];
        }
    }
    hv
}

pub const HYPERVOLUME_REFERENCE: [f64; 2] = [1.1, 1.1];

fn evaluate_all(spec: &ObjectiveSpec, xs: Vec<Vec<f64>>, exec: Execution) -> Result<Vec<MooIndividual>> {
    let fs = par::map_with(exec, &xs, |x| spec.evaluate(x));
    xs.into_iter().zip(fs).map(|(x, f)| Ok(MooIndividual::new(x, f?))).collect()
}

/// Keep `n` members of `merged`: whole fronts first, the split front by
/// descending crowding.
pub fn environmental_selection(mut merged: Vec<MooIndividual>, n: usize) -> Vec<MooIndividual> {
    let fronts = assign_rank_and_crowding(&mut merged);
    let mut keep: Vec<usize> = Vec::with_capacity(n);
    for front in fronts {
        if keep.len() + front.len() <= n {
            keep.extend(front);
        } else {
            let mut rest = front;
            rest.sort_by(|&a, &b| merged[b].crowding.total_cmp(&merged[a].crowding).then(a.cmp(&b)));
            keep.extend(rest.into_iter().take(n - keep.len()));
        }
        if keep.len() == n {
            break;
        }
    }
    let mut out: Vec<MooIndividual> = keep.into_iter().map(|i| merged[i].clone()).collect();
    assign_rank_and_crowding(&mut out);
    out
}

/// Run NSGA-II with the operator selected by `cfg`. `generator` is required
/// for the generator-backed operator.
pub fn run_nsga2(spec: &ObjectiveSpec, cfg: &MooConfig, generator: Option<&Generator>) -> Result<MooResult> {
    match cfg.operator {
        OffspringOperator::SbxPoly => run_nsga2_with(spec, cfg, &SbxPoly { spec, cfg }),
        OffspringOperator::LlmPair => {
            let generator = generator.ok_or_else(|| CoreError::Parameter("llm_pair needs a generator".into()))?;
            run_nsga2_with(spec, cfg, &LlmPair { spec, generator, jitter: cfg.jitter })
        }
    }
}

/// NSGA-II loop around an arbitrary offspring source.
pub fn run_nsga2_with(spec: &ObjectiveSpec, cfg: &MooConfig, source: &dyn OffspringSource) -> Result<MooResult> {
    cfg.validate()?;
    if spec.num_objectives != 2 {
        return Err(CoreError::Parameter(format!("`{}` must have two objectives", spec.name)));
    }
    let n = cfg.pop_size;
    let fallback = SbxPoly { spec, cfg };
    let mut init_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[0x1A17]));
    let xs: Vec<Vec<f64>> = (0..n).map(|_| spec.sample_uniform(&mut init_rng)).collect();
    let mut pop = evaluate_all(spec, xs, cfg.execution)?;
    assign_rank_and_crowding(&mut pop);
    let mut evaluations = n;
    let mut fallbacks = 0;
    let mut history = vec![stats_of(&pop, 0, 0)];

    for gen in 1..=cfg.generations {
        let mut sel_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[gen as u64, 0x5E1]));
        let pairs: Vec<(usize, usize, usize)> = (0..n / 2)
            .map(|k| (k, binary_tournament(&pop, &mut sel_rng), binary_tournament(&pop, &mut sel_rng)))
            .collect();
        let produced = par::map_with(cfg.execution, &pairs, |&(k, a, b)| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[gen as u64, k as u64]));
            match source.pair(gen, k, (&pop[a], &pop[b]), &mut rng) {
                Some(children) => (children, false),
                None => (fallback.children((&pop[a], &pop[b]), &mut rng), true),
            }
        });
        let mut children = Vec::with_capacity(n);
        let mut gen_fallbacks = 0;
        for ((a, b), fell_back) in produced {
            children.push(spec.clamp(&a));
            children.push(spec.clamp(&b));
            gen_fallbacks += fell_back as usize;
        }
        fallbacks += gen_fallbacks;
        evaluations += children.len();
        let offspring = evaluate_all(spec, children, cfg.execution)?;
        let mut merged = pop;
        merged.extend(offspring);
        pop = environmental_selection(merged, n);
        history.push(stats_of(&pop, gen, gen_fallbacks));
    }
    let mut front: Vec<MooIndividual> = pop.iter().filter(|m| m.rank == 0).cloned().collect();
    front.sort_by(|a, b| a.f[0].total_cmp(&b.f[0]));
    Ok(MooResult { population: pop, front, history, evaluations, fallbacks })
}

fn stats_of(pop: &[MooIndividual], generation: usize, fallbacks: usize) -> GenerationStats {
    let front: Vec<[f64; 2]> = pop.iter().filter(|m| m.rank == 0).map(|m| [m.f[0], m.f[1]]).collect();
    GenerationStats {
        generation,
        hypervolume: hypervolume_2d(&front, HYPERVOLUME_REFERENCE),
        front_size: front.len(),
        fallbacks,
    }
}
