//! Objective definitions shared by every optimizer in the crate.
//!
//! All optimizers minimize. Problems that are naturally maximized (windfarm
//! AEP) negate their value inside the objective.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// A pure, reentrant objective function. Implementations are called from
/// worker threads and must not carry interior mutability.
pub trait Objective: Send + Sync {
    fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>>;

    /// Analytic gradient of the first objective, when one is implemented.
    fn gradient(&self, _x: &[f64]) -> Option<Vec<f64>> {
        None
    }
}

impl<F> Objective for F
where
    F: Fn(&[f64]) -> Vec<f64> + Send + Sync,
{
    fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self(x))
    }
}

/// Known optimum used by test oracles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnownMinimum {
    pub value: f64,
    pub minimizers: Vec<Vec<f64>>,
}

/// Default box used for prompting and random initialization when a
/// dimension has no finite bound.
pub const UNBOUNDED_SEARCH_BOX: (f64, f64) = (-5.0, 10.0);

#[derive(Clone)]
pub struct ObjectiveSpec {
    pub name: String,
    pub num_vars: usize,
    pub num_objectives: usize,
    /// True domain; infinite entries mean the dimension is unbounded.
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub known_minimum: Option<KnownMinimum>,
    search_lower: Vec<f64>,
    search_upper: Vec<f64>,
    objective: Arc<dyn Objective>,
}

impl fmt::Debug for ObjectiveSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ObjectiveSpec")
            .field("name", &self.name)
            .field("num_vars", &self.num_vars)
            .field("num_objectives", &self.num_objectives)
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .field("known_minimum", &self.known_minimum)
            .finish_non_exhaustive()
    }
}

impl ObjectiveSpec {
    pub fn new(
        name: impl Into<String>,
        lower: Vec<f64>,
        upper: Vec<f64>,
        num_objectives: usize,
        objective: Arc<dyn Objective>,
    ) -> Result<Self> {
        let name = name.into();
        if lower.len() != upper.len() {
            return Err(CoreError::DimensionMismatch { expected: lower.len(), got: upper.len() });
        }
        if lower.is_empty() || num_objectives == 0 {
            return Err(CoreError::Parameter(format!("`{name}` needs at least one variable and one objective")));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if lo.is_nan() || hi.is_nan() || lo >= hi {
                return Err(CoreError::Parameter(format!("`{name}` bound {i}: [{lo}, {hi}] is empty")));
            }
        }
        let search_lower = lower.iter().map(|&lo| if lo.is_finite() { lo } else { UNBOUNDED_SEARCH_BOX.0 }).collect();
        let search_upper = upper.iter().map(|&hi| if hi.is_finite() { hi } else { UNBOUNDED_SEARCH_BOX.1 }).collect();
        Ok(Self {
            name,
            num_vars: lower.len(),
            num_objectives,
            lower,
            upper,
            known_minimum: None,
            search_lower,
            search_upper,
            objective,
        })
    }

    pub fn with_known_minimum(mut self, known: KnownMinimum) -> Result<Self> {
        for m in &known.minimizers {
            self.check_len(m)?;
            if m.iter().zip(self.lower.iter().zip(&self.upper)).any(|(v, (lo, hi))| v < lo || v > hi) {
                return Err(CoreError::Parameter(format!("`{}` minimizer {m:?} lies outside the domain", self.name)));
            }
        }
        self.known_minimum = Some(known);
        Ok(self)
    }

    /// Override the finite box used for prompts and initialization.
    pub fn with_search_box(mut self, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        self.check_len(&lower)?;
        self.check_len(&upper)?;
        if lower.iter().zip(&upper).any(|(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo < hi)) {
            return Err(CoreError::Parameter("search box must be finite and non-empty".into()));
        }
        self.search_lower = lower;
        self.search_upper = upper;
        Ok(self)
    }

    pub fn search_lower(&self) -> &[f64] {
        &self.search_lower
    }

    pub fn search_upper(&self) -> &[f64] {
        &self.search_upper
    }

    pub fn search_range(&self, i: usize) -> f64 {
        self.search_upper[i] - self.search_lower[i]
    }

    pub fn is_bounded(&self) -> bool {
        self.lower.iter().chain(&self.upper).all(|b| b.is_finite())
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.num_vars {
            return Err(CoreError::DimensionMismatch { expected: self.num_vars, got: x.len() });
        }
        Ok(())
    }

    /// Evaluate and reject non-finite results.
    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x)?;
        let f = self.objective.evaluate(x)?;
        if f.len() != self.num_objectives {
            return Err(CoreError::DimensionMismatch { expected: self.num_objectives, got: f.len() });
        }
        if f.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::NonFinite { name: self.name.clone(), x: x.to_vec() });
        }
        Ok(f)
    }

    pub fn evaluate_scalar(&self, x: &[f64]) -> Result<f64> {
        self.evaluate(x).map(|f| f[0])
    }

    pub fn analytic_gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.objective.gradient(x)
    }

    /// Central finite differences with step `1e-6 * (1 + |x_i|)`.
    /// Costs `2 * num_vars` evaluations.
    pub fn fd_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x)?;
        let mut probe = x.to_vec();
        let mut grad = Vec::with_capacity(x.len());
        for i in 0..x.len() {
            let h = 1e-6 * (1.0 + x[i].abs());
            probe[i] = x[i] + h;
            let fp = self.evaluate_scalar(&probe)?;
            probe[i] = x[i] - h;
            let fm = self.evaluate_scalar(&probe)?;
            probe[i] = x[i];
            grad.push((fp - fm) / (2.0 * h));
        }
        Ok(grad)
    }

    /// Project `x` onto the box bounds. Unbounded dimensions pass through.
    pub fn clamp(&self, x: &[f64]) -> Vec<f64> {
        clamp_to_bounds(x, &self.lower, &self.upper)
    }

    /// Uniform sample inside the search box.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.search_lower.iter().zip(&self.search_upper).map(|(&lo, &hi)| rng.random_range(lo..hi)).collect()
    }
}

pub fn clamp_to_bounds(x: &[f64], lower: &[f64], upper: &[f64]) -> Vec<f64> {
    x.iter().zip(lower.iter().zip(upper)).map(|(&v, (&lo, &hi))| v.max(lo).min(hi)).collect()
}

/// Evaluation counter with an optional hard cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub max_iterations: usize,
    pub max_evaluations: usize,
    pub evaluations_used: usize,
    pub gate_enabled: bool,
}

impl Budget {
    pub fn new(max_iterations: usize, max_evaluations: usize) -> Self {
        Self { max_iterations, max_evaluations, evaluations_used: 0, gate_enabled: true }
    }

    pub fn ungated(max_iterations: usize) -> Self {
        Self { max_iterations, max_evaluations: usize::MAX, evaluations_used: 0, gate_enabled: false }
    }

    pub fn remaining(&self) -> usize {
        if self.gate_enabled {
            self.max_evaluations.saturating_sub(self.evaluations_used)
        } else {
            usize::MAX
        }
    }

    pub fn can_afford(&self, n: usize) -> bool {
        n <= self.remaining()
    }

    pub fn charge(&mut self, n: usize) -> Result<()> {
        if !self.can_afford(n) {
            return Err(CoreError::BudgetExhausted {
                used: self.evaluations_used,
                max: self.max_evaluations,
                requested: n,
            });
        }
        self.evaluations_used += n;
        Ok(())
    }
}
