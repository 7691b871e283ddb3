//! Candidates, pools and the pool algebra composed by the optimizer loop:
//! merge, sort-and-truncate, and port-and-filter.
//!
//! Every operation is pure: it takes pools by reference and returns a new one.

use std::cmp::Ordering;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Init,
    Explore,
    Exploit,
    Baseline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolRole {
    Explore,
    Exploit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub x: Vec<f64>,
    /// Objective values; empty until evaluated.
    pub f: Vec<f64>,
    pub iteration_born: usize,
    pub source: Source,
}

impl Candidate {
    pub fn new(x: Vec<f64>, f: Vec<f64>, iteration_born: usize, source: Source) -> Self {
        Self { x, f, iteration_born, source }
    }

    pub fn unevaluated(x: Vec<f64>, iteration_born: usize, source: Source) -> Self {
        Self { x, f: Vec::new(), iteration_born, source }
    }

    pub fn is_evaluated(&self) -> bool {
        !self.f.is_empty() && self.f.iter().all(|v| v.is_finite())
    }

    /// Scalar objective used for ordering.
    pub fn value(&self) -> f64 {
        self.f.first().copied().unwrap_or(f64::INFINITY)
    }
}

/// Ascending by objective, ties by age. `sort_by` is stable, so remaining ties
/// keep insertion order.
fn rank_order(a: &Candidate, b: &Candidate) -> Ordering {
    a.value().total_cmp(&b.value()).then(a.iteration_born.cmp(&b.iteration_born))
}

pub fn sort_candidates(members: &mut [Candidate]) {
    members.sort_by(rank_order);
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pool {
    pub members: Vec<Candidate>,
    pub capacity: usize,
    pub role: PoolRole,
}

impl Pool {
    pub fn new(members: Vec<Candidate>, capacity: usize, role: PoolRole) -> Result<Self> {
        if capacity == 0 {
            return Err(CoreError::Parameter("pool capacity must be positive".into()));
        }
        Ok(Self { members, capacity, role })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn best(&self) -> Option<&Candidate> {
        self.members.iter().min_by(|a, b| rank_order(a, b))
    }

    pub fn best_value(&self) -> f64 {
        self.best().map(Candidate::value).unwrap_or(f64::INFINITY)
    }

    pub fn mean_value(&self) -> f64 {
        if self.members.is_empty() {
            return f64::NAN;
        }
        self.members.iter().map(Candidate::value).sum::<f64>() / self.members.len() as f64
    }

    pub fn values(&self) -> Vec<f64> {
        self.members.iter().map(Candidate::value).collect()
    }

    /// Members sorted best-first without truncating.
    pub fn sorted(&self) -> Pool {
        let mut out = self.clone();
        sort_candidates(&mut out.members);
        out
    }

    /// Append `new_candidates` after the current members, order preserved.
    pub fn update_population(&self, new_candidates: &[Candidate]) -> Result<Pool> {
        let dim = self.members.first().or(new_candidates.first()).map(|c| c.x.len());
        for c in new_candidates {
            if let Some(d) = dim {
                if c.x.len() != d {
                    return Err(CoreError::DimensionMismatch { expected: d, got: c.x.len() });
                }
            }
            if !c.is_evaluated() {
                return Err(CoreError::Unevaluated { iteration: c.iteration_born });
            }
        }
        let mut out = self.clone();
        out.members.extend_from_slice(new_candidates);
        Ok(out)
    }

    /// Keep the best `capacity` members in ascending order.
    pub fn sort_and_truncate(&self) -> Result<Pool> {
        if self.members.len() < self.capacity {
            return Err(CoreError::Underfull { len: self.members.len(), capacity: self.capacity });
        }
        let mut out = self.sorted();
        out.members.truncate(self.capacity);
        Ok(out)
    }
}

/// How port-and-filter treats a ported member that is worse than the exploit
/// member it would displace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PortRule {
    /// Replace regardless of quality.
    #[default]
    Unconditional,
    /// Replace only when the incoming member is strictly better.
    Conditional,
}

/// Overwrite the `num_port` worst exploit members with the `num_port` best
/// explore members. The explore pool is read-only; the result is the sorted
/// exploit pool with its tail replaced (not re-sorted).
pub fn port_and_filter(explore: &Pool, exploit: &Pool, num_port: usize, rule: PortRule) -> Result<Pool> {
    let limit = explore.len().min(exploit.len());
    if num_port > limit {
        return Err(CoreError::Parameter(format!("num_port {num_port} exceeds the smaller pool size {limit}")));
    }
    let top = explore.sorted().members;
    let mut out = exploit.sorted();
    let n = out.members.len();
    for (k, incoming) in top.into_iter().take(num_port).enumerate() {
        let slot = n - num_port + k;
        let replace = match rule {
            PortRule::Unconditional => true,
            PortRule::Conditional => incoming.value() < out.members[slot].value(),
        };
        if replace {
            out.members[slot] = incoming;
        }
    }
    Ok(out)
}

/// Default number of members ported per iteration: 20% of the population, at
/// least one.
pub fn default_num_port(pop_size: usize) -> usize {
    (pop_size / 5).max(1)
}

/// Write candidates as CSV rows: x components then f components.
pub fn candidates_to_csv(members: &[Candidate], full_precision: bool) -> String {
    let mut out = String::new();
    for c in members {
        let row: Vec<String> = c.x.iter().chain(&c.f).map(|v| crate::fmt_float(*v, full_precision)).collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

/// Inverse of [`candidates_to_csv`] given the split between variables and
/// objectives.
pub fn candidates_from_csv(text: &str, num_vars: usize, num_objectives: usize) -> Result<Vec<Candidate>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let values: Vec<f64> = line
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| CoreError::Csv(format!("line {}: {e}", lineno + 1)))?;
        if values.len() != num_vars + num_objectives {
            return Err(CoreError::Csv(format!(
                "line {}: expected {} fields, got {}",
                lineno + 1,
                num_vars + num_objectives,
                values.len()
            )));
        }
        let (x, f) = values.split_at(num_vars);
        out.push(Candidate::new(x.to_vec(), f.to_vec(), 0, Source::Init));
    }
    Ok(out)
}
