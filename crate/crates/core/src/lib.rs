//! Language-model-guided evolutionary optimization.
//!
//! Two populations evolve side by side: an *explore* pool whose new members
//! are requested far from the current candidates, and an *exploit* pool whose
//! new members are requested close to its best one. After each round the best
//! explore members are ported into the exploit pool and both pools keep only
//! their best `pop_size` members. New candidates come from a [`generator`]
//! backend: a remote chat-completions model, a deterministic offline mock, or
//! a replay of a stored transcript.

pub mod baselines;
pub mod benchmarks;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod generator;
pub mod moo;
pub mod objective;
pub mod par;
pub mod physics;
pub mod pool;
pub mod problems;
pub mod prompting;
pub mod stats;

pub use error::{CoreError, Result};
pub use objective::{Budget, Objective, ObjectiveSpec};
pub use pool::{Candidate, Pool, PoolRole, Source};

/// Format a float for CSV and prompt output: `%.6f` by default, shortest
/// round-trip representation when `full_precision` is set.
pub fn fmt_float(v: f64, full_precision: bool) -> String {
    if full_precision {
        format!("{v:?}")
    } else {
        format!("{v:.6}")
    }
}
