//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (on by default) the `Parallel` strategy runs on
//! the rayon global pool. Without it every strategy runs sequentially, so
//! results never depend on the feature: callers must only pass pure closures.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

/// Map `f` over `items`, preserving order.
pub fn map_with<T, U, F>(exec: Execution, items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
        _ => items.iter().map(f).collect(),
    }
}

pub fn map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    map_with(Execution::Parallel, items, f)
}

/// Run two closures, potentially in parallel.
pub fn join_with<A, B, RA, RB>(exec: Execution, a: A, b: B) -> (RA, RB)
where
    A: FnOnce() -> RA + Send,
    B: FnOnce() -> RB + Send,
    RA: Send,
    RB: Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => rayon::join(a, b),
        _ => (a(), b()),
    }
}

/// Sum of `f` over `items`. The reduction order is fixed (per-item results are
/// collected, then summed left to right) so the result is bitwise identical
/// across strategies.
pub fn sum_with<T, F>(exec: Execution, items: &[T], f: F) -> f64
where
    T: Sync,
    F: Fn(&T) -> f64 + Sync + Send,
{
    map_with(exec, items, f).into_iter().sum()
}

pub fn is_parallel_enabled() -> bool {
    cfg!(feature = "parallel")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategies_agree() {
        let xs: Vec<f64> = (0..1000).map(|i| i as f64 * 0.37).collect();
        let f = |x: &f64| x.sin() * x.sqrt();
        assert_eq!(map_with(Execution::Sequential, &xs, f), map_with(Execution::Parallel, &xs, f));
        assert_eq!(sum_with(Execution::Sequential, &xs, f).to_bits(), sum_with(Execution::Parallel, &xs, f).to_bits());
        let (a, b) = join_with(Execution::Parallel, || 1 + 1, || "x");
        assert_eq!((a, b), (2, "x"));
    }
}
