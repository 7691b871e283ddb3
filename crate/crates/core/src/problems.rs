//! Name registry covering the analytic benchmarks and the engineering models.
//!
//! Accepted names are the benchmark names (`sphere2d`, `goldstein_price`,
//! `zdt1_2`, `rosenbrock_nd_shifted_10`, ...) plus `nosecone`, `nozzle`,
//! `heat_<N>`, `windfarm_<n>` and `windfarm_<n>_sampled`. The sampled
//! windfarm draws its per-direction speeds from the run seed.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::benchmarks::BenchmarkId;
use crate::error::{CoreError, Result};
use crate::objective::ObjectiveSpec;
use crate::physics::{
    heat_objective, nosecone_objective, nozzle_objective, windfarm_objective, HeatSpec, NoseConeSpec, NozzleSpec,
    WindfarmSpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ProblemId {
    Benchmark(BenchmarkId),
    NoseCone,
    Nozzle,
    Heat { interior_points: usize },
    Windfarm { turbines: usize, sampled_speeds: bool },
}

impl ProblemId {
    pub fn num_objectives(&self) -> usize {
        match self {
            ProblemId::Benchmark(b) => b.num_objectives(),
            _ => 1,
        }
    }

    /// Builds the objective. `seed` only matters for sampled windfarm speeds.
    pub fn objective_spec(&self, seed: u64) -> Result<ObjectiveSpec> {
        match *self {
            ProblemId::Benchmark(b) => b.objective_spec(),
            ProblemId::NoseCone => nosecone_objective(NoseConeSpec::default()),
            ProblemId::Nozzle => nozzle_objective(NozzleSpec::default()),
            ProblemId::Heat { interior_points } => heat_objective(HeatSpec::new(interior_points)),
            ProblemId::Windfarm { turbines, sampled_speeds } => {
                let spec = WindfarmSpec::new(turbines);
                windfarm_objective(if sampled_speeds { spec.with_sampled_speeds(seed) } else { spec })
            }
        }
    }
}

impl std::fmt::Display for ProblemId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ProblemId::Benchmark(b) => write!(f, "{b}"),
            ProblemId::NoseCone => f.write_str("nosecone"),
            ProblemId::Nozzle => f.write_str("nozzle"),
            ProblemId::Heat { interior_points } => write!(f, "heat_{interior_points}"),
            ProblemId::Windfarm { turbines, sampled_speeds: false } => write!(f, "windfarm_{turbines}"),
            ProblemId::Windfarm { turbines, sampled_speeds: true } => write!(f, "windfarm_{turbines}_sampled"),
        }
    }
}

impl FromStr for ProblemId {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || CoreError::Parameter(format!("unknown problem `{s}`"));
        let count = |t: &str| t.parse::<usize>().ok().filter(|&n| n >= 1).ok_or_else(bad);
        match s {
            "nosecone" => Ok(ProblemId::NoseCone),
            "nozzle" => Ok(ProblemId::Nozzle),
            _ => {
                if let Some(rest) = s.strip_prefix("heat_") {
                    Ok(ProblemId::Heat { interior_points: count(rest)? })
                } else if let Some(rest) = s.strip_prefix("windfarm_") {
                    let (n, sampled) = match rest.strip_suffix("_sampled") {
                        Some(n) => (n, true),
                        None => (rest, false),
                    };
                    Ok(ProblemId::Windfarm { turbines: count(n)?, sampled_speeds: sampled })
                } else {
                    s.parse::<BenchmarkId>().map(ProblemId::Benchmark).map_err(|_| bad())
                }
            }
        }
    }
}

pub fn resolve(name: &str, seed: u64) -> Result<ObjectiveSpec> {
    name.parse::<ProblemId>()?.objective_spec(seed)
}
