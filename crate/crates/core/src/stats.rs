//! Ensemble summaries and explore-pool diagnostics.

use serde::{Deserialize, Serialize};

use crate::engine::RunRecord;
use crate::error::{CoreError, Result};

pub const KDE_GRID_POINTS: usize = 256;
/// Grid half-margin beyond the sample range, in bandwidths.
pub const KDE_MARGIN: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KdeSummary {
    pub variable: usize,
    pub iteration: Option<usize>,
    pub bandwidth: f64,
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; zero for fewer than two samples.
pub fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

pub fn sample_std(xs: &[f64]) -> f64 {
    sample_variance(xs).sqrt()
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Silverman's rule of thumb, `1.06 * sd * n^(-1/5)`.
pub fn silverman_bandwidth(samples: &[f64]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(CoreError::Parameter("KDE needs at least two samples".into()));
    }
    let sd = sample_std(samples);
    if !(sd > 0.0) {
        return Err(CoreError::Parameter("KDE samples are all identical".into()));
    }
    Ok(1.06 * sd * (samples.len() as f64).powf(-0.2))
}

/// Gaussian-kernel density on a fixed grid spanning the samples plus a margin
/// of [`KDE_MARGIN`] bandwidths.
pub fn kde(samples: &[f64], bandwidth: Option<f64>) -> Result<KdeSummary> {
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(CoreError::Parameter("KDE samples must be finite".into()));
    }
    let silverman = silverman_bandwidth(samples)?;
    let h = match bandwidth {
        Some(h) if h > 0.0 && h.is_finite() => h,
        Some(h) => return Err(CoreError::Parameter(format!("bandwidth must be positive, got {h}"))),
        None => silverman,
    };
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min) - KDE_MARGIN * h;
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max) + KDE_MARGIN * h;
    let step = (hi - lo) / (KDE_GRID_POINTS - 1) as f64;
    let norm = 1.0 / (samples.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    let grid: Vec<f64> = (0..KDE_GRID_POINTS).map(|i| lo + step * i as f64).collect();
    let density = grid
        .iter()
        .map(|&g| {
            norm * samples
                .iter()
                .map(|&s| {
                    let z = (g - s) / h;
                    (-0.5 * z * z).exp()
                })
                .sum::<f64>()
        })
        .collect();
    Ok(KdeSummary { variable: 0, iteration: None, bandwidth: h, grid, density })
}

pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2).zip(y.windows(2)).map(|(xw, yw)| 0.5 * (xw[1] - xw[0]) * (yw[0] + yw[1])).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariancePoint {
    pub iteration: usize,
    pub variances: Vec<f64>,
    /// One density per variable; `None` when the pool has collapsed.
    pub kdes: Vec<Option<KdeSummary>>,
}

/// Explore-pool variance and density at iterations `0, k, 2k, ...` for each
/// record.
pub fn explore_variance_series(records: &[RunRecord], every_k: usize) -> Result<Vec<Vec<VariancePoint>>> {
    if every_k == 0 {
        return Err(CoreError::Parameter("every_k must be positive".into()));
    }
    records
        .iter()
        .map(|rec| {
            rec.iterations
                .iter()
                .filter(|it| it.iteration % every_k == 0)
                .map(|it| {
                    let pool = it.explore_pool.as_ref().ok_or_else(|| {
                        CoreError::Parameter(format!(
                            "record for `{}` seed {} has no explore snapshot at iteration {}",
                            rec.problem, rec.seed, it.iteration
                        ))
                    })?;
                    let nvars = pool.first().map_or(0, |c| c.x.len());
                    let mut variances = Vec::with_capacity(nvars);
                    let mut kdes = Vec::with_capacity(nvars);
                    for v in 0..nvars {
                        let col: Vec<f64> = pool.iter().map(|c| c.x[v]).collect();
                        variances.push(sample_variance(&col));
                        kdes.push(kde(&col, None).ok().map(|k| KdeSummary {
                            variable: v,
                            iteration: Some(it.iteration),
                            ..k
                        }));
                    }
                    Ok(VariancePoint { iteration: it.iteration, variances, kdes })
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub runs: usize,
    pub mean: f64,
    pub std: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

impl EnsembleSummary {
    pub fn of(values: &[f64]) -> Self {
        Self {
            runs: values.len(),
            mean: if values.is_empty() { f64::NAN } else { mean(values) },
            std: sample_std(values),
            median: median(values),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}
