//! Closed-form test objectives: six 2D functions, N-dimensional and shifted
//! Rosenbrock, and the two-objective ZDT1/ZDT3 problems.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::objective::{KnownMinimum, Objective, ObjectiveSpec};

/// Shift used by the translated Rosenbrock variant.
pub const DEFAULT_ROSENBROCK_SHIFT: f64 = 0.2913;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum BenchmarkId {
    ScaledSphere,
    Himmelblau,
    Rosenbrock2d,
    Sphere2d,
    Beale,
    GoldsteinPrice,
    RosenbrockNd { n: usize },
    RosenbrockNdShifted { n: usize, shift: f64 },
    Zdt1 { n: usize },
    Zdt3 { n: usize },
}

impl BenchmarkId {
    pub const TABLE_FUNCTIONS: [BenchmarkId; 6] = [
        BenchmarkId::ScaledSphere,
        BenchmarkId::Himmelblau,
        BenchmarkId::Rosenbrock2d,
        BenchmarkId::Sphere2d,
        BenchmarkId::Beale,
        BenchmarkId::GoldsteinPrice,
    ];

    pub fn num_vars(&self) -> usize {
        match *self {
            BenchmarkId::RosenbrockNd { n }
            | BenchmarkId::RosenbrockNdShifted { n, .. }
            | BenchmarkId::Zdt1 { n }
            | BenchmarkId::Zdt3 { n } => n,
            _ => 2,
        }
    }

    pub fn num_objectives(&self) -> usize {
        if self.is_zdt() {
            2
        } else {
            1
        }
    }

    pub fn is_zdt(&self) -> bool {
        matches!(self, BenchmarkId::Zdt1 { .. } | BenchmarkId::Zdt3 { .. })
    }

    /// Domain as (lower, upper); infinite for unbounded functions.
    pub fn domain(&self) -> (f64, f64) {
        match self {
            BenchmarkId::ScaledSphere => (-1.0, 4.0),
            BenchmarkId::Himmelblau => (-5.0, 5.0),
            BenchmarkId::Beale => (-4.5, 4.5),
            BenchmarkId::GoldsteinPrice => (-2.0, 2.0),
            BenchmarkId::Zdt1 { .. } | BenchmarkId::Zdt3 { .. } => (0.0, 1.0),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn known_minimum(&self) -> Option<KnownMinimum> {
        let single = |value: f64, x: Vec<f64>| Some(KnownMinimum { value, minimizers: vec![x] });
        match *self {
            BenchmarkId::ScaledSphere | BenchmarkId::Sphere2d => single(0.0, vec![0.0, 0.0]),
            BenchmarkId::Himmelblau => Some(KnownMinimum {
                value: 0.0,
                minimizers: vec![
                    vec![3.0, 2.0],
                    vec![-2.805118, 3.131312],
                    vec![-3.779310, -3.283186],
                    vec![3.584428, -1.848126],
                ],
            }),
            BenchmarkId::Rosenbrock2d => single(0.0, vec![1.0, 1.0]),
            BenchmarkId::Beale => single(0.0, vec![3.0, 0.5]),
            BenchmarkId::GoldsteinPrice => single(3.0, vec![0.0, -1.0]),
            BenchmarkId::RosenbrockNd { n } => single(0.0, vec![1.0; n]),
            BenchmarkId::RosenbrockNdShifted { n, shift } => single(0.0, vec![1.0 + shift; n]),
            BenchmarkId::Zdt1 { .. } | BenchmarkId::Zdt3 { .. } => None,
        }
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        let n = self.num_vars();
        if n < 2 {
            return Err(CoreError::Parameter(format!("{self} needs at least 2 variables")));
        }
        if x.len() != n {
            return Err(CoreError::DimensionMismatch { expected: n, got: x.len() });
        }
        if self.is_zdt() && x.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(CoreError::Domain { name: self.to_string(), reason: format!("{x:?} outside [0, 1]") });
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        let v = match *self {
            BenchmarkId::ScaledSphere => x[0].powi(2) + x[1].powi(4),
            BenchmarkId::Himmelblau => himmelblau(x[0], x[1]),
            BenchmarkId::Rosenbrock2d => rosenbrock(x, 0.0),
            BenchmarkId::Sphere2d => x[0] * x[0] + x[1] * x[1],
            BenchmarkId::Beale => beale(x[0], x[1]),
            BenchmarkId::GoldsteinPrice => goldstein_price(x[0], x[1]),
            BenchmarkId::RosenbrockNd { .. } => rosenbrock(x, 0.0),
            BenchmarkId::RosenbrockNdShifted { shift, .. } => rosenbrock(x, shift),
            BenchmarkId::Zdt1 { .. } => return Ok(zdt(x, false).to_vec()),
            BenchmarkId::Zdt3 { .. } => return Ok(zdt(x, true).to_vec()),
        };
        Ok(vec![v])
    }

    /// Analytic gradient of a single-objective benchmark.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        if self.is_zdt() {
            return Err(CoreError::Parameter(format!("{self} is multi-objective; no gradient")));
        }
        self.check(x)?;
        let (a, b) = (x[0], x[1]);
        Ok(match *self {
            BenchmarkId::ScaledSphere => vec![2.0 * a, 4.0 * b.powi(3)],
            BenchmarkId::Sphere2d => vec![2.0 * a, 2.0 * b],
            BenchmarkId::Himmelblau => {
                let u = a * a + b - 11.0;
                let v = a + b * b - 7.0;
                vec![4.0 * a * u + 2.0 * v, 2.0 * u + 4.0 * b * v]
            }
            BenchmarkId::Beale => {
                let t1 = 1.5 - a + a * b;
                let t2 = 2.25 - a + a * b * b;
                let t3 = 2.625 - a + a * b.powi(3);
                vec![
                    2.0 * t1 * (b - 1.0) + 2.0 * t2 * (b * b - 1.0) + 2.0 * t3 * (b.powi(3) - 1.0),
                    2.0 * t1 * a + 4.0 * t2 * a * b + 6.0 * t3 * a * b * b,
                ]
            }
            BenchmarkId::GoldsteinPrice => goldstein_price_gradient(a, b),
            BenchmarkId::Rosenbrock2d | BenchmarkId::RosenbrockNd { .. } => rosenbrock_gradient(x, 0.0),
            BenchmarkId::RosenbrockNdShifted { shift, .. } => rosenbrock_gradient(x, shift),
            BenchmarkId::Zdt1 { .. } | BenchmarkId::Zdt3 { .. } => unreachable!(),
        })
    }

    pub fn objective_spec(&self) -> Result<ObjectiveSpec> {
        let (lo, hi) = self.domain();
        let n = self.num_vars();
        let spec =
            ObjectiveSpec::new(self.to_string(), vec![lo; n], vec![hi; n], self.num_objectives(), Arc::new(*self))?;
        match self.known_minimum() {
            Some(known) => spec.with_known_minimum(known),
            None => Ok(spec),
        }
    }
}

impl Objective for BenchmarkId {
    fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        BenchmarkId::evaluate(self, x)
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        BenchmarkId::gradient(self, x).ok()
    }
}

impl fmt::Display for BenchmarkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            BenchmarkId::ScaledSphere => write!(f, "scaled_sphere"),
            BenchmarkId::Himmelblau => write!(f, "himmelblau"),
            BenchmarkId::Rosenbrock2d => write!(f, "rosenbrock2d"),
            BenchmarkId::Sphere2d => write!(f, "sphere2d"),
            BenchmarkId::Beale => write!(f, "beale"),
            BenchmarkId::GoldsteinPrice => write!(f, "goldstein_price"),
            BenchmarkId::RosenbrockNd { n } => write!(f, "rosenbrock_nd_{n}"),
            BenchmarkId::RosenbrockNdShifted { n, shift } if shift == DEFAULT_ROSENBROCK_SHIFT => {
                write!(f, "rosenbrock_nd_shifted_{n}")
            }
            BenchmarkId::RosenbrockNdShifted { n, shift } => write!(f, "rosenbrock_nd_shifted_{n}_{shift}"),
            BenchmarkId::Zdt1 { n } => write!(f, "zdt1_{n}"),
            BenchmarkId::Zdt3 { n } => write!(f, "zdt3_{n}"),
        }
    }
}

impl FromStr for BenchmarkId {
    type Err = CoreError;

    /// Accepts the plain names plus optional `_<n>` dimension and, for the
    /// shifted variant, `_<n>_<shift>` suffixes.
    fn from_str(s: &str) -> Result<Self> {
        let unknown = || CoreError::Parameter(format!("unknown benchmark `{s}`"));
        let parse_n = |t: Option<&str>, default: usize| -> Result<usize> {
            match t {
                None => Ok(default),
                Some(t) => t.parse::<usize>().ok().filter(|&n| n >= 2).ok_or_else(unknown),
            }
        };
        Ok(match s {
            "scaled_sphere" => BenchmarkId::ScaledSphere,
            "himmelblau" => BenchmarkId::Himmelblau,
            "rosenbrock2d" | "rosenbrock" => BenchmarkId::Rosenbrock2d,
            "sphere2d" | "sphere" => BenchmarkId::Sphere2d,
            "beale" => BenchmarkId::Beale,
            "goldstein_price" => BenchmarkId::GoldsteinPrice,
            _ => {
                if let Some(rest) = s.strip_prefix("rosenbrock_nd_shifted") {
                    let mut parts = rest.strip_prefix('_').map(|r| r.splitn(2, '_'));
                    let n = parse_n(parts.as_mut().and_then(|p| p.next()), 10)?;
                    let shift = match parts.as_mut().and_then(|p| p.next()) {
                        Some(t) => t.parse::<f64>().map_err(|_| unknown())?,
                        None => DEFAULT_ROSENBROCK_SHIFT,
                    };
                    BenchmarkId::RosenbrockNdShifted { n, shift }
                } else if let Some(rest) = s.strip_prefix("rosenbrock_nd") {
                    BenchmarkId::RosenbrockNd { n: parse_n(rest.strip_prefix('_'), 10)? }
                } else if let Some(rest) = s.strip_prefix("zdt1") {
                    BenchmarkId::Zdt1 { n: parse_n(rest.strip_prefix('_'), 2)? }
                } else if let Some(rest) = s.strip_prefix("zdt3") {
                    BenchmarkId::Zdt3 { n: parse_n(rest.strip_prefix('_'), 2)? }
                } else {
                    return Err(unknown());
                }
            }
        })
    }
}

fn himmelblau(x: f64, y: f64) -> f64 {
    (x * x + y - 11.0).powi(2) + (x + y * y - 7.0).powi(2)
}

fn beale(x: f64, y: f64) -> f64 {
    (1.5 - x + x * y).powi(2) + (2.25 - x + x * y * y).powi(2) + (2.625 - x + x * y.powi(3)).powi(2)
}

fn goldstein_price(x: f64, y: f64) -> f64 {
    let a = 1.0 + (x + y + 1.0).powi(2) * (19.0 - 14.0 * x + 3.0 * x * x - 14.0 * y + 6.0 * x * y + 3.0 * y * y);
    let b =
        30.0 + (2.0 * x - 3.0 * y).powi(2) * (18.0 - 32.0 * x + 12.0 * x * x + 48.0 * y - 36.0 * x * y + 27.0 * y * y);
    a * b
}

fn goldstein_price_gradient(x: f64, y: f64) -> Vec<f64> {
    let s = x + y + 1.0;
    let p = 19.0 - 14.0 * x + 3.0 * x * x - 14.0 * y + 6.0 * x * y + 3.0 * y * y;
    let a = 1.0 + s * s * p;
    let t = 2.0 * x - 3.0 * y;
    let q = 18.0 - 32.0 * x + 12.0 * x * x + 48.0 * y - 36.0 * x * y + 27.0 * y * y;
    let b = 30.0 + t * t * q;
    let da_dx = 2.0 * s * p + s * s * (-14.0 + 6.0 * x + 6.0 * y);
    let da_dy = 2.0 * s * p + s * s * (-14.0 + 6.0 * x + 6.0 * y);
    let db_dx = 4.0 * t * q + t * t * (-32.0 + 24.0 * x - 36.0 * y);
    let db_dy = -6.0 * t * q + t * t * (48.0 - 36.0 * x + 54.0 * y);
    vec![da_dx * b + a * db_dx, da_dy * b + a * db_dy]
}

/// Rosenbrock over consecutive pairs, translated so its minimum sits at
/// `1 + shift` in every coordinate.
fn rosenbrock(x: &[f64], shift: f64) -> f64 {
    x.windows(2)
        .map(|w| {
            let (a, b) = (w[0] - shift, w[1] - shift);
            100.0 * (b - a * a).powi(2) + (1.0 - a).powi(2)
        })
        .sum()
}

fn rosenbrock_gradient(x: &[f64], shift: f64) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    for i in 0..x.len() - 1 {
        let (a, b) = (x[i] - shift, x[i + 1] - shift);
        let r = b - a * a;
        g[i] += -400.0 * a * r - 2.0 * (1.0 - a);
        g[i + 1] += 200.0 * r;
    }
    g
}

fn zdt(x: &[f64], disconnected: bool) -> [f64; 2] {
    let n = x.len();
    let f1 = x[0];
    let g = 1.0 + 9.0 / (n - 1) as f64 * x[1..].iter().sum::<f64>();
    let ratio = f1 / g;
    let mut h = 1.0 - ratio.sqrt();
    if disconnected {
        h -= ratio * (10.0 * PI * f1).sin();
    }
    [f1, g * h]
}

/// Reference Pareto front at g = 1. ZDT1 samples `num_points` evenly in
/// f1 in [0, 1]; ZDT3 samples the same grid and keeps only its nondominated
/// points, so fewer than `num_points` come back.
pub fn zdt_true_front(id: BenchmarkId, num_points: usize) -> Result<Vec<[f64; 2]>> {
    if num_points < 2 {
        return Err(CoreError::Parameter("front needs at least 2 points".into()));
    }
    let grid = (0..num_points).map(|i| i as f64 / (num_points - 1) as f64);
    match id {
        BenchmarkId::Zdt1 { .. } => Ok(grid.map(|f1| [f1, 1.0 - f1.sqrt()]).collect()),
        BenchmarkId::Zdt3 { .. } => {
            let curve: Vec<[f64; 2]> = grid.map(|f1| [f1, 1.0 - f1.sqrt() - f1 * (10.0 * PI * f1).sin()]).collect();
            Ok(nondominated_sweep(&curve))
        }
        other => Err(CoreError::Parameter(format!("{other} has no Pareto front"))),
    }
}

/// Nondominated subset of points sorted by f1: keep a point when its f2 is
/// strictly below every f2 seen so far.
fn nondominated_sweep(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut best = f64::INFINITY;
    let mut out = Vec::new();
    for p in sorted {
        if p[1] < best {
            best = p[1];
            out.push(p);
        }
    }
    out
}

/// Split a front (sorted by f1) wherever consecutive f1 values differ by more
/// than `gap`. Returns the segment sizes.
pub fn front_segments(front: &[[f64; 2]], gap: f64) -> Vec<usize> {
    let mut sorted = front.to_vec();
    sorted.sort_by(|a, b| a[0].total_cmp(&b[0]));
    let mut segments = Vec::new();
    let mut current = 0usize;
    for (i, p) in sorted.iter().enumerate() {
        if i > 0 && p[0] - sorted[i - 1][0] > gap {
            segments.push(current);
            current = 0;
        }
        current += 1;
    }
    if current > 0 {
        segments.push(current);
    }
    segments
}

/// Inverted generational distance: mean distance from each reference point to
/// its nearest obtained point.
pub fn igd(reference: &[[f64; 2]], obtained: &[[f64; 2]]) -> f64 {
    if obtained.is_empty() || reference.is_empty() {
        return f64::INFINITY;
    }
    reference
        .iter()
        .map(|r| {
            obtained
                .iter()
                .map(|o| ((r[0] - o[0]).powi(2) + (r[1] - o[1]).powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min)
        })
        .sum::<f64>()
        / reference.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn listed_minima() {
        assert!((BenchmarkId::GoldsteinPrice.evaluate(&[0.0, -1.0]).unwrap()[0] - 3.0).abs() < 1e-6);
        for id in BenchmarkId::TABLE_FUNCTIONS {
            let known = id.known_minimum().unwrap();
            for m in &known.minimizers {
                let v = id.evaluate(m).unwrap()[0];
                let tol = if id == BenchmarkId::GoldsteinPrice { 1e-6 } else { 1e-9 };
                assert!((v - known.value).abs() < tol, "{id} at {m:?} = {v}");
            }
        }
        assert_eq!(BenchmarkId::RosenbrockNd { n: 10 }.evaluate(&[1.0; 10]).unwrap(), vec![0.0]);
        let shifted = BenchmarkId::RosenbrockNdShifted { n: 10, shift: 0.2913 };
        assert!(shifted.evaluate(&[1.2913; 10]).unwrap()[0].abs() < 1e-20);
    }

    #[test]
    fn zdt_origin() {
        assert_eq!(BenchmarkId::Zdt1 { n: 2 }.evaluate(&[0.0, 0.0]).unwrap(), vec![0.0, 1.0]);
        assert_eq!(BenchmarkId::Zdt3 { n: 2 }.evaluate(&[0.0, 0.0]).unwrap(), vec![0.0, 1.0]);
        assert!(matches!(BenchmarkId::Zdt1 { n: 2 }.evaluate(&[1.2, 0.0]), Err(CoreError::Domain { .. })));
    }

    #[test]
    fn dimension_checks() {
        assert!(BenchmarkId::Beale.evaluate(&[1.0]).is_err());
        assert!(BenchmarkId::RosenbrockNd { n: 4 }.evaluate(&[1.0; 3]).is_err());
        assert!(BenchmarkId::Zdt1 { n: 2 }.gradient(&[0.5, 0.5]).is_err());
    }

    #[test]
    fn analytic_gradients() {
        assert_eq!(BenchmarkId::Sphere2d.gradient(&[3.0, 4.0]).unwrap(), vec![6.0, 8.0]);
        let exact = [
            (BenchmarkId::ScaledSphere, vec![0.0, 0.0]),
            (BenchmarkId::Himmelblau, vec![3.0, 2.0]),
            (BenchmarkId::Rosenbrock2d, vec![1.0, 1.0]),
            (BenchmarkId::Sphere2d, vec![0.0, 0.0]),
            (BenchmarkId::Beale, vec![3.0, 0.5]),
            (BenchmarkId::GoldsteinPrice, vec![0.0, -1.0]),
            (BenchmarkId::RosenbrockNdShifted { n: 5, shift: 0.2913 }, vec![1.2913; 5]),
        ];
        for (id, x) in exact {
            let g = id.gradient(&x).unwrap();
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(norm < 1e-10, "{id}: |grad| = {norm}");
        }
        // Himmelblau's other minimizers are only listed to six decimals.
        for m in &BenchmarkId::Himmelblau.known_minimum().unwrap().minimizers[1..] {
            let g = BenchmarkId::Himmelblau.gradient(m).unwrap();
            assert!(g.iter().all(|v| v.abs() < 1e-3), "{m:?}: {g:?}");
        }
    }

    #[test]
    fn names_round_trip() {
        for s in ["himmelblau", "rosenbrock_nd_25", "rosenbrock_nd_shifted_4", "zdt3_2", "goldstein_price"] {
            assert_eq!(s.parse::<BenchmarkId>().unwrap().to_string(), s);
        }
        assert_eq!(
            "rosenbrock_nd_shifted_3_0.5".parse::<BenchmarkId>().unwrap(),
            BenchmarkId::RosenbrockNdShifted { n: 3, shift: 0.5 }
        );
        assert!("zdt1_1".parse::<BenchmarkId>().is_err());
        assert!("ackley".parse::<BenchmarkId>().is_err());
    }

    #[test]
    fn zdt1_front_values() {
        let front = zdt_true_front(BenchmarkId::Zdt1 { n: 2 }, 5).unwrap();
        assert_eq!(front[0], [0.0, 1.0]);
        assert_eq!(front[1], [0.25, 0.5]);
        assert_eq!(front[4], [1.0, 0.0]);
        assert!(zdt_true_front(BenchmarkId::Beale, 10).is_err());
    }

    #[test]
    fn zdt3_front_is_disconnected() {
        let front = zdt_true_front(BenchmarkId::Zdt3 { n: 2 }, 2001).unwrap();
        let segs = front_segments(&front, 0.01);
        assert_eq!(segs.len(), 5, "{segs:?}");
    }

    #[test]
    fn igd_of_identical_sets_is_zero() {
        let front = zdt_true_front(BenchmarkId::Zdt1 { n: 2 }, 50).unwrap();
        assert_eq!(igd(&front, &front), 0.0);
        assert!(igd(&front, &[[2.0, 2.0]]) > 1.0);
    }
}
