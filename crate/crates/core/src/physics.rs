//! Engineering objectives: Newtonian nose-cone drag, a Bezier nozzle contour
//! scored by exit radial velocity, the residual of a 1D steady heat equation,
//! and a Jensen-wake windfarm energy yield.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::objective::{Objective, ObjectiveSpec};
use crate::par::{self, Execution};

fn domain_err(name: &str, reason: impl Into<String>) -> CoreError {
    CoreError::Domain { name: name.to_string(), reason: reason.into() }
}

// ---------------------------------------------------------------------------
// Nose cone

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoseConeSpec {
    /// Body length; the base diameter equals the length (fineness 1).
    pub length: f64,
    /// Gauss-Legendre panels over the log-spaced axial coordinate.
    pub quadrature_panels: usize,
    /// Tip cutoff as a fraction of the length.
    pub tip_cutoff: f64,
}

impl Default for NoseConeSpec {
    fn default() -> Self {
        Self { length: 1.0, quadrature_panels: 64, tip_cutoff: 1e-6 }
    }
}

pub const NOSECONE_MIN_EXPONENT: f64 = 0.001;

const GL5_NODES: [f64; 5] =
    [-0.906_179_845_938_664, -0.538_469_310_105_683, 0.0, 0.538_469_310_105_683, 0.906_179_845_938_664];
const GL5_WEIGHTS: [f64; 5] =
    [0.236_926_885_056_189, 0.478_628_670_499_366, 0.568_888_888_888_889, 0.478_628_670_499_366, 0.236_926_885_056_189];

/// Newtonian drag coefficient of the power-law body `y = a x^n`, referenced
/// to the base area.
///
/// Surface pressure follows `Cp = 2 sin^2(theta)`, which reduces the axial
/// force to `(4 / R^2) * integral of y y'^3 / (1 + y'^2) dx`. The integral
/// starts at the tip cutoff; the flat face left by the cutoff is charged at
/// `Cp = 2`.
pub fn nosecone_drag(n: f64, spec: &NoseConeSpec) -> Result<f64> {
    if !(NOSECONE_MIN_EXPONENT..=1.0).contains(&n) {
        return Err(domain_err("nosecone", format!("exponent {n} outside [0.001, 1]")));
    }
    let len = spec.length;
    let radius = 0.5 * len;
    let a = radius / len.powf(n);
    let x0 = spec.tip_cutoff * len;
    // On u = ln x the integrand y y'^3 / (1 + y'^2) * x is smooth.
    let integrand = |u: f64| {
        let x = u.exp();
        let y = a * x.powf(n);
        let slope = a * n * x.powf(n - 1.0);
        y * slope.powi(3) / (1.0 + slope * slope) * x
    };
    let (u0, u1) = (x0.ln(), len.ln());
    let h = (u1 - u0) / spec.quadrature_panels as f64;
    let mut integral = 0.0;
    for p in 0..spec.quadrature_panels {
        let mid = u0 + (p as f64 + 0.5) * h;
        for (node, w) in GL5_NODES.iter().zip(GL5_WEIGHTS) {
            integral += w * integrand(mid + 0.5 * h * node);
        }
    }
    integral *= 0.5 * h;
    let tip_radius = a * x0.powf(n);
    Ok(4.0 / (radius * radius) * integral + 2.0 * (tip_radius / radius).powi(2))
}

pub fn nosecone_objective(spec: NoseConeSpec) -> Result<ObjectiveSpec> {
    let f = move |x: &[f64]| -> Result<Vec<f64>> { Ok(vec![nosecone_drag(x[0], &spec)?]) };
    ObjectiveSpec::new("nosecone", vec![NOSECONE_MIN_EXPONENT], vec![1.0], 1, Arc::new(FnObjective(f)))
}

// ---------------------------------------------------------------------------
// Nozzle

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NozzleSpec {
    pub inlet_radius: f64,
    pub outlet_radius: f64,
    pub length: f64,
    pub gamma: f64,
    /// Specific gas constant, J/(kg K).
    pub gas_constant: f64,
    /// Stagnation temperature, K.
    pub stagnation_temperature: f64,
    /// Samples of the Bezier parameter used to check the contour radius.
    pub contour_samples: usize,
    /// Value returned for infeasible contours.
    pub infeasible_penalty: f64,
}

impl Default for NozzleSpec {
    fn default() -> Self {
        Self {
            inlet_radius: 1.0,
            outlet_radius: 2.0,
            length: 5.0,
            gamma: 1.4,
            gas_constant: 287.0,
            stagnation_temperature: 300.0,
            contour_samples: 201,
            infeasible_penalty: 1e4,
        }
    }
}

/// Isentropic area ratio `A / A*` at Mach `m`.
pub fn area_ratio(m: f64, gamma: f64) -> f64 {
    let e = (gamma + 1.0) / (2.0 * (gamma - 1.0));
    (2.0 / (gamma + 1.0) * (1.0 + 0.5 * (gamma - 1.0) * m * m)).powf(e) / m
}

/// Supersonic Mach number for `A / A* = ratio`, by bisection on the monotone
/// supersonic branch.
pub fn supersonic_mach(ratio: f64, gamma: f64) -> Result<f64> {
    if !(ratio >= 1.0) || !ratio.is_finite() {
        return Err(domain_err("area_mach", format!("area ratio {ratio} below 1")));
    }
    if ratio == 1.0 {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (1.0, 2.0);
    while area_ratio(hi, gamma) < ratio {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(domain_err("area_mach", format!("area ratio {ratio} out of range")));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if area_ratio(mid, gamma) < ratio {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NozzleExit {
    pub mach: f64,
    pub speed: f64,
    pub wall_angle: f64,
    pub radial_velocity: f64,
}

fn bezier(p: &[[f64; 2]; 4], t: f64) -> [f64; 2] {
    let s = 1.0 - t;
    let w = [s * s * s, 3.0 * s * s * t, 3.0 * s * t * t, t * t * t];
    [0, 1].map(|k| (0..4).map(|i| w[i] * p[i][k]).sum())
}

/// Exit conditions of the nozzle whose wall runs from `(0, r_i)` to
/// `(l, r_o)` through the control points `(x1, y1)` and `(x2, y2)`.
/// Returns `Ok(None)` for infeasible contours.
pub fn nozzle_exit(ctrl: [f64; 4], spec: &NozzleSpec) -> Result<Option<NozzleExit>> {
    let p = [[0.0, spec.inlet_radius], [ctrl[0], ctrl[1]], [ctrl[2], ctrl[3]], [spec.length, spec.outlet_radius]];
    if ctrl.iter().any(|v| !v.is_finite()) {
        return Err(domain_err("nozzle", "non-finite control point"));
    }
    // Exit tangent: B'(1) ~ P3 - P2, falling back to lower-order directions
    // when control points coincide with the end point.
    let tangent = [p[3], p[3], p[3]]
        .iter()
        .zip([p[2], p[1], p[0]])
        .map(|(end, from)| [end[0] - from[0], end[1] - from[1]])
        .find(|d| d[0].hypot(d[1]) > 1e-12)
        .ok_or_else(|| domain_err("nozzle", "degenerate Bezier contour"))?;
    for i in 0..=spec.contour_samples {
        let t = i as f64 / spec.contour_samples as f64;
        if bezier(&p, t)[1] <= 0.0 {
            return Ok(None);
        }
    }
    let ratio = (spec.outlet_radius / spec.inlet_radius).powi(2);
    if ratio < 1.0 {
        return Ok(None);
    }
    let mach = supersonic_mach(ratio, spec.gamma)?;
    let temperature = spec.stagnation_temperature / (1.0 + 0.5 * (spec.gamma - 1.0) * mach * mach);
    let speed = mach * (spec.gamma * spec.gas_constant * temperature).sqrt();
    let wall_angle = tangent[1].atan2(tangent[0]);
    Ok(Some(NozzleExit { mach, speed, wall_angle, radial_velocity: speed * wall_angle.sin().abs() }))
}

/// Exit radial velocity magnitude, or the penalty for infeasible contours.
pub fn nozzle_objective_value(ctrl: [f64; 4], spec: &NozzleSpec) -> Result<f64> {
    Ok(nozzle_exit(ctrl, spec)?.map_or(spec.infeasible_penalty, |e| e.radial_velocity))
}

pub fn nozzle_objective(spec: NozzleSpec) -> Result<ObjectiveSpec> {
    let f = move |x: &[f64]| -> Result<Vec<f64>> { Ok(vec![nozzle_objective_value([x[0], x[1], x[2], x[3]], &spec)?]) };
    let (l, r) = (spec.length, spec.outlet_radius);
    ObjectiveSpec::new("nozzle", vec![0.0, 0.1, 0.0, 0.1], vec![l, 1.5 * r, l, 1.5 * r], 1, Arc::new(FnObjective(f)))
}

// ---------------------------------------------------------------------------
// Heat

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatSpec {
    pub interior_points: usize,
    pub length: f64,
    pub q_over_k: f64,
    pub left_temperature: f64,
    pub right_temperature: f64,
}

impl HeatSpec {
    pub fn new(interior_points: usize) -> Self {
        Self { interior_points, length: 1.0, q_over_k: 10.0, left_temperature: 0.0, right_temperature: 1.0 }
    }

    pub fn dx(&self) -> f64 {
        self.length / (self.interior_points + 1) as f64
    }
}

/// Sum of squared central-difference residuals of `T'' + q/k = 0` with
/// Dirichlet ends.
pub fn heat_residual_loss(interior: &[f64], spec: &HeatSpec) -> Result<f64> {
    if spec.interior_points == 0 {
        return Err(CoreError::Parameter("heat problem needs at least one interior point".into()));
    }
    if interior.len() != spec.interior_points {
        return Err(CoreError::DimensionMismatch { expected: spec.interior_points, got: interior.len() });
    }
    let dx2 = spec.dx().powi(2);
    let at = |i: usize| match i {
        0 => spec.left_temperature,
        i if i == spec.interior_points + 1 => spec.right_temperature,
        i => interior[i - 1],
    };
    Ok((1..=spec.interior_points).map(|i| ((at(i - 1) - 2.0 * at(i) + at(i + 1)) / dx2 + spec.q_over_k).powi(2)).sum())
}

pub fn heat_objective(spec: HeatSpec) -> Result<ObjectiveSpec> {
    let f = move |x: &[f64]| -> Result<Vec<f64>> { Ok(vec![heat_residual_loss(x, &spec)?]) };
    let n = spec.interior_points;
    ObjectiveSpec::new(format!("heat_{n}"), vec![0.0; n], vec![2.5; n], 1, Arc::new(FnObjective(f)))
}

// ---------------------------------------------------------------------------
// Windfarm

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindfarmSpec {
    pub num_turbines: usize,
    pub domain_size: f64,
    pub rotor_diameter: f64,
    /// Relative frequency of each direction; direction `d` points the wind
    /// along `d * 360 / len` degrees.
    pub direction_frequencies: Vec<f64>,
    /// Free-stream speed per direction, m/s.
    pub speeds: Vec<f64>,
    pub wake_decay: f64,
    pub thrust_coefficient: f64,
    pub power_coefficient: f64,
    pub air_density: f64,
    pub rated_speed: f64,
    pub cut_in_speed: f64,
    /// Minimum turbine spacing in rotor diameters.
    pub min_spacing: f64,
    /// Penalty per squared metre of spacing violation, in MWh.
    pub spacing_penalty: f64,
    #[serde(default)]
    pub execution: Execution,
}

pub const WINDFARM_DIRECTIONS: usize = 72;
pub const WINDFARM_MEAN_SPEED: f64 = 8.0;
pub const WINDFARM_SPEED_STD: f64 = 0.5;

impl WindfarmSpec {
    /// Deterministic-speed setup: 8 m/s in each of 72 uniform directions.
    pub fn new(num_turbines: usize) -> Self {
        Self {
            num_turbines,
            domain_size: 1000.0,
            rotor_diameter: 126.0,
            direction_frequencies: vec![1.0 / WINDFARM_DIRECTIONS as f64; WINDFARM_DIRECTIONS],
            speeds: vec![WINDFARM_MEAN_SPEED; WINDFARM_DIRECTIONS],
            wake_decay: 0.05,
            thrust_coefficient: 0.8,
            power_coefficient: 0.45,
            air_density: 1.225,
            rated_speed: 12.0,
            cut_in_speed: 3.0,
            min_spacing: 2.0,
            spacing_penalty: 10.0,
            execution: Execution::Parallel,
        }
    }

    /// Per-direction speeds drawn from N(8, 0.5^2) under `seed`.
    pub fn with_sampled_speeds(mut self, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(WINDFARM_MEAN_SPEED, WINDFARM_SPEED_STD).expect("valid normal");
        self.speeds = (0..self.direction_frequencies.len()).map(|_| normal.sample(&mut rng)).collect();
        self
    }

    fn rotor_area(&self) -> f64 {
        PI * (0.5 * self.rotor_diameter).powi(2)
    }

    /// Turbine power in watts at hub speed `u`.
    pub fn turbine_power(&self, u: f64) -> f64 {
        if u < self.cut_in_speed {
            return 0.0;
        }
        0.5 * self.air_density * self.rotor_area() * self.power_coefficient * u.min(self.rated_speed).powi(3)
    }

    /// Jensen top-hat velocity deficit at `downstream` metres behind a rotor.
    pub fn wake_deficit(&self, downstream: f64) -> f64 {
        let r0 = 0.5 * self.rotor_diameter;
        (1.0 - (1.0 - self.thrust_coefficient).sqrt()) / (1.0 + self.wake_decay * downstream / r0).powi(2)
    }
}

/// Hub speeds of every turbine for wind blowing along `angle` radians at
/// free-stream speed `u_inf`.
pub fn hub_speeds(layout: &[[f64; 2]], angle: f64, u_inf: f64, spec: &WindfarmSpec) -> Vec<f64> {
    let (c, s) = (angle.cos(), angle.sin());
    let r0 = 0.5 * spec.rotor_diameter;
    let local: Vec<(f64, f64)> = layout.iter().map(|p| (p[0] * c + p[1] * s, -p[0] * s + p[1] * c)).collect();
    local
        .iter()
        .enumerate()
        .map(|(j, &(xj, yj))| {
            let sq: f64 = local
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != j)
                .filter_map(|(_, &(xi, yi))| {
                    let d = xj - xi;
                    let wake_radius = r0 + spec.wake_decay * d;
                    (d > 0.0 && (yj - yi).abs() < wake_radius).then(|| spec.wake_deficit(d).powi(2))
                })
                .sum();
            u_inf * (1.0 - sq.sqrt())
        })
        .collect()
}

fn check_overlap(layout: &[[f64; 2]]) -> Result<()> {
    for i in 0..layout.len() {
        for j in i + 1..layout.len() {
            let d = (layout[i][0] - layout[j][0]).hypot(layout[i][1] - layout[j][1]);
            if d < 1e-6 {
                return Err(domain_err("windfarm", format!("turbines {i} and {j} overlap")));
            }
        }
    }
    Ok(())
}

/// Annual energy production in MWh (positive).
pub fn windfarm_aep(layout: &[[f64; 2]], spec: &WindfarmSpec) -> Result<f64> {
    if spec.speeds.len() != spec.direction_frequencies.len() {
        return Err(CoreError::Parameter("one speed per direction required".into()));
    }
    check_overlap(layout)?;
    let step = 2.0 * PI / spec.direction_frequencies.len() as f64;
    let dirs: Vec<usize> = (0..spec.direction_frequencies.len()).collect();
    let watts = par::sum_with(spec.execution, &dirs, |&d| {
        let power: f64 =
            hub_speeds(layout, d as f64 * step, spec.speeds[d], spec).into_iter().map(|u| spec.turbine_power(u)).sum();
        spec.direction_frequencies[d] * power
    });
    Ok(watts * 8760.0 / 1e6)
}

pub fn layout_from_flat(x: &[f64]) -> Vec<[f64; 2]> {
    x.chunks_exact(2).map(|c| [c[0], c[1]]).collect()
}

/// Minimization objective: negated AEP plus the spacing penalty. Overlapping
/// turbines score the penalty alone.
pub fn windfarm_objective_value(x: &[f64], spec: &WindfarmSpec) -> Result<f64> {
    if x.len() != 2 * spec.num_turbines {
        return Err(CoreError::DimensionMismatch { expected: 2 * spec.num_turbines, got: x.len() });
    }
    let layout = layout_from_flat(x);
    let min_gap = spec.min_spacing * spec.rotor_diameter;
    let mut violation = 0.0;
    for i in 0..layout.len() {
        for j in i + 1..layout.len() {
            let d = (layout[i][0] - layout[j][0]).hypot(layout[i][1] - layout[j][1]);
            violation += (min_gap - d).max(0.0).powi(2);
        }
    }
    let penalty = spec.spacing_penalty * violation;
    match windfarm_aep(&layout, spec) {
        Ok(aep) => Ok(-aep + penalty),
        Err(CoreError::Domain { .. }) => Ok(penalty),
        Err(e) => Err(e),
    }
}

pub fn windfarm_objective(spec: WindfarmSpec) -> Result<ObjectiveSpec> {
    let n = spec.num_turbines;
    let size = spec.domain_size;
    let f = move |x: &[f64]| -> Result<Vec<f64>> { Ok(vec![windfarm_objective_value(x, &spec)?]) };
    ObjectiveSpec::new(format!("windfarm_{n}"), vec![0.0; 2 * n], vec![size; 2 * n], 1, Arc::new(FnObjective(f)))
}

/// Adapter for fallible closures.
pub struct FnObjective<F>(pub F);

impl<F> Objective for FnObjective<F>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync,
{
    fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        (self.0)(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cone_matches_closed_form() {
        // Cone with L/D = 1: tan(theta) = 0.5, Cd = 2 sin^2(theta) = 0.4.
        let cd = nosecone_drag(1.0, &NoseConeSpec::default()).unwrap();
        assert!((cd - 0.4).abs() < 1e-9, "{cd}");
    }

    #[test]
    fn power_law_near_reference_value() {
        let cd = nosecone_drag(0.9, &NoseConeSpec::default()).unwrap();
        assert!((cd - 0.3745).abs() < 0.02, "{cd}");
    }

    #[test]
    fn nosecone_domain() {
        let spec = NoseConeSpec::default();
        assert!(nosecone_drag(0.0005, &spec).is_err());
        assert!(nosecone_drag(1.01, &spec).is_err());
        // Near-flat face approaches the Newtonian flat plate.
        let blunt = nosecone_drag(0.001, &spec).unwrap();
        assert!(blunt > 1.9 && blunt <= 2.0, "{blunt}");
    }

    #[test]
    fn nosecone_is_continuous() {
        let spec = NoseConeSpec::default();
        for i in 1..=100 {
            let n = i as f64 / 100.0;
            let a = nosecone_drag(n, &spec).unwrap();
            let b = nosecone_drag((n + 1e-6).min(1.0), &spec).unwrap();
            assert!((a - b).abs() < 1e-4, "n = {n}");
        }
    }

    #[test]
    fn area_mach_inversion() {
        assert_eq!(supersonic_mach(1.0, 1.4).unwrap(), 1.0);
        let m = supersonic_mach(4.0, 1.4).unwrap();
        assert!((m - 2.94).abs() < 0.01, "{m}");
        assert!(supersonic_mach(0.5, 1.4).is_err());
    }

    #[test]
    fn straight_nozzle_exit_angle() {
        let spec = NozzleSpec::default();
        let (l, ri, ro) = (spec.length, spec.inlet_radius, spec.outlet_radius);
        let ctrl = [l / 3.0, ri + (ro - ri) / 3.0, 2.0 * l / 3.0, ri + 2.0 * (ro - ri) / 3.0];
        let exit = nozzle_exit(ctrl, &spec).unwrap().unwrap();
        let theta = ((ro - ri) / l).atan();
        assert!((exit.wall_angle - theta).abs() < 1e-12);
        assert!((exit.radial_velocity - exit.speed * theta.sin()).abs() < 1e-9);
        assert!(exit.radial_velocity > 0.0);
    }

    #[test]
    fn horizontal_exit_has_no_radial_velocity() {
        let spec = NozzleSpec::default();
        let v = nozzle_objective_value([1.5, 1.2, 3.5, spec.outlet_radius], &spec).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn nozzle_degenerate_and_infeasible() {
        let spec = NozzleSpec { length: 0.0, outlet_radius: 1.0, ..NozzleSpec::default() };
        assert!(nozzle_exit([0.0, 1.0, 0.0, 1.0], &spec).is_err());
        let spec = NozzleSpec::default();
        // Control points far below the axis pull the wall through r = 0.
        assert_eq!(nozzle_objective_value([1.0, -5.0, 4.0, -5.0], &spec).unwrap(), spec.infeasible_penalty);
        // Coincident exit control point falls back to the P3 - P1 direction.
        let e = nozzle_exit([2.5, 2.0, 5.0, 2.0], &spec).unwrap().unwrap();
        assert_eq!(e.wall_angle, 0.0);
    }

    #[test]
    fn heat_exact_quadratic() {
        let spec = HeatSpec::new(2);
        let t: Vec<f64> = [1.0 / 3.0, 2.0 / 3.0].iter().map(|x| -5.0 * x * x + 6.0 * x).collect();
        assert!(heat_residual_loss(&t, &spec).unwrap() < 1e-20);
    }

    #[test]
    fn heat_linear_profile() {
        for n in [1, 3, 8] {
            let spec = HeatSpec::new(n);
            let t: Vec<f64> = (1..=n).map(|i| i as f64 * spec.dx()).collect();
            let loss = heat_residual_loss(&t, &spec).unwrap();
            assert!((loss - 100.0 * n as f64).abs() < 1e-8, "{loss}");
        }
    }

    #[test]
    fn heat_single_node_minimizer() {
        let spec = HeatSpec::new(1);
        assert!(heat_residual_loss(&[1.75], &spec).unwrap() < 1e-24);
        assert!(heat_residual_loss(&[1.7], &spec).unwrap() > 0.0);
        assert!(heat_residual_loss(&[1.0, 2.0], &spec).is_err());
    }

    fn single_direction(mut spec: WindfarmSpec) -> WindfarmSpec {
        spec.direction_frequencies = vec![1.0];
        spec.speeds = vec![WINDFARM_MEAN_SPEED];
        spec
    }

    #[test]
    fn single_turbine_is_layout_invariant() {
        let spec = WindfarmSpec::new(1);
        let a = windfarm_aep(&[[100.0, 200.0]], &spec).unwrap();
        let b = windfarm_aep(&[[900.0, 10.0]], &spec).unwrap();
        let expected = spec.turbine_power(8.0) * 8760.0 / 1e6;
        assert!((a - b).abs() < 1e-9 && (a - expected).abs() < 1e-6);
    }

    #[test]
    fn side_by_side_turbines_do_not_interact() {
        let spec = single_direction(WindfarmSpec::new(2));
        let one = windfarm_aep(&[[500.0, 500.0]], &spec).unwrap();
        let two = windfarm_aep(&[[500.0, 200.0], [500.0, 800.0]], &spec).unwrap();
        assert!((two - 2.0 * one).abs() < 1e-9);
    }

    #[test]
    fn inline_turbines_follow_jensen() {
        let spec = single_direction(WindfarmSpec::new(2));
        let d = spec.rotor_diameter;
        let speeds = hub_speeds(&[[100.0, 500.0], [100.0 + 5.0 * d, 500.0]], 0.0, 8.0, &spec);
        let expected = (1.0 - 0.2f64.sqrt()) / (1.0 + 0.05 * 10.0f64).powi(2);
        assert!(((1.0 - speeds[1] / 8.0) - expected).abs() < 1e-12);
        assert_eq!(speeds[0], 8.0);
        assert!(windfarm_aep(&[[1.0, 1.0], [1.0, 1.0]], &spec).is_err());
    }

    #[test]
    fn spacing_penalty_applies() {
        let spec = WindfarmSpec::new(2);
        let spread = windfarm_objective_value(&[100.0, 100.0, 900.0, 900.0], &spec).unwrap();
        let cramped = windfarm_objective_value(&[100.0, 100.0, 150.0, 100.0], &spec).unwrap();
        let stacked = windfarm_objective_value(&[100.0, 100.0, 100.0, 100.0], &spec).unwrap();
        assert!(spread < 0.0);
        assert!(cramped > spread);
        assert!(stacked > 0.0);
    }

    #[test]
    fn sampled_speeds_are_seeded() {
        let a = WindfarmSpec::new(2).with_sampled_speeds(3);
        let b = WindfarmSpec::new(2).with_sampled_speeds(3);
        assert_eq!(a.speeds, b.speeds);
        assert_ne!(a.speeds, WindfarmSpec::new(2).with_sampled_speeds(4).speeds);
    }
}
