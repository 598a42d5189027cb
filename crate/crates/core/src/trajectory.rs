//! Classical free fall: the second-order perturbative solution and the
//! adaptive numerical solution of the full Newtonian equation.
//!
//! The perturbative transverse motion is the straight line `y_i + v_yi t`,
//! which differs from the exact gradient at order `1/R`; the resulting error
//! in `x` is of order `1/R³`.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_positive, Error, Result};
use crate::ode::{self, OdeSystem, StepperConfig, Tolerances};
use crate::potential::GravityModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialConditions {
    /// Displaced position `(x_i, y_i, z_i)` (m).
    pub position: Vector3<f64>,
    /// Velocity (m/s).
    pub velocity: Vector3<f64>,
}

impl InitialConditions {
    pub fn new(position: Vector3<f64>, velocity: Vector3<f64>) -> Result<Self> {
        for i in 0..3 {
            ensure_finite("position", position[i])?;
            ensure_finite("velocity", velocity[i])?;
        }
        Ok(Self { position, velocity })
    }

    pub fn at_rest() -> Self {
        Self {
            position: Vector3::zeros(),
            velocity: Vector3::zeros(),
        }
    }
}

/// Time-dependent coefficients of the second-order solution.
///
/// `alpha` is dimensionless, `beta` in s, `gamma` in m, `alpha_t` in 1/m,
/// `beta_t` in s²/m and `gamma_t` in s/m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbativeCoefficients {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub alpha_t: f64,
    pub beta_t: f64,
    pub gamma_t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
}

/// Coefficients at time `t` for local acceleration `g` and inverse distance
/// `inv_r` (`inv_r = 0` gives uniform gravity).
pub fn perturbative_coefficients(g: f64, inv_r: f64, t: f64) -> PerturbativeCoefficients {
    let t2 = t * t;
    let gt2 = g * t2;
    let u = gt2 * inv_r;
    let u2 = u * u;
    let a2 = inv_r * inv_r;
    PerturbativeCoefficients {
        alpha: 1.0 + u + 5.0 * u2 / 12.0,
        beta: t * (1.0 + u / 3.0 + 11.0 * u2 / 60.0),
        gamma: 0.5 * gt2 * (1.0 + u / 6.0 + 11.0 * u2 / 180.0),
        alpha_t: 0.75 * gt2 * a2,
        beta_t: g * t2 * t2 * a2 / 8.0,
        gamma_t: 0.5 * g * t2 * t * a2,
    }
}

/// Zeroth-order solution `x_i + v_xi t - g t²/2`.
pub fn x0(ic: &InitialConditions, g: f64, t: f64) -> f64 {
    ic.position.x + ic.velocity.x * t - 0.5 * g * t * t
}

/// First-order coefficient `x₁(t)`; the correction is `x₁/R`.
pub fn x1(ic: &InitialConditions, g: f64, t: f64) -> f64 {
    g * t * t * (ic.position.x + ic.velocity.x * t / 3.0 - g * t * t / 12.0)
}

/// Second-order coefficient `x₂(t)`; the correction is `x₂/R²`.
pub fn x2(ic: &InitialConditions, g: f64, t: f64) -> f64 {
    let (r, v) = (&ic.position, &ic.velocity);
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t2 * t2;
    let g2 = g * g;
    5.0 * g2 * t4 / 12.0 * r.x + 11.0 * g2 * t4 * t / 60.0 * v.x
        - 11.0 * g2 * g * t4 * t2 / 360.0
        - 0.75 * g * t2 * (2.0 * r.x * r.x - r.y * r.y - r.z * r.z)
        - g * t4 / 8.0 * (2.0 * v.x * v.x - v.y * v.y - v.z * v.z)
        - 0.5 * g * t3 * (2.0 * r.x * v.x - r.y * v.y - r.z * v.z)
}

/// Second-order perturbative x-position.
pub fn x_perturbative(ic: &InitialConditions, g: f64, inv_r: f64, t: f64) -> f64 {
    let c = perturbative_coefficients(g, inv_r, t);
    let (r, v) = (&ic.position, &ic.velocity);
    c.alpha * r.x + c.beta * v.x
        - c.gamma
        - c.alpha_t * (2.0 * r.x * r.x - r.y * r.y - r.z * r.z)
        - c.beta_t * (2.0 * v.x * v.x - v.y * v.y - v.z * v.z)
        - c.gamma_t * (2.0 * r.x * v.x - r.y * v.y - r.z * v.z)
}

/// Perturbative transverse positions `(y_i + v_yi t, z_i + v_zi t)`.
pub fn transverse_perturbative(ic: &InitialConditions, t: f64) -> (f64, f64) {
    (ic.position.y + ic.velocity.y * t, ic.position.z + ic.velocity.z * t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationOptions {
    pub rel_tol: f64,
    /// Absolute tolerance on positions (m); defaults to `1e-15 R`.
    pub abs_tol: Option<f64>,
    pub max_steps: usize,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            abs_tol: None,
            max_steps: 5_000_000,
        }
    }
}

impl IntegrationOptions {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }
}

/// Dimensionless form of `r'' = a(r)`: lengths in units of `length`, times
/// in units of `time`.
struct ScaledNewton<'a> {
    model: &'a GravityModel,
    length: f64,
    time: f64,
}

impl ScaledNewton<'_> {
    fn new(model: &GravityModel) -> ScaledNewton<'_> {
        let length = model.radius().unwrap_or(1.0);
        let g = model.g();
        let time = if g > 0.0 { (length / g).sqrt() } else { 1.0 };
        ScaledNewton { model, length, time }
    }

    fn velocity_scale(&self) -> f64 {
        self.length / self.time
    }
}

impl OdeSystem<6> for ScaledNewton<'_> {
    fn rhs(&self, _t: f64, y: &[f64; 6], d: &mut [f64; 6]) -> Result<()> {
        let r = Vector3::new(y[0], y[1], y[2]) * self.length;
        let a = self.model.acceleration(&r)? * (self.time * self.time / self.length);
        d[0] = y[3];
        d[1] = y[4];
        d[2] = y[5];
        d[3] = a.x;
        d[4] = a.y;
        d[5] = a.z;
        Ok(())
    }
}

/// Adaptive numerical solution of `r'' = a(r)` for `model`, reported at each
/// of `times` (monotone, starting from `t = 0`; negative times integrate
/// backwards).
pub fn integrate_exact(
    model: &GravityModel,
    ic: &InitialConditions,
    times: &[f64],
    opts: &IntegrationOptions,
) -> Result<Vec<TrajectorySample>> {
    integrate_from(model, 0.0, ic, times, opts)
}

/// As [`integrate_exact`] but starting at `t0`.
pub fn integrate_from(
    model: &GravityModel,
    t0: f64,
    ic: &InitialConditions,
    times: &[f64],
    opts: &IntegrationOptions,
) -> Result<Vec<TrajectorySample>> {
    let sys = ScaledNewton::new(model);
    let vs = sys.velocity_scale();
    let abs_si = opts.abs_tol.unwrap_or(1e-15 * sys.length);
    ensure_positive("abs_tol", abs_si)?;
    let cfg = StepperConfig {
        tol: Tolerances {
            rel: opts.rel_tol,
            abs: abs_si / sys.length,
        },
        max_steps: opts.max_steps,
        initial_step: None,
    };
    let y0 = [
        ic.position.x / sys.length,
        ic.position.y / sys.length,
        ic.position.z / sys.length,
        ic.velocity.x / vs,
        ic.velocity.y / vs,
        ic.velocity.z / vs,
    ];
    let scaled_times: Vec<f64> = times.iter().map(|t| t / sys.time).collect();
    let (ys, _) = ode::integrate(&sys, t0 / sys.time, y0, &scaled_times, &cfg).map_err(|e| match e {
        Error::StepSizeUnderflow { t, h } => Error::StepSizeUnderflow {
            t: t * sys.time,
            h: h * sys.time,
        },
        Error::TooManySteps { max_steps, t, target } => Error::TooManySteps {
            max_steps,
            t: t * sys.time,
            target: target * sys.time,
        },
        other => other,
    })?;
    Ok(times
        .iter()
        .zip(ys)
        .map(|(&t, y)| TrajectorySample {
            t,
            position: Vector3::new(y[0], y[1], y[2]) * sys.length,
            velocity: Vector3::new(y[3], y[4], y[5]) * vs,
        })
        .collect())
}

/// Specific mechanical energy `v²/2 + φ(r)` in the model's own potential.
pub fn specific_energy(model: &GravityModel, sample: &TrajectorySample) -> Result<f64> {
    Ok(0.5 * sample.velocity.norm_squared() + model.potential(&sample.position)?)
}

/// `n` uniformly spaced times on `[0, t_end]`, endpoints included.
pub fn uniform_times(t_end: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![t_end],
        _ => (0..n).map(|i| t_end * i as f64 / (n - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualPoint {
    pub t: f64,
    /// `x₂(t)/R²` from the closed form.
    pub analytic: f64,
    /// `x_num(t) - x₀(t) - x₁(t)/R` from the numerical solution.
    pub numeric: f64,
}

/// Second-order correction from the closed form alongside the same quantity
/// extracted from the numerical trajectory.
pub fn second_order_residual(
    model: &GravityModel,
    ic: &InitialConditions,
    times: &[f64],
    opts: &IntegrationOptions,
) -> Result<Vec<ResidualPoint>> {
    let g = model.g();
    let inv_r = model.inv_radius();
    let samples = integrate_exact(model, ic, times, opts)?;
    Ok(samples
        .iter()
        .map(|s| {
            let t = s.t;
            ResidualPoint {
                t,
                analytic: x2(ic, g, t) * inv_r * inv_r,
                numeric: s.position.x - x0(ic, g, t) - x1(ic, g, t) * inv_r,
            }
        })
        .collect())
}

/// Largest `|analytic - numeric|` relative to the largest `|analytic|`.
pub fn residual_deviation(points: &[ResidualPoint]) -> f64 {
    let peak = points.iter().map(|p| p.analytic.abs()).fold(0.0, f64::max);
    let dev = points
        .iter()
        .map(|p| (p.analytic - p.numeric).abs())
        .fold(0.0, f64::max);
    dev / peak
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::G_ROUNDED;
    use crate::potential::GravitySource;

    fn lab() -> GravitySource {
        GravitySource::new(G_ROUNDED, 1e3, 1.5).unwrap()
    }

    fn mm(v: [f64; 3]) -> InitialConditions {
        InitialConditions::new(Vector3::zeros(), Vector3::new(v[0], v[1], v[2]) * 1e-3).unwrap()
    }

    #[test]
    fn coefficients_at_t0_and_uniform_limit() {
        let c = perturbative_coefficients(2.0, 0.5, 0.0);
        assert_eq!(
            (c.alpha, c.beta, c.gamma, c.alpha_t, c.beta_t, c.gamma_t),
            (1.0, 0.0, 0.0, 0.0, 0.0, 0.0)
        );
        let t = 3.0;
        let c = perturbative_coefficients(9.8, 0.0, t);
        assert_eq!(c.alpha, 1.0);
        assert_eq!(c.beta, t);
        assert_eq!(c.gamma, 0.5 * 9.8 * t * t);
        assert_eq!((c.alpha_t, c.beta_t, c.gamma_t), (0.0, 0.0, 0.0));
    }

    #[test]
    fn alpha_term_by_term() {
        let c = perturbative_coefficients(2.964e-8, 1.0 / 1.5, 10.0);
        let first = c.alpha - 1.0;
        assert!((first / 1.976e-6 - 1.0).abs() < 1e-5, "{first:e}");
        let second = first - 2.964e-8 * 100.0 / 1.5;
        assert!((second - 1.627e-12).abs() < 2e-15, "{second:e}");
    }

    #[test]
    fn rest_at_origin_is_pure_fall() {
        let ic = InitialConditions::at_rest();
        let (g, ir, t) = (2.964e-8, 1.0 / 1.5, 7.0);
        let c = perturbative_coefficients(g, ir, t);
        assert_eq!(x_perturbative(&ic, g, ir, t), -c.gamma);
    }

    #[test]
    fn uniform_limit_matches_kinematics() {
        let ic = InitialConditions::new(Vector3::new(0.3, 0.1, -0.2), Vector3::new(1.5, 0.4, 0.7)).unwrap();
        let t = 2.5;
        let x = x_perturbative(&ic, 9.8, 0.0, t);
        assert!((x - (0.3 + 1.5 * t - 0.5 * 9.8 * t * t)).abs() < 1e-12);
    }

    #[test]
    fn series_form_equals_coefficient_form() {
        let ic = InitialConditions::new(Vector3::new(1e-3, -2e-3, 5e-4), Vector3::new(1e-3, 2e-3, -1e-3)).unwrap();
        let s = lab();
        let (g, ir) = (s.g(), 1.0 / s.distance);
        for t in [0.5, 3.0, 10.0] {
            let series = x0(&ic, g, t) + x1(&ic, g, t) * ir + x2(&ic, g, t) * ir * ir;
            let coeff = x_perturbative(&ic, g, ir, t);
            assert!((series - coeff).abs() < 1e-17, "t={t}");
        }
    }

    #[test]
    fn uniform_gravity_integration_is_polynomial_exact() {
        let model = GravityModel::uniform(9.8);
        let ic = InitialConditions::new(Vector3::new(0.5, 0.1, 0.0), Vector3::new(2.0, -1.0, 0.3)).unwrap();
        let times = uniform_times(3.0, 31);
        let s = integrate_exact(&model, &ic, &times, &IntegrationOptions::default()).unwrap();
        for p in &s {
            let exact = 0.5 + 2.0 * p.t - 4.9 * p.t * p.t;
            assert!(
                (p.position.x - exact).abs() <= 1e-12 * exact.abs().max(1.0),
                "t={}",
                p.t
            );
            assert!((p.position.y - (0.1 - p.t)).abs() < 1e-12);
        }
    }

    #[test]
    fn energy_is_conserved_for_point_source() {
        let model = GravityModel::exact(lab());
        let ic = mm([1.0, 1.0, 1.0]);
        let times = uniform_times(10.0, 11);
        let s = integrate_exact(&model, &ic, &times, &IntegrationOptions::default()).unwrap();
        let e0 = specific_energy(&model, &s[0]).unwrap();
        for p in &s {
            let drift = ((specific_energy(&model, p).unwrap() - e0) / e0).abs();
            assert!(drift < 1e-10, "{drift:e}");
        }
    }

    #[test]
    fn time_reversal_returns_initial_state() {
        let model = GravityModel::exact(lab());
        let ic = mm([2.0, 1.0, 1.0]);
        let opts = IntegrationOptions::default();
        let fwd = integrate_exact(&model, &ic, &[10.0], &opts).unwrap()[0];
        let back_ic = InitialConditions::new(fwd.position, fwd.velocity).unwrap();
        let back = integrate_from(&model, 10.0, &back_ic, &[0.0], &opts).unwrap()[0];
        let r = 1.5;
        assert!((back.position - ic.position).amax() / r <= 10.0 * opts.rel_tol);
        let vs = (r * model.g()).sqrt();
        let dv = (back.velocity - ic.velocity).amax() / vs;
        assert!(dv <= 10.0 * opts.rel_tol, "{dv:e}");
    }

    #[test]
    fn residual_starts_at_zero() {
        let model = GravityModel::exact(lab());
        let pts = second_order_residual(
            &model,
            &mm([2.0, 1.0, 1.0]),
            &[0.0, 1.0],
            &IntegrationOptions::default(),
        )
        .unwrap();
        assert_eq!(pts[0].analytic, 0.0);
        assert_eq!(pts[0].numeric, 0.0);
    }

    #[test]
    fn uniform_model_residual_vanishes() {
        let model = GravityModel::uniform(lab().g());
        let pts = second_order_residual(
            &model,
            &mm([1.0, 1.0, 1.0]),
            &uniform_times(10.0, 50),
            &IntegrationOptions::default(),
        )
        .unwrap();
        for p in pts {
            assert_eq!(p.analytic, 0.0);
            assert!(p.numeric.abs() < 1e-16, "{:e}", p.numeric);
        }
    }

    #[test]
    fn residual_curves_are_distinct_and_ordered() {
        let model = GravityModel::exact(lab());
        let times = uniform_times(10.0, 50);
        let opts = IntegrationOptions::default();
        let end: Vec<f64> = [[1.0, 1.0, 1.0], [2.0, 1.0, 1.0], [1.0, 2.0, 1.0]]
            .iter()
            .map(|v| {
                second_order_residual(&model, &mm(*v), &times, &opts)
                    .unwrap()
                    .last()
                    .unwrap()
                    .analytic
            })
            .collect();
        // (2,1,1) falls below, (1,2,1) rises above, (1,1,1) stays near zero
        assert!(end[1] < end[0] && end[0] < end[2]);
    }

    #[test]
    fn singular_trajectory_errors() {
        let model = GravityModel::exact(lab());
        let ic = InitialConditions::new(Vector3::zeros(), Vector3::new(-1.0, 0.0, 0.0)).unwrap();
        let r = integrate_exact(&model, &ic, &[5.0], &IntegrationOptions::default());
        assert!(r.is_err());
    }
}
