//! Ensemble and wave-packet position averages under the second-order solution.
//!
//! The averaged position operator depends on the initial state only through
//! its first and second moments, including the symmetrized position-velocity
//! correlations. No mass enters: the mean motion is classical.

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_positive, Error, Result};
use crate::potential::GravityModel;
use crate::trajectory::{integrate_exact, InitialConditions, IntegrationOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateMoments {
    pub mean_r: Vector3<f64>,
    pub mean_v: Vector3<f64>,
    /// `⟨x²⟩, ⟨y²⟩, ⟨z²⟩`.
    pub second_r: Vector3<f64>,
    /// `⟨v_x²⟩, ⟨v_y²⟩, ⟨v_z²⟩`.
    pub second_v: Vector3<f64>,
    /// `⟨x v_x + v_x x⟩ / 2` per axis.
    pub sym_rv: Vector3<f64>,
}

impl StateMoments {
    /// Raw moments; rejected unless every axis has a positive semidefinite
    /// covariance.
    pub fn new(
        mean_r: Vector3<f64>,
        mean_v: Vector3<f64>,
        second_r: Vector3<f64>,
        second_v: Vector3<f64>,
        sym_rv: Vector3<f64>,
    ) -> Result<Self> {
        let m = Self {
            mean_r,
            mean_v,
            second_r,
            second_v,
            sym_rv,
        };
        for i in 0..3 {
            for v in [mean_r[i], mean_v[i], second_r[i], second_v[i], sym_rv[i]] {
                ensure_finite("moments", v)?;
            }
            let var_r = m.variance_r()[i];
            let var_v = m.variance_v()[i];
            let slack_r = 1e-12 * second_r[i].abs();
            let slack_v = 1e-12 * second_v[i].abs();
            if var_r < -slack_r || var_v < -slack_v {
                return Err(Error::InvalidParameter {
                    name: "moments",
                    reason: format!("negative variance on axis {i}"),
                });
            }
            let cov = m.covariance_rv()[i];
            let bound = (var_r.max(0.0) * var_v.max(0.0)).sqrt();
            if cov.abs() > bound + 1e-12 * (second_r[i] * second_v[i]).abs().sqrt() {
                return Err(Error::InvalidParameter {
                    name: "moments",
                    reason: format!("position-velocity covariance exceeds σ_x σ_v on axis {i}"),
                });
            }
        }
        Ok(m)
    }

    /// Moments of a single phase-space point.
    pub fn point(r: Vector3<f64>, v: Vector3<f64>) -> Self {
        Self {
            mean_r: r,
            mean_v: v,
            second_r: r.component_mul(&r),
            second_v: v.component_mul(&v),
            sym_rv: r.component_mul(&v),
        }
    }

    pub fn variance_r(&self) -> Vector3<f64> {
        self.second_r - self.mean_r.component_mul(&self.mean_r)
    }

    pub fn variance_v(&self) -> Vector3<f64> {
        self.second_v - self.mean_v.component_mul(&self.mean_v)
    }

    pub fn covariance_rv(&self) -> Vector3<f64> {
        self.sym_rv - self.mean_r.component_mul(&self.mean_v)
    }
}

/// Uncorrelated Gaussian ensemble with per-axis spreads.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianEnsemble {
    pub mean_r: Vector3<f64>,
    pub mean_v: Vector3<f64>,
    pub sigma_r: Vector3<f64>,
    pub sigma_v: Vector3<f64>,
}

impl GaussianEnsemble {
    pub fn new(
        mean_r: Vector3<f64>,
        mean_v: Vector3<f64>,
        sigma_r: Vector3<f64>,
        sigma_v: Vector3<f64>,
    ) -> Result<Self> {
        for i in 0..3 {
            ensure_finite("mean_r", mean_r[i])?;
            ensure_finite("mean_v", mean_v[i])?;
            ensure_positive("sigma_x", sigma_r[i])?;
            ensure_positive("sigma_v", sigma_v[i])?;
        }
        Ok(Self {
            mean_r,
            mean_v,
            sigma_r,
            sigma_v,
        })
    }

    pub fn isotropic(sigma_x: f64, sigma_v: f64, mean_r: Vector3<f64>, mean_v: Vector3<f64>) -> Result<Self> {
        Self::new(mean_r, mean_v, Vector3::repeat(sigma_x), Vector3::repeat(sigma_v))
    }

    pub fn moments(&self) -> StateMoments {
        StateMoments {
            mean_r: self.mean_r,
            mean_v: self.mean_v,
            second_r: self.sigma_r.component_mul(&self.sigma_r) + self.mean_r.component_mul(&self.mean_r),
            second_v: self.sigma_v.component_mul(&self.sigma_v) + self.mean_v.component_mul(&self.mean_v),
            sym_rv: self.mean_r.component_mul(&self.mean_v),
        }
    }

    /// Draws one initial condition; the `index`-th sample of a run always
    /// comes from substream `index` of the seed.
    pub fn sample(&self, seed: u64, index: u64) -> InitialConditions {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let mut z = [0.0f64; 6];
        for zi in &mut z {
            *zi = StandardNormal.sample(&mut rng);
        }
        InitialConditions {
            position: self.mean_r + self.sigma_r.component_mul(&Vector3::new(z[0], z[1], z[2])),
            velocity: self.mean_v + self.sigma_v.component_mul(&Vector3::new(z[3], z[4], z[5])),
        }
    }
}

/// Moments of an uncorrelated Gaussian with the same spread on every axis.
pub fn gaussian_moments(
    sigma_x: f64,
    sigma_v: f64,
    mean_r: Vector3<f64>,
    mean_v: Vector3<f64>,
) -> Result<StateMoments> {
    Ok(GaussianEnsemble::isotropic(sigma_x, sigma_v, mean_r, mean_v)?.moments())
}

/// `⟨x(t)⟩` under the second-order solution for local acceleration `g` and
/// inverse distance `inv_r`.
///
/// Evaluated as `⟨x₀⟩ + ⟨x₁⟩/R + ⟨x₂⟩/R²` with the operator products
/// replaced by the corresponding moments.
pub fn positional_average(m: &StateMoments, g: f64, inv_r: f64, t: f64) -> f64 {
    let (r, v) = (&m.mean_r, &m.mean_v);
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t2 * t2;
    let g2 = g * g;

    let mean0 = r.x + v.x * t - 0.5 * g * t2;
    let mean1 = g * t2 * (r.x + v.x * t / 3.0 - g * t2 / 12.0);
    let quad_r = 2.0 * m.second_r.x - m.second_r.y - m.second_r.z;
    let quad_v = 2.0 * m.second_v.x - m.second_v.y - m.second_v.z;
    // ⟨x v + v x⟩ = 2 sym_rv
    let cross = -0.5 * g * t3 * (2.0 * m.sym_rv.x) + 0.25 * g * t3 * (2.0 * m.sym_rv.y + 2.0 * m.sym_rv.z);
    let mean2 = 5.0 * g2 * t4 / 12.0 * r.x + 11.0 * g2 * t4 * t / 60.0 * v.x
        - 11.0 * g2 * g * t4 * t2 / 360.0
        - 0.75 * g * t2 * quad_r
        - 0.125 * g * t4 * quad_v
        + cross;
    mean0 + inv_r * mean1 + inv_r * inv_r * mean2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Sample mean of `x(t)` over trajectories of `model` integrated from
/// Gaussian initial conditions. Bit-identical for a fixed seed regardless of
/// the number of worker threads.
pub fn monte_carlo_average(
    model: &GravityModel,
    ensemble: &GaussianEnsemble,
    t: f64,
    n_samples: usize,
    seed: u64,
    opts: &IntegrationOptions,
) -> Result<McEstimate> {
    if n_samples < 1000 {
        return Err(Error::InvalidParameter {
            name: "n_samples",
            reason: format!("at least 1000 samples required, got {n_samples}"),
        });
    }
    let xs = final_positions(model, ensemble, t, n_samples, seed, opts)?;
    let xs: Vec<f64> = xs.iter().map(|r| r.x).collect();
    Ok(mean_and_error(&xs))
}

pub(crate) fn final_positions(
    model: &GravityModel,
    ensemble: &GaussianEnsemble,
    t: f64,
    n_samples: usize,
    seed: u64,
    opts: &IntegrationOptions,
) -> Result<Vec<Vector3<f64>>> {
    (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let ic = ensemble.sample(seed, i);
            Ok(integrate_exact(model, &ic, &[t], opts)?[0].position)
        })
        .collect()
}

fn mean_and_error(xs: &[f64]) -> McEstimate {
    let n = xs.len() as f64;
    // shift by the first sample to keep the variance well conditioned
    let shift = xs[0];
    let mut s = 0.0;
    let mut s2 = 0.0;
    for &x in xs {
        let d = x - shift;
        s += d;
        s2 += d * d;
    }
    let mean_d = s / n;
    let var = (s2 - n * mean_d * mean_d) / (n - 1.0);
    McEstimate {
        mean: shift + mean_d,
        std_error: (var.max(0.0) / n).sqrt(),
        samples: xs.len(),
    }
}

/// Rough upper bound on the third-order (`1/R³`) terms neglected by
/// [`positional_average`], used as a bias allowance when comparing against
/// full-potential Monte Carlo.
pub fn third_order_allowance(ensemble: &GaussianEnsemble, g: f64, inv_r: f64, t: f64) -> f64 {
    let reach = ensemble.mean_r.norm()
        + ensemble.mean_v.norm() * t
        + 0.5 * g * t * t
        + 3.0 * (ensemble.sigma_r.norm() + ensemble.sigma_v.norm() * t);
    2.0 * g * t * t * (reach * inv_r).powi(3)
}
