//! Semiclassical Wigner dynamics of a freely falling Gaussian state.
//!
//! Positions are displaced coordinates along the source axis with gravity
//! pulling towards negative `x`. The quantum correction is evaluated through
//! its closed one-dimensional marginal, which equals `-(ε_q t⁴/4) ∂³ₓ P_u`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_positive, Error, Result};
use crate::moments::{final_positions, GaussianEnsemble};
use crate::potential::{epsilon_q_local, GravityModel};
use crate::trajectory::IntegrationOptions;

/// Default lower bound on `σ_v` below which the correction is refused.
pub const SIGMA_V_FLOOR: f64 = 1e-12;

/// Default histogram resolution.
pub const DEFAULT_BINS: usize = 101;

/// Half-width of histograms and profiles in units of the packet spread.
pub const PROFILE_HALF_WIDTH: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianState1D {
    pub sigma_x: f64,
    pub sigma_v: f64,
    pub mean_x: f64,
    pub mean_v: f64,
}

impl GaussianState1D {
    pub fn new(sigma_x: f64, sigma_v: f64, mean_x: f64, mean_v: f64) -> Result<Self> {
        ensure_positive("sigma_x", sigma_x)?;
        ensure_positive("sigma_v", sigma_v)?;
        ensure_finite("mean_x", mean_x)?;
        ensure_finite("mean_v", mean_v)?;
        Ok(Self {
            sigma_x,
            sigma_v,
            mean_x,
            mean_v,
        })
    }

    /// Zero-mean state.
    pub fn centred(sigma_x: f64, sigma_v: f64) -> Result<Self> {
        Self::new(sigma_x, sigma_v, 0.0, 0.0)
    }

    /// Initial phase-space density (s/m²).
    pub fn f_initial(&self, x: f64, v: f64) -> f64 {
        let a = (x - self.mean_x) / self.sigma_x;
        let b = (v - self.mean_v) / self.sigma_v;
        (-0.5 * (a * a + b * b)).exp() / (2.0 * PI * self.sigma_x * self.sigma_v)
    }

    /// Phase-space density after free fall for `t` under uniform `g`: the
    /// initial density pulled back along the classical flow.
    pub fn f_uniform(&self, x: f64, v: f64, g: f64, t: f64) -> f64 {
        self.f_initial(x - v * t - 0.5 * g * t * t, v + g * t)
    }

    /// Width of the position marginal at time `t`.
    pub fn spread(&self, t: f64) -> f64 {
        self.sigma_x.hypot(self.sigma_v * t)
    }

    /// Centre of the position marginal at time `t`.
    pub fn centre(&self, g: f64, t: f64) -> f64 {
        self.mean_x + self.mean_v * t - 0.5 * g * t * t
    }

    pub fn xi(&self, x: f64, g: f64, t: f64) -> f64 {
        (x - self.centre(g, t)) / self.spread(t)
    }

    /// Position density under uniform gravity (1/m).
    pub fn p_uniform(&self, x: f64, g: f64, t: f64) -> f64 {
        let xi = self.xi(x, g, t);
        (-0.5 * xi * xi).exp() / ((2.0 * PI).sqrt() * self.spread(t))
    }
}

/// Source and particle parameters entering the quantum correction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FallSetup {
    /// Local acceleration (m/s²).
    pub g: f64,
    /// Inverse distance to the source (1/m).
    pub inv_r: f64,
    pub mass: f64,
    pub hbar: f64,
    pub sigma_v_floor: f64,
}

impl FallSetup {
    pub fn new(g: f64, inv_r: f64, mass: f64, hbar: f64) -> Result<Self> {
        ensure_finite("g", g)?;
        ensure_finite("1/R", inv_r)?;
        if inv_r < 0.0 {
            return Err(Error::InvalidParameter {
                name: "1/R",
                reason: format!("must be non-negative, got {inv_r:e}"),
            });
        }
        ensure_positive("m", mass)?;
        ensure_positive("hbar", hbar)?;
        Ok(Self {
            g,
            inv_r,
            mass,
            hbar,
            sigma_v_floor: SIGMA_V_FLOOR,
        })
    }

    pub fn with_floor(self, sigma_v_floor: f64) -> Self {
        Self { sigma_v_floor, ..self }
    }

    pub fn epsilon_q(&self) -> f64 {
        epsilon_q_local(self.g, self.inv_r, self.mass, self.hbar)
    }

    /// `ε_q t⁴ / 4`, the factor multiplying `-∂³ₓ P_u`.
    pub fn correction_prefactor(&self, t: f64) -> f64 {
        0.25 * self.epsilon_q() * t.powi(4)
    }

    fn check_sigma_v(&self, state: &GaussianState1D) -> Result<()> {
        if state.sigma_v < self.sigma_v_floor {
            return Err(Error::SigmaVelocityFloor {
                sigma_v: state.sigma_v,
                floor: self.sigma_v_floor,
            });
        }
        Ok(())
    }
}

/// Characteristic density `g ħ² / (16 R² m² σ_v⁴)` (1/m).
pub fn p0(state: &GaussianState1D, setup: &FallSetup) -> Result<f64> {
    setup.check_sigma_v(state)?;
    let sv2 = state.sigma_v * state.sigma_v;
    Ok(setup.g * setup.hbar * setup.hbar * setup.inv_r * setup.inv_r / (16.0 * setup.mass * setup.mass * sv2 * sv2))
}

/// Amplitude `P₀ t⁴ / ((σ_x/σ_v)² + t²)²` of the correction profile (1/m).
pub fn pq_amplitude(state: &GaussianState1D, setup: &FallSetup, t: f64) -> Result<f64> {
    let ratio = state.sigma_x / state.sigma_v;
    let d = ratio * ratio + t * t;
    Ok(p0(state, setup)? * t.powi(4) / (d * d))
}

/// Quantum correction to the position density (1/m).
pub fn p_quantum(state: &GaussianState1D, setup: &FallSetup, x: f64, t: f64) -> Result<f64> {
    let amp = pq_amplitude(state, setup, t)?;
    let xi = state.xi(x, setup.g, t);
    Ok(amp * (xi * xi * xi - 3.0 * xi) * (-0.5 * xi * xi).exp() / (2.0 * PI).sqrt())
}

/// Panel-wise tanh-sinh integral of `f` over `[a, b]`.
fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize, tol: f64) -> Result<f64> {
    let w = (b - a) / panels as f64;
    let mut total = 0.0;
    let mut err = 0.0;
    for i in 0..panels {
        let lo = a + w * i as f64;
        let out = quadrature::integrate(&f, lo, lo + w, tol / panels as f64);
        total += out.integral;
        err += out.error_estimate;
    }
    if err.is_nan() || err > tol || !total.is_finite() {
        return Err(Error::QuadratureNonConvergence { estimate: err });
    }
    Ok(total)
}

/// Raw moments `∫ xⁿ P_q dx` for `n = 0..=3`.
pub fn pq_moments(state: &GaussianState1D, setup: &FallSetup, t: f64) -> Result<[f64; 4]> {
    let amp = pq_amplitude(state, setup, t)?;
    let s = state.spread(t);
    let c = state.centre(setup.g, t);
    let mut out = [0.0; 4];
    if amp == 0.0 {
        return Ok(out);
    }
    for (n, m) in out.iter_mut().enumerate() {
        // integrate in ξ and rescale so the quadrature sees O(1) numbers
        let f = |xi: f64| {
            let x = c + s * xi;
            x.powi(n as i32) * (xi * xi * xi - 3.0 * xi) * (-0.5 * xi * xi).exp()
        };
        let scale = (c.abs() + s).powi(n as i32);
        let integral = integrate(f, -14.0, 14.0, 28, 1e-12 * scale)?;
        *m = amp * s * integral / (2.0 * PI).sqrt();
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityProfile {
    pub t: f64,
    /// Sample points, or bin centres for histograms.
    pub x: Vec<f64>,
    /// Density (1/m).
    pub density: Vec<f64>,
    /// Set for histograms.
    pub bin_width: Option<f64>,
}

impl DensityProfile {
    /// Total weight: bin sum for histograms, trapezoid rule otherwise.
    pub fn integral(&self) -> f64 {
        match self.bin_width {
            Some(w) => self.density.iter().sum::<f64>() * w,
            None => self
                .x
                .windows(2)
                .zip(self.density.windows(2))
                .map(|(x, d)| 0.5 * (x[1] - x[0]) * (d[0] + d[1]))
                .sum(),
        }
    }

    pub fn mean(&self) -> f64 {
        let w: f64 = self.density.iter().sum();
        self.x.iter().zip(&self.density).map(|(x, d)| x * d).sum::<f64>() / w
    }
}

/// `P_u` and `P_q` on `n` evenly spaced points spanning the centre ± 6 spreads.
pub fn closed_form_profiles(
    state: &GaussianState1D,
    setup: &FallSetup,
    t: f64,
    n: usize,
) -> Result<(DensityProfile, DensityProfile)> {
    if n < 2 {
        return Err(Error::InvalidParameter {
            name: "points",
            reason: format!("need at least 2 points, got {n}"),
        });
    }
    let c = state.centre(setup.g, t);
    let half = PROFILE_HALF_WIDTH * state.spread(t);
    let x: Vec<f64> = (0..n)
        .map(|i| c - half + 2.0 * half * i as f64 / (n - 1) as f64)
        .collect();
    let pu = x.iter().map(|&xi| state.p_uniform(xi, setup.g, t)).collect();
    let pq = x
        .iter()
        .map(|&xi| p_quantum(state, setup, xi, t))
        .collect::<Result<Vec<_>>>()?;
    let mk = |density| DensityProfile {
        t,
        x: x.clone(),
        density,
        bin_width: None,
    };
    Ok((mk(pu), mk(pq)))
}

/// Monte Carlo histogram of `x(t)` for Gaussian initial conditions evolved
/// under `model`. Bins cover the uniform-gravity centre ± 6 spreads.
pub fn classical_density_mc(
    model: &GravityModel,
    ensemble: &GaussianEnsemble,
    t: f64,
    bins: usize,
    n_samples: usize,
    seed: u64,
    opts: &IntegrationOptions,
) -> Result<DensityProfile> {
    if n_samples < 10_000 {
        return Err(Error::InvalidParameter {
            name: "n_samples",
            reason: format!("at least 10000 samples required, got {n_samples}"),
        });
    }
    if bins == 0 {
        return Err(Error::InvalidParameter {
            name: "bins",
            reason: "must be positive".into(),
        });
    }
    let centre = ensemble.mean_r.x + ensemble.mean_v.x * t - 0.5 * model.g() * t * t;
    let half = PROFILE_HALF_WIDTH * ensemble.sigma_r.x.hypot(ensemble.sigma_v.x * t);
    let lo = centre - half;
    let width = 2.0 * half / bins as f64;
    let mut counts = vec![0u64; bins];
    for r in final_positions(model, ensemble, t, n_samples, seed, opts)? {
        let k = ((r.x - lo) / width).floor();
        if k >= 0.0 && (k as usize) < bins {
            counts[k as usize] += 1;
        }
    }
    let norm = n_samples as f64 * width;
    Ok(DensityProfile {
        t,
        x: (0..bins).map(|i| lo + (i as f64 + 0.5) * width).collect(),
        density: counts.iter().map(|&c| c as f64 / norm).collect(),
        bin_width: Some(width),
    })
}
