//! One-dimensional split-step Schrödinger propagation of the three-pulse
//! interferometer, used as an independent check of the closed-form phases.
//!
//! Laser pulses are instantaneous kicks `e^{±ikx}`. The two output branches
//! are `|↑⟩ = U e^{-ikx} U e^{ikx} |i⟩` and `|↓⟩ = e^{-ikx} U e^{ikx} U |i⟩`,
//! and the interferometer phase is `arg⟨↓|↑⟩`. With this convention uniform
//! gravity gives `-g k t²`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_positive, Error, Result};
use crate::interferometer::AIConfig;
use crate::potential::GravityModel;

/// Packets must keep this many standard deviations clear of the grid edges.
pub const SUPPORT_SIGMAS: f64 = 8.0;

/// Overlaps below this modulus carry no usable phase.
pub const MIN_CONTRAST: f64 = 1e-8;

/// Default number of Gauss–Hermite nodes for velocity-broadened states.
pub const DEFAULT_NODES: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        ensure_finite("x_min", x_min)?;
        ensure_finite("x_max", x_max)?;
        if x_max.is_nan() || x_min.is_nan() || x_max <= x_min {
            return Err(Error::InvalidParameter {
                name: "x_max",
                reason: format!("must exceed x_min ({x_min:e}), got {x_max:e}"),
            });
        }
        if n_points < 256 || !n_points.is_power_of_two() {
            return Err(Error::InvalidParameter {
                name: "n_points",
                reason: format!("must be a power of two and at least 256, got {n_points}"),
            });
        }
        Ok(Self { x_min, x_max, n_points })
    }

    pub fn centred(centre: f64, length: f64, n_points: usize) -> Result<Self> {
        Self::new(centre - 0.5 * length, centre + 0.5 * length, n_points)
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_points as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.x(i)).collect()
    }

    /// Angular wave numbers in FFT order.
    pub fn wave_numbers(&self) -> Vec<f64> {
        let n = self.n_points;
        let dk = 2.0 * PI / (n as f64 * self.dx());
        (0..n)
            .map(|i| if i < n / 2 { i as f64 } else { i as f64 - n as f64 } * dk)
            .collect()
    }

    /// Largest representable wave number.
    pub fn k_max(&self) -> f64 {
        PI / self.dx()
    }

    /// Same extent with twice the points.
    pub fn refined(&self) -> Self {
        Self {
            n_points: 2 * self.n_points,
            ..*self
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WavePacket {
    pub grid: Grid1D,
    pub psi: Vec<Complex64>,
    pub mass: f64,
    pub hbar: f64,
}

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Plans {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }
}

impl WavePacket {
    /// `Σ|ψ|² dx`.
    pub fn norm(&self) -> f64 {
        self.psi.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    fn position_moments(&self) -> (f64, f64) {
        let w: Vec<f64> = self.psi.iter().map(|c| c.norm_sqr()).collect();
        moments(&self.grid.points(), &w)
    }

    pub fn mean_x(&self) -> f64 {
        self.position_moments().0
    }

    pub fn var_x(&self) -> f64 {
        self.position_moments().1
    }

    fn velocity_moments(&self) -> (f64, f64) {
        let mut phi = self.psi.clone();
        Plans::new(phi.len()).forward.process(&mut phi);
        let w: Vec<f64> = phi.iter().map(|c| c.norm_sqr()).collect();
        let v: Vec<f64> = self
            .grid
            .wave_numbers()
            .iter()
            .map(|k| self.hbar * k / self.mass)
            .collect();
        moments(&v, &w)
    }

    pub fn mean_v(&self) -> f64 {
        self.velocity_moments().0
    }

    pub fn var_v(&self) -> f64 {
        self.velocity_moments().1
    }

    /// `⟨self|other⟩`.
    pub fn overlap(&self, other: &WavePacket) -> Complex64 {
        self.psi
            .iter()
            .zip(&other.psi)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            * self.grid.dx()
    }

    /// Fails when the packet comes within [`SUPPORT_SIGMAS`] standard
    /// deviations of the grid edges in position or wave number.
    pub fn check_support(&self) -> Result<()> {
        let (mx, vx) = self.position_moments();
        let half = SUPPORT_SIGMAS * vx.sqrt();
        let (lo, hi) = (mx - half, mx + half);
        if lo < self.grid.x_min || hi > self.grid.x_max {
            return Err(Error::GridFit {
                lo,
                hi,
                x_min: self.grid.x_min,
                x_max: self.grid.x_max,
            });
        }
        let (mv, vv) = self.velocity_moments();
        let scale = self.mass / self.hbar;
        let half = SUPPORT_SIGMAS * vv.sqrt() * scale;
        let (lo, hi) = (mv * scale - half, mv * scale + half);
        let kmax = self.grid.k_max();
        if lo < -kmax || hi > kmax {
            return Err(Error::GridFit {
                lo,
                hi,
                x_min: -kmax,
                x_max: kmax,
            });
        }
        Ok(())
    }
}

fn moments(x: &[f64], w: &[f64]) -> (f64, f64) {
    let total: f64 = w.iter().sum();
    let mean = x.iter().zip(w).map(|(x, w)| x * w).sum::<f64>() / total;
    let var = x.iter().zip(w).map(|(x, w)| (x - mean).powi(2) * w).sum::<f64>() / total;
    (mean, var)
}

/// Minimum-uncertainty Gaussian with centre `x0`, velocity `v0` and position
/// spread `sigma_x`.
pub fn gaussian_packet(grid: &Grid1D, x0: f64, v0: f64, sigma_x: f64, mass: f64, hbar: f64) -> Result<WavePacket> {
    ensure_finite("x0", x0)?;
    ensure_finite("v0", v0)?;
    ensure_positive("sigma_x", sigma_x)?;
    ensure_positive("m", mass)?;
    ensure_positive("hbar", hbar)?;
    let p0 = mass * v0 / hbar;
    // an out-of-band momentum aliases back into range, so test it up front
    let half_k = SUPPORT_SIGMAS / (2.0 * sigma_x);
    if (p0 - half_k) < -grid.k_max() || (p0 + half_k) > grid.k_max() {
        return Err(Error::GridFit {
            lo: p0 - half_k,
            hi: p0 + half_k,
            x_min: -grid.k_max(),
            x_max: grid.k_max(),
        });
    }
    let amp = (2.0 * PI * sigma_x * sigma_x).powf(-0.25);
    let psi = grid
        .points()
        .iter()
        .map(|&x| {
            let u = (x - x0) / sigma_x;
            Complex64::from_polar(amp * (-0.25 * u * u).exp(), p0 * x)
        })
        .collect();
    let packet = WavePacket {
        grid: *grid,
        psi,
        mass,
        hbar,
    };
    packet.check_support()?;
    Ok(packet)
}

/// Multiplies by `e^{ikx}`.
pub fn apply_kick(psi: &WavePacket, k: f64) -> WavePacket {
    let mut out = psi.clone();
    kick_in_place(&mut out.psi, &psi.grid, k);
    out
}

fn kick_in_place(psi: &mut [Complex64], grid: &Grid1D, k: f64) {
    for (i, c) in psi.iter_mut().enumerate() {
        *c *= Complex64::cis(k * grid.x(i));
    }
}

/// Strang-split evolution operator for a fixed duration and step count.
pub struct Propagator {
    grid: Grid1D,
    n_steps: usize,
    half_kinetic: Vec<Complex64>,
    full_kinetic: Vec<Complex64>,
    potential: Vec<Complex64>,
    plans: Plans,
}

impl Propagator {
    /// Per-step phases (kinetic and potential, the latter measured from its
    /// midrange) must stay below π/4.
    pub fn new(
        grid: &Grid1D,
        model: &GravityModel,
        mass: f64,
        hbar: f64,
        duration: f64,
        n_steps: usize,
    ) -> Result<Self> {
        ensure_positive("m", mass)?;
        ensure_positive("hbar", hbar)?;
        ensure_finite("duration", duration)?;
        if duration < 0.0 || n_steps == 0 {
            return Err(Error::InvalidParameter {
                name: "n_steps",
                reason: format!("need a non-negative duration and at least one step, got {duration:e} and {n_steps}"),
            });
        }
        let dt = duration / n_steps as f64;
        let kinetic_phase = 0.5 * hbar * grid.k_max().powi(2) * dt / mass;
        let v: Vec<f64> = grid
            .points()
            .iter()
            .map(|&x| model.potential_x(x).map(|p| mass * p))
            .collect::<Result<_>>()?;
        let (lo, hi) = v
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &e| (l.min(e), h.max(e)));
        let mid = 0.5 * (lo + hi);
        let potential_phase = 0.5 * (hi - lo) * dt / hbar;
        let phase = kinetic_phase.max(potential_phase);
        if phase >= FRAC_PI_4 {
            return Err(Error::StepResolution { phase });
        }
        let kin = |frac: f64| -> Vec<Complex64> {
            grid.wave_numbers()
                .iter()
                .map(|k| Complex64::cis(-frac * 0.5 * hbar * k * k * dt / mass))
                .collect()
        };
        Ok(Self {
            grid: *grid,
            n_steps,
            half_kinetic: kin(0.5),
            full_kinetic: kin(1.0),
            // the constant offset `mid` only contributes a global phase that
            // is identical for both branches
            potential: v.iter().map(|e| Complex64::cis(-(e - mid) * dt / hbar)).collect(),
            plans: Plans::new(grid.n_points),
        })
    }

    fn kinetic(&self, psi: &mut [Complex64], factor: &[Complex64], scratch: &mut [Complex64]) {
        self.plans.forward.process_with_scratch(psi, scratch);
        let inv_n = 1.0 / self.grid.n_points as f64;
        for (c, f) in psi.iter_mut().zip(factor) {
            *c *= f * inv_n;
        }
        self.plans.inverse.process_with_scratch(psi, scratch);
    }

    fn apply(&self, psi: &mut [Complex64]) {
        let len = self
            .plans
            .forward
            .get_inplace_scratch_len()
            .max(self.plans.inverse.get_inplace_scratch_len());
        let mut scratch = vec![Complex64::default(); len];
        self.kinetic(psi, &self.half_kinetic, &mut scratch);
        for step in 0..self.n_steps {
            for (c, v) in psi.iter_mut().zip(&self.potential) {
                *c *= v;
            }
            let factor = if step + 1 == self.n_steps {
                &self.half_kinetic
            } else {
                &self.full_kinetic
            };
            self.kinetic(psi, factor, &mut scratch);
        }
    }

    /// Evolves `psi` and checks that it still fits the grid.
    pub fn evolve(&self, psi: &WavePacket) -> Result<WavePacket> {
        let mut out = psi.clone();
        self.apply(&mut out.psi);
        out.check_support()?;
        Ok(out)
    }
}

/// Evolves `psi` for `duration` under `model` restricted to the x axis.
pub fn evolve(psi: &WavePacket, model: &GravityModel, duration: f64, n_steps: usize) -> Result<WavePacket> {
    Propagator::new(&psi.grid, model, psi.mass, psi.hbar, duration, n_steps)?.evolve(psi)
}

/// Initial state of the interferometer: a minimum-uncertainty packet when
/// `sigma_v = ħ/(2mσ_x)`, otherwise an incoherent mixture of such packets
/// with Gaussian-distributed velocity offsets making up the excess spread.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreparedState {
    pub mean_x: f64,
    pub mean_v: f64,
    pub sigma_x: f64,
    pub sigma_v: f64,
}

impl PreparedState {
    pub fn minimum_uncertainty(mean_x: f64, mean_v: f64, sigma_x: f64, mass: f64, hbar: f64) -> Self {
        Self {
            mean_x,
            mean_v,
            sigma_x,
            sigma_v: hbar / (2.0 * mass * sigma_x),
        }
    }

    /// Weights and velocities of the mixture components.
    pub fn components(&self, mass: f64, hbar: f64, nodes: usize) -> Result<Vec<(f64, f64)>> {
        ensure_positive("sigma_x", self.sigma_x)?;
        ensure_positive("sigma_v", self.sigma_v)?;
        let floor = hbar / (2.0 * mass * self.sigma_x);
        let excess = self.sigma_v * self.sigma_v - floor * floor;
        if excess < -1e-12 * floor * floor {
            return Err(Error::InvalidParameter {
                name: "sigma_v",
                reason: format!("{:e} is below the uncertainty limit {floor:e}", self.sigma_v),
            });
        }
        if excess <= 1e-12 * floor * floor {
            return Ok(vec![(1.0, self.mean_v)]);
        }
        let spread = excess.sqrt();
        Ok(gauss_hermite(nodes)?
            .into_iter()
            .map(|(z, w)| (w, self.mean_v + spread * z))
            .collect())
    }

    /// Raw second velocity moment `⟨v²⟩`.
    pub fn second_v(&self) -> f64 {
        self.mean_v * self.mean_v + self.sigma_v * self.sigma_v
    }
}

/// Nodes and probability weights for expectations over a standard normal
/// variable (Golub–Welsch).
pub fn gauss_hermite(n: usize) -> Result<Vec<(f64, f64)>> {
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "nodes",
            reason: "need at least one node".into(),
        });
    }
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i.abs_diff(j) == 1 {
            (i.max(j) as f64).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jacobi);
    let mut out: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = out.iter().map(|p| p.1).sum();
    for p in &mut out {
        p.1 /= total;
    }
    Ok(out)
}

/// Which property of the prepared state a differential measurement varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Vary {
    MeanV,
    SigmaV,
    MeanX,
}

impl Vary {
    pub fn name(self) -> &'static str {
        match self {
            Vary::MeanV => "mean_v",
            Vary::SigmaV => "sigma_v",
            Vary::MeanX => "mean_x",
        }
    }

    pub fn apply(self, state: PreparedState, value: f64) -> PreparedState {
        match self {
            Vary::MeanV => PreparedState { mean_v: value, ..state },
            Vary::SigmaV => PreparedState {
                sigma_v: value,
                ..state
            },
            Vary::MeanX => PreparedState { mean_x: value, ..state },
        }
    }
}

/// Simulated interferometer: geometry, pulses and a shared propagator for
/// one free-fall stage.
pub struct Interferometer {
    pub grid: Grid1D,
    pub model: GravityModel,
    pub k: f64,
    pub t: f64,
    pub mass: f64,
    pub hbar: f64,
    pub nodes: usize,
    stage: Propagator,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DifferentialPhase {
    /// `arg` of the second signal relative to the first (rad).
    pub delta: f64,
    /// Closed-form expectation in the same sign convention (rad).
    pub predicted: f64,
    pub modulus_a: f64,
    pub modulus_b: f64,
}

impl Interferometer {
    /// `n_steps` is the number of split steps per free-fall stage.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        grid: Grid1D,
        model: GravityModel,
        k: f64,
        t: f64,
        mass: f64,
        hbar: f64,
        n_steps: usize,
    ) -> Result<Self> {
        ensure_finite("k", k)?;
        ensure_positive("t", t)?;
        let stage = Propagator::new(&grid, &model, mass, hbar, t, n_steps)?;
        Ok(Self {
            grid,
            model,
            k,
            t,
            mass,
            hbar,
            nodes: DEFAULT_NODES,
            stage,
        })
    }

    pub fn from_config(cfg: &AIConfig, model: GravityModel, grid: Grid1D, n_steps: usize) -> Result<Self> {
        Self::new(grid, model, cfg.k, cfg.t, cfg.mass, cfg.hbar, n_steps)
    }

    pub fn with_nodes(self, nodes: usize) -> Self {
        Self { nodes, ..self }
    }

    /// `⟨↓|↑⟩` for a pure initial state.
    pub fn branch_overlap(&self, psi: &WavePacket) -> Result<Complex64> {
        let (mv, vv) = psi.velocity_moments();
        let scale = psi.mass / psi.hbar;
        let half = SUPPORT_SIGMAS * vv.sqrt() * scale;
        let kicked = mv * scale + self.k;
        if (kicked - half) < -self.grid.k_max() || (kicked + half) > self.grid.k_max() {
            return Err(Error::GridFit {
                lo: kicked - half,
                hi: kicked + half,
                x_min: -self.grid.k_max(),
                x_max: self.grid.k_max(),
            });
        }
        let up = self.stage.evolve(&apply_kick(psi, self.k))?;
        let up = self.stage.evolve(&apply_kick(&up, -self.k))?;
        let down = self.stage.evolve(psi)?;
        let down = self.stage.evolve(&apply_kick(&down, self.k))?;
        let down = apply_kick(&down, -self.k);
        Ok(down.overlap(&up))
    }

    /// Mixture-weighted overlap for a prepared state. Components run in
    /// parallel and are summed in a fixed order.
    pub fn signal(&self, state: &PreparedState) -> Result<Complex64> {
        let parts = state.components(self.mass, self.hbar, self.nodes)?;
        let overlaps: Vec<Complex64> = parts
            .par_iter()
            .map(|&(w, v)| {
                let psi = gaussian_packet(&self.grid, state.mean_x, v, state.sigma_x, self.mass, self.hbar)?;
                Ok(self.branch_overlap(&psi)? * w)
            })
            .collect::<Result<_>>()?;
        Ok(overlaps.iter().sum())
    }

    /// Interferometer phase `arg⟨↓|↑⟩`.
    pub fn phase(&self, state: &PreparedState) -> Result<f64> {
        let s = self.signal(state)?;
        contrast(s)?;
        Ok(s.arg())
    }

    /// Closed-form phase change between two prepared states, to order `1/R²`.
    pub fn predicted_shift(&self, a: &PreparedState, b: &PreparedState) -> f64 {
        let g = self.model.g();
        let inv_r = self.model.inv_radius();
        let theta0 = g * self.k * self.t * self.t;
        let linear = 2.0 * theta0 * inv_r * ((b.mean_x - a.mean_x) + self.t * (b.mean_v - a.mean_v));
        let quadratic = 3.5 * g * self.k * self.t.powi(4) * inv_r * inv_r * (b.second_v() - a.second_v());
        linear - quadratic
    }

    /// Phase difference between `vary = value_a` and `vary = value_b`.
    pub fn differential_phase(
        &self,
        base: &PreparedState,
        vary: Vary,
        value_a: f64,
        value_b: f64,
    ) -> Result<DifferentialPhase> {
        let a = vary.apply(*base, value_a);
        let b = vary.apply(*base, value_b);
        let predicted = self.predicted_shift(&a, &b);
        if predicted.abs() > FRAC_PI_2 {
            return Err(Error::PhaseWrap { predicted });
        }
        let sa = contrast(self.signal(&a)?)?;
        let sb = contrast(self.signal(&b)?)?;
        Ok(DifferentialPhase {
            delta: (sb * sa.conj()).arg(),
            predicted,
            modulus_a: sa.norm(),
            modulus_b: sb.norm(),
        })
    }
}

/// One row of a parameter sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub param: String,
    pub value: f64,
    pub phase: f64,
    pub overlap_modulus: f64,
}

impl Interferometer {
    /// Signal phase and modulus for each value of `vary`.
    pub fn sweep(&self, base: &PreparedState, vary: Vary, values: &[f64]) -> Result<Vec<SweepPoint>> {
        values
            .iter()
            .map(|&value| {
                let s = self.signal(&vary.apply(*base, value))?;
                Ok(SweepPoint {
                    param: vary.name().to_owned(),
                    value,
                    phase: s.arg(),
                    overlap_modulus: s.norm(),
                })
            })
            .collect()
    }
}

fn contrast(s: Complex64) -> Result<Complex64> {
    if s.norm().is_nan() || s.norm() < MIN_CONTRAST {
        return Err(Error::LostContrast { modulus: s.norm() });
    }
    Ok(s)
}

/// Phase of the uniform-gravity interferometer in the convention above.
pub fn uniform_phase(g: f64, k: f64, t: f64) -> f64 {
    -g * k * t * t
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap(angle: f64) -> f64 {
    let r = angle.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn grid() -> Grid1D {
        Grid1D::centred(10.0, 120.0, 2048).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(Grid1D::new(0.0, 1.0, 300).is_err());
        assert!(Grid1D::new(0.0, 1.0, 128).is_err());
        assert!(Grid1D::new(1.0, 1.0, 256).is_err());
        let g = Grid1D::new(-1.0, 1.0, 256).unwrap();
        assert_eq!(g.x(0), -1.0);
        let k = g.wave_numbers();
        assert_eq!(k[0], 0.0);
        assert!(rel(-k[128], g.k_max()) < 1e-15);
    }

    #[test]
    fn packet_moments() {
        let p = gaussian_packet(&grid(), 3.0, 0.7, 1.5, 1.0, 1.0).unwrap();
        assert!((p.norm() - 1.0).abs() < 1e-12);
        assert!(rel(p.mean_x(), 3.0) < 1e-8);
        assert!(rel(p.var_x(), 2.25) < 1e-8);
        assert!(rel(p.mean_v(), 0.7) < 1e-8);
        assert!(rel(p.var_v(), (1.0f64 / 3.0).powi(2)) < 1e-8);
        assert!(gaussian_packet(&grid(), 65.0, 0.0, 1.0, 1.0, 1.0).is_err());
        assert!(gaussian_packet(&grid(), 10.0, 60.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn kicks() {
        let g = grid();
        let p = gaussian_packet(&g, 10.0, 0.0, 2.0, 1.0, 1.0).unwrap();
        let moving = gaussian_packet(&g, 10.0, 5.0, 2.0, 1.0, 1.0).unwrap();
        let kicked = apply_kick(&p, 5.0);
        assert!((kicked.overlap(&moving).norm() - 1.0).abs() < 1e-10);
        assert!((kicked.mean_v() - p.mean_v() - 5.0).abs() < 1e-8);
        assert_eq!(apply_kick(&p, 0.0), p);
        let back = apply_kick(&kicked, -5.0);
        let worst = back
            .psi
            .iter()
            .zip(&p.psi)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(worst < 1e-14);
        assert!((kicked.norm() - p.norm()).abs() < 1e-14);
    }

    #[test]
    fn free_and_uniform_ehrenfest() {
        let g = Grid1D::centred(10.0, 120.0, 512).unwrap();
        let p = gaussian_packet(&g, 5.0, 1.5, 2.0, 1.0, 1.0).unwrap();
        let free = evolve(&p, &GravityModel::uniform(0.0), 3.0, 600).unwrap();
        assert!((free.mean_x() - (5.0 + 4.5)).abs() < 1e-10);
        let fall = evolve(&p, &GravityModel::uniform(1.0), 3.0, 600).unwrap();
        assert!((fall.mean_x() - (5.0 + 4.5 - 4.5)).abs() < 1e-9);
        assert!((fall.mean_v() - (1.5 - 3.0)).abs() < 1e-9);
    }

    #[test]
    fn unitarity() {
        let g = Grid1D::centred(0.0, 60.0, 512).unwrap();
        let p = gaussian_packet(&g, 0.0, 0.0, 2.0, 1.0, 1.0).unwrap();
        let model = GravityModel::cubic_with(0.1, 200.0).unwrap();
        let out = evolve(&p, &model, 2.0, 10_000).unwrap();
        assert!((out.norm() - p.norm()).abs() < 1e-10);
    }

    #[test]
    fn resolution_guard() {
        let g = grid();
        let model = GravityModel::uniform(1.0);
        assert!(matches!(
            Propagator::new(&g, &model, 1.0, 1.0, 10.0, 10),
            Err(Error::StepResolution { .. })
        ));
    }

    #[test]
    fn gauss_hermite_moments() {
        let nodes = gauss_hermite(12).unwrap();
        let m = |p: i32| nodes.iter().map(|(z, w)| w * z.powi(p)).sum::<f64>();
        assert!((m(0) - 1.0).abs() < 1e-14);
        assert!(m(1).abs() < 1e-14);
        assert!((m(2) - 1.0).abs() < 1e-13);
        assert!((m(4) - 3.0).abs() < 1e-12);
        assert!((m(6) - 15.0).abs() < 1e-11);
    }

    #[test]
    fn mixture_components() {
        let s = PreparedState::minimum_uncertainty(0.0, 0.3, 1.0, 1.0, 1.0);
        assert_eq!(s.components(1.0, 1.0, 8).unwrap(), vec![(1.0, 0.3)]);
        let wide = PreparedState { sigma_v: 1.0, ..s };
        let c = wide.components(1.0, 1.0, 8).unwrap();
        let mean: f64 = c.iter().map(|(w, v)| w * v).sum();
        let var: f64 = c.iter().map(|(w, v)| w * (v - mean).powi(2)).sum();
        assert!((mean - 0.3).abs() < 1e-14);
        assert!((var - 0.75).abs() < 1e-13);
        assert!(PreparedState { sigma_v: 0.1, ..s }.components(1.0, 1.0, 8).is_err());
    }

    #[test]
    fn uniform_interferometer_phase() {
        let (k, t) = (20.0, 1.0);
        let ai = Interferometer::new(grid(), GravityModel::uniform(1.0), k, t, 1.0, 1.0, 2000).unwrap();
        let p = gaussian_packet(&grid(), 10.0, 0.0, 1.0, 1.0, 1.0).unwrap();
        let o = ai.branch_overlap(&p).unwrap();
        assert!((o.norm() - 1.0).abs() < 1e-10);
        assert!(wrap(o.arg() - uniform_phase(1.0, k, t)).abs() < 1e-6, "{}", o.arg());

        let free = Interferometer::new(grid(), GravityModel::uniform(0.0), k, t, 1.0, 1.0, 2000).unwrap();
        let o = free.branch_overlap(&p).unwrap();
        assert!((o.norm() - 1.0).abs() < 1e-10);
        assert!(o.arg().abs() < 1e-10);
    }

    #[test]
    fn uniform_phase_is_state_and_mass_independent() {
        let (k, t) = (20.0, 1.0);
        let ai = Interferometer::new(grid(), GravityModel::uniform(1.0), k, t, 1.0, 1.0, 2000).unwrap();
        let base = PreparedState::minimum_uncertainty(10.0, 0.0, 1.0, 1.0, 1.0);
        let p0 = ai.phase(&base).unwrap();
        for d in [
            ai.differential_phase(&base, Vary::MeanV, 0.0, 0.4).unwrap(),
            ai.differential_phase(&base, Vary::MeanX, 10.0, 12.0).unwrap(),
            ai.differential_phase(&base, Vary::SigmaV, 0.5, 1.0).unwrap(),
        ] {
            assert!(d.delta.abs() < 1e-8, "{d:?}");
            assert_eq!(d.predicted, 0.0);
        }
        let heavy = Interferometer::new(grid(), GravityModel::uniform(1.0), k, t, 2.0, 1.0, 2000).unwrap();
        let state = PreparedState::minimum_uncertainty(10.0, 0.0, 1.0, 2.0, 1.0);
        assert!(wrap(heavy.phase(&state).unwrap() - p0).abs() < 1e-8);
    }

    #[test]
    fn gradient_phase_tracks_closed_form_at_large_radius() {
        let r = 1000.0;
        let ai = Interferometer::new(
            grid(),
            GravityModel::cubic_with(1.0, r).unwrap(),
            20.0,
            1.0,
            1.0,
            1.0,
            2000,
        )
        .unwrap();
        let base = PreparedState::minimum_uncertainty(10.0, 0.0, 1.0, 1.0, 1.0);
        let d = ai.differential_phase(&base, Vary::SigmaV, 0.5, 1.0).unwrap();
        assert!(rel(d.predicted, -3.5 * 20.0 * 0.75 / (r * r)) < 1e-12);
        assert!(rel(d.delta, d.predicted) < 0.05, "{d:?}");
        // the unspecified 1/R² terms linear in ⟨x⟩ and ⟨v⟩ grow with the
        // offset from the expansion point, so centre the packet there
        let centred = PreparedState { mean_x: 0.0, ..base };
        let d = ai.differential_phase(&centred, Vary::MeanV, 0.0, 0.1).unwrap();
        assert!(rel(d.delta, d.predicted) < 0.05, "{d:?}");
    }

    #[test]
    fn wrap_guard() {
        let ai = Interferometer::new(
            grid(),
            GravityModel::cubic_with(1.0, 50.0).unwrap(),
            20.0,
            1.0,
            1.0,
            1.0,
            2000,
        )
        .unwrap();
        let base = PreparedState::minimum_uncertainty(10.0, 0.0, 1.0, 1.0, 1.0);
        assert!(matches!(
            ai.differential_phase(&base, Vary::MeanX, 0.0, 10.0),
            Err(Error::PhaseWrap { .. })
        ));
    }

    #[test]
    fn wrap_range() {
        assert_eq!(wrap(0.5), 0.5);
        assert!((wrap(2.0 * PI + 0.1) - 0.1).abs() < 1e-15);
        assert!((wrap(-PI - 0.1) - (PI - 0.1)).abs() < 1e-15);
    }
}
