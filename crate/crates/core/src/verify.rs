//! Release checks: each acceptance criterion as a list of measured versus
//! expected values with an explicit tolerance.

use std::fmt;
use std::time::Instant;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::constants::{ATOM_MASS, G_ROUNDED, HBAR, SATELLITE_DISTANCE, SATELLITE_MASS};
use crate::error::Result;
use crate::interferometer::{in_pi, phase_budget, AIConfig, Preset};
use crate::io::{write_residuals, Metadata};
use crate::moments::{monte_carlo_average, positional_average, GaussianEnsemble, StateMoments};
use crate::potential::{epsilon_q, GravityModel, GravitySource, QuantumCorrectionParams};
use crate::trajectory::{
    residual_deviation, second_order_residual, uniform_times, InitialConditions, IntegrationOptions,
};
use crate::wavepacket::{evolve, gaussian_packet, uniform_phase, wrap, Grid1D, Interferometer, PreparedState, Vary};
use crate::wigner::{classical_density_mc, p0, p_quantum, pq_amplitude, pq_moments, FallSetup, GaussianState1D};

/// Default seed for every randomized check.
pub const DEFAULT_SEED: u64 = 20_240_917;

/// Coefficient of the velocity-spread phase, `θ = c g k t⁴ ⟨v²⟩ / R²`.
pub const SPREAD_PHASE_COEFFICIENT: f64 = 3.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `|measured - expected| <= tolerance * |expected|`
    Relative,
    /// `|measured - expected| <= tolerance`
    Absolute,
    /// `measured <= tolerance`
    UpperBound,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub criterion: u8,
    pub name: String,
    pub passed: bool,
    pub skipped: bool,
    pub measured: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub note: Option<String>,
    /// Wall time of the criterion this check belongs to; kept out of the
    /// JSON report so reruns are byte-identical.
    #[serde(skip)]
    pub runtime_s: f64,
}

impl Check {
    fn new(
        criterion: u8,
        name: impl Into<String>,
        measured: f64,
        expected: f64,
        tolerance: f64,
        comparison: Comparison,
    ) -> Self {
        let passed = match comparison {
            Comparison::Relative => (measured - expected).abs() <= tolerance * expected.abs(),
            Comparison::Absolute => (measured - expected).abs() <= tolerance,
            Comparison::UpperBound => measured <= tolerance,
        };
        Self {
            criterion,
            name: name.into(),
            passed,
            skipped: false,
            measured,
            expected,
            tolerance,
            comparison,
            note: None,
            runtime_s: 0.0,
        }
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    fn error(criterion: u8, name: impl Into<String>, err: impl fmt::Display) -> Self {
        Self {
            passed: false,
            note: Some(format!("numerical failure: {err}")),
            ..Self::new(criterion, name, f64::NAN, f64::NAN, 0.0, Comparison::Absolute)
        }
    }

    fn skipped(criterion: u8, name: impl Into<String>) -> Self {
        Self {
            passed: true,
            skipped: true,
            note: Some("skipped in quick mode".into()),
            ..Self::new(criterion, name, f64::NAN, f64::NAN, 0.0, Comparison::Absolute)
        }
    }

    pub fn status(&self) -> &'static str {
        match (self.skipped, self.passed) {
            (true, _) => "SKIP",
            (false, true) => "PASS",
            (false, false) => "FAIL",
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}] {}", self.status(), self.criterion, self.name)?;
        if !self.skipped {
            let op = match self.comparison {
                Comparison::Relative => "rel",
                Comparison::Absolute => "abs",
                Comparison::UpperBound => "<=",
            };
            write!(
                f,
                ": measured {:.6e}, expected {:.6e} ({op} {:.1e}) in {:.2} s",
                self.measured, self.expected, self.tolerance, self.runtime_s
            )?;
        }
        if let Some(n) = &self.note {
            write!(f, " ({n})")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifyOptions {
    /// Skip the Monte Carlo and wave-packet oracle checks.
    pub quick: bool,
    pub seed: u64,
    /// Coefficient used for the expected velocity-spread phase. Only changed
    /// to demonstrate that the oracle detects a wrong formula.
    pub spread_coefficient: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            quick: false,
            seed: DEFAULT_SEED,
            spread_coefficient: SPREAD_PHASE_COEFFICIENT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn criterion(&self, n: u8) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(move |c| c.criterion == n)
    }
}

/// Runs every criterion in order.
pub fn run_all(opts: &VerifyOptions) -> Report {
    let mut checks = Vec::new();
    for n in 1..=9 {
        checks.extend(criterion(n, opts));
    }
    Report { checks }
}

/// Checks of criterion `n` (1 to 9), timed.
pub fn criterion(n: u8, opts: &VerifyOptions) -> Vec<Check> {
    let start = Instant::now();
    let mut checks = match n {
        1 => reference_residuals(),
        2 => cubic_term_estimate(),
        3 => phase_presets(),
        4 if opts.quick => vec![Check::skipped(4, "velocity-spread phase oracle")],
        4 => velocity_spread_oracle(opts.spread_coefficient),
        5 => uniform_exactness(),
        6 => quantum_correction(),
        7 => characteristic_density(),
        8 if opts.quick => vec![Check::skipped(8, "positional average vs Monte Carlo")],
        8 => moments_oracle(opts.seed),
        9 => property_suite(opts),
        _ => Vec::new(),
    };
    let elapsed = start.elapsed().as_secs_f64();
    for c in &mut checks {
        c.runtime_s = elapsed;
    }
    checks
}

fn collect(criterion: u8, name: &str, r: Result<Vec<Check>>) -> Vec<Check> {
    r.unwrap_or_else(|e| vec![Check::error(criterion, name, e)])
}

/// The 1000 kg source at 1.5 m used by the laboratory scenarios.
pub fn lab_source() -> GravitySource {
    GravitySource {
        g_const: G_ROUNDED,
        mass: SATELLITE_MASS,
        distance: SATELLITE_DISTANCE,
    }
}

/// Initial velocities (mm/s) of the three reference trajectories.
pub const REFERENCE_VELOCITIES: [[f64; 3]; 3] = [[1.0, 1.0, 1.0], [2.0, 1.0, 1.0], [1.0, 2.0, 1.0]];

pub fn reference_label(v: &[f64; 3]) -> String {
    format!("{}/{}/{}", v[0], v[1], v[2])
}

/// Closed-form and numerical second-order residuals for the reference cases.
pub fn reference_curves(
    model: &GravityModel,
    points: usize,
) -> Result<Vec<(String, Vec<crate::trajectory::ResidualPoint>)>> {
    let times = uniform_times(10.0, points);
    REFERENCE_VELOCITIES
        .iter()
        .map(|v| {
            let ic = InitialConditions::new(Vector3::zeros(), Vector3::from(*v) * 1e-3)?;
            Ok((
                reference_label(v),
                second_order_residual(model, &ic, &times, &IntegrationOptions::default())?,
            ))
        })
        .collect()
}

fn reference_residuals() -> Vec<Check> {
    let run = || -> Result<Vec<Check>> {
        let curves = reference_curves(&GravityModel::exact(lab_source()), 201)?;
        Ok(curves
            .iter()
            .map(|(label, pts)| {
                let c = Check::new(
                    1,
                    format!("second-order residual {label} mm/s"),
                    residual_deviation(pts),
                    0.0,
                    0.05,
                    Comparison::UpperBound,
                );
                if label == "1/1/1" {
                    c.with_note("2v_x² = v_y² + v_z² cancels the 1/R² term, leaving the 1/R³ remainder dominant")
                } else {
                    c
                }
            })
            .collect())
    };
    collect(1, "second-order residual", run())
}

fn cubic_term_estimate() -> Vec<Check> {
    let run = || -> Result<Vec<Check>> {
        let s = lab_source();
        let model = GravityModel::cubic(&s);
        let x = 1e-2;
        let a = model.acceleration(&Vector3::new(x, 0.0, 0.0))?.x;
        let linear = -s.g() * (1.0 - 2.0 * x / s.distance);
        Ok(vec![Check::new(
            2,
            "cubic-term acceleration at x = 1 cm",
            (a - linear).abs(),
            4e-12,
            0.05,
            Comparison::Relative,
        )])
    };
    collect(2, "cubic-term acceleration", run())
}

fn phase_presets() -> Vec<Check> {
    let mut out = Vec::new();
    let mut add = |p: Preset, what: &str, got: f64, want: f64| {
        out.push(Check::new(
            3,
            format!("{} {what}/pi", p.name()),
            in_pi(got),
            want,
            0.05,
            Comparison::Relative,
        ));
    };
    let b = Preset::Satellite1000kg.budget();
    add(Preset::Satellite1000kg, "theta0", b.theta0, 12.0);
    add(Preset::Satellite1000kg, "theta_vx2", b.theta_vx2, 3.2e-3);
    let b = Preset::Satellite100kg.budget();
    add(Preset::Satellite100kg, "theta0", b.theta0, 1.2);
    add(Preset::Satellite100kg, "theta_vx2", b.theta_vx2, 3.2e-4);
    let b = Preset::Earth.budget();
    add(Preset::Earth, "theta_vx2", b.theta_vx2, 5.9e-12);
    let b = Preset::Magnetic.budget();
    add(Preset::Magnetic, "theta0", b.theta0, 4e3);
    add(Preset::Magnetic, "theta_vx2", b.theta_vx2, 0.025);
    out
}

/// Natural-unit oracle configuration: ħ = m = g = 1, k = 20, t = 1.
pub struct OracleSetup {
    pub grid: Grid1D,
    pub n_steps: usize,
    pub radius: Option<f64>,
}

impl OracleSetup {
    /// The acceptance configuration at `R = 50` (4096 points).
    pub fn acceptance(radius: Option<f64>) -> Result<Self> {
        Ok(Self {
            grid: Grid1D::centred(10.0, 320.0, 4096)?,
            n_steps: 2500,
            radius,
        })
    }

    /// Narrow packets at large `R`, where the expansion is well converged.
    pub fn large_radius(radius: Option<f64>) -> Result<Self> {
        Ok(Self {
            grid: Grid1D::centred(10.0, 120.0, 2048)?,
            n_steps: 2000,
            radius,
        })
    }

    pub fn interferometer(&self) -> Result<Interferometer> {
        let model = match self.radius {
            Some(r) => GravityModel::cubic_with(1.0, r)?,
            None => GravityModel::uniform(1.0),
        };
        Interferometer::new(self.grid, model, 20.0, 1.0, 1.0, 1.0, self.n_steps)
    }
}

/// Magnitude of the expected velocity-spread phase change.
fn spread_phase_expected(coefficient: f64, radius: f64, delta_second_v: f64) -> f64 {
    coefficient * 20.0 * delta_second_v / (radius * radius)
}

fn velocity_spread_oracle(coefficient: f64) -> Vec<Check> {
    let run = || -> Result<Vec<Check>> {
        let mut out = Vec::new();
        // σ_v = 0.05 fixes σ_x = ħ/(2mσ_v) = 10; the broader state is a
        // velocity mixture at the same σ_x
        let base = PreparedState::minimum_uncertainty(0.0, 0.0, 10.0, 1.0, 1.0);
        let ai = OracleSetup::acceptance(Some(50.0))?.interferometer()?;
        let d = ai.differential_phase(&base, Vary::SigmaV, 0.05, 0.10)?;
        out.push(
            Check::new(
                4,
                "velocity-spread phase, R = 50, sigma_v 0.05 -> 0.10",
                d.delta.abs(),
                spread_phase_expected(coefficient, 50.0, 0.0075),
                0.05,
                Comparison::Relative,
            )
            .with_note(format!("signed shift {:.4e} rad", d.delta)),
        );
        let ai = OracleSetup::acceptance(None)?.interferometer()?;
        let d = ai.differential_phase(&base, Vary::SigmaV, 0.05, 0.10)?;
        out.push(Check::new(
            4,
            "velocity-spread phase, 1/R = 0",
            d.delta.abs(),
            0.0,
            1e-8,
            Comparison::Absolute,
        ));

        let narrow = PreparedState::minimum_uncertainty(0.0, 0.0, 1.0, 1.0, 1.0);
        let ai = OracleSetup::large_radius(Some(1000.0))?.interferometer()?;
        let d = ai.differential_phase(&narrow, Vary::SigmaV, 0.5, 1.0)?;
        out.push(
            Check::new(
                4,
                "velocity-spread phase, R = 1000, sigma_v 0.5 -> 1.0 (supplementary)",
                d.delta.abs(),
                spread_phase_expected(coefficient, 1000.0, 0.75),
                0.05,
                Comparison::Relative,
            )
            .with_note(format!("signed shift {:.4e} rad", d.delta)),
        );
        Ok(out)
    };
    collect(4, "velocity-spread phase oracle", run())
}

fn uniform_exactness() -> Vec<Check> {
    let run = || -> Result<Vec<Check>> {
        let setup = OracleSetup::large_radius(None)?;
        let ai = setup.interferometer()?;
        let base = PreparedState::minimum_uncertainty(10.0, 0.0, 1.0, 1.0, 1.0);
        let phase = ai.phase(&base)?;
        let mut out = vec![Check::new(
            5,
            "uniform phase equals -g k t^2 (mod 2 pi)",
            wrap(phase - uniform_phase(1.0, 20.0, 1.0)),
            0.0,
            1e-6,
            Comparison::Absolute,
        )];
        let wide = PreparedState::minimum_uncertainty(10.0, 0.0, 2.0, 1.0, 1.0);
        out.push(Check::new(
            5,
            "uniform phase shift for sigma_x 1 -> 2",
            wrap(ai.phase(&wide)? - phase).abs(),
            0.0,
            1e-8,
            Comparison::Absolute,
        ));
        let moving = PreparedState { mean_v: 0.5, ..base };
        out.push(Check::new(
            5,
            "uniform phase shift for <v> 0 -> 0.5",
            wrap(ai.phase(&moving)? - phase).abs(),
            0.0,
            1e-8,
            Comparison::Absolute,
        ));
        let heavy = Interferometer::new(
            setup.grid,
            GravityModel::uniform(1.0),
            20.0,
            1.0,
            2.0,
            1.0,
            setup.n_steps,
        )?;
        let state = PreparedState::minimum_uncertainty(10.0, 0.0, 1.0, 2.0, 1.0);
        out.push(Check::new(
            5,
            "uniform phase shift for m 1 -> 2",
            wrap(heavy.phase(&state)? - phase).abs(),
            0.0,
            1e-8,
            Comparison::Absolute,
        ));
        Ok(out)
    };
    collect(5, "uniform-gravity exactness", run())
}

/// Default density scenario: the laboratory source and a 100 Hz trap ground state.
pub fn trap_setup() -> Result<(GaussianState1D, FallSetup)> {
    let s = lab_source();
    Ok((
        GaussianState1D::centred(2.3e-6, 2.3e-4)?,
        FallSetup::new(s.g(), 1.0 / s.distance, ATOM_MASS, HBAR)?,
    ))
}

fn quantum_correction() -> Vec<Check> {
    let run = || -> Result<Vec<Check>> {
        let (state, setup) = trap_setup()?;
        let t = 10.0;
        let s = state.spread(t);
        let c = state.centre(setup.g, t);
        let pre = setup.correction_prefactor(t);
        let h = 1e-3 * s;
        let pu = |x: f64| state.p_uniform(x, setup.g, t);
        let third = |x: f64, h: f64| {
            (pu(x + 2.0 * h) - 2.0 * pu(x + h) + 2.0 * pu(x - h) - pu(x - 2.0 * h)) / (2.0 * h * h * h)
        };
        let (mut worst, mut peak) = (0.0f64, 0.0f64);
        for i in 0..=1000 {
            let x = c + (-5.0 + 0.01 * i as f64) * s;
            let oracle = -pre * (4.0 * third(x, h) - third(x, 2.0 * h)) / 3.0;
            let closed = p_quantum(&state, &setup, x, t)?;
            worst = worst.max((oracle - closed).abs());
            peak = peak.max(closed.abs());
        }
        let mut out = vec![Check::new(
            6,
            "closed form vs -(eps_q t^4/4) d3 P_u, |xi| < 5",
            worst / peak,
            0.0,
            1e-6,
            Comparison::UpperBound,
        )];
        let m = pq_moments(&state, &setup, t)?;
        let amp = pq_amplitude(&state, &setup, t)?;
        for (n, mn) in m.iter().take(3).enumerate() {
            let norm = amp * s.powi(n as i32 + 1);
            out.push(Check::new(
                6,
                format!("normalized moment {n} of P_q"),
                mn / norm,
                0.0,
                1e-10,
                Comparison::Absolute,
            ));
        }
        out.push(Check::new(
            6,
            "moment 3 of P_q vs (3/2) eps_q t^4",
            m[3],
            1.5 * setup.epsilon_q() * t.powi(4),
            1e-8,
            Comparison::Relative,
        ));
        Ok(out)
    };
    collect(6, "quantum correction", run())
}

fn characteristic_density() -> Vec<Check> {
    let run = || -> Result<Vec<Check>> {
        let (_, setup) = trap_setup()?;
        let a = p0(&GaussianState1D::centred(2.3e-6, 2.3e-4)?, &setup)?;
        let b = p0(&GaussianState1D::centred(2.3e-4, 2.3e-6)?, &setup)?;
        Ok(vec![
            Check::new(7, "P0 at sigma_v = 2.3e-4 m/s", a, 3.3e-13, 0.05, Comparison::Relative),
            Check::new(7, "P0 at sigma_v = 2.3e-6 m/s", b, 3.3e-5, 0.05, Comparison::Relative),
        ])
    };
    collect(7, "characteristic density", run())
}

/// Randomized Gaussian states around the laboratory source.
pub fn random_ensembles(seed: u64, count: usize) -> Result<Vec<GaussianEnsemble>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut v3 = |lo: f64, hi: f64| Vector3::from_fn(|_, _| rng.random_range(lo..hi));
            let mean_r = v3(-0.05, 0.05);
            let mean_v = v3(-5e-3, 5e-3);
            let sigma_r = v3(1e-3, 1e-2);
            let sigma_v = v3(1e-4, 2e-3);
            GaussianEnsemble::new(mean_r, mean_v, sigma_r, sigma_v)
        })
        .collect()
}

fn moments_oracle(seed: u64) -> Vec<Check> {
    let run = || -> Result<Vec<Check>> {
        let s = lab_source();
        let model = GravityModel::exact(s);
        let t = 10.0;
        let opts = IntegrationOptions::default();
        random_ensembles(seed, 5)?
            .iter()
            .enumerate()
            .map(|(i, ens)| {
                let mc = monte_carlo_average(&model, ens, t, 100_000, seed.wrapping_add(i as u64 + 1), &opts)?;
                let predicted = positional_average(&ens.moments(), s.g(), 1.0 / s.distance, t);
                Ok(Check::new(
                    8,
                    format!("state {i}: |MC - closed form| in standard errors"),
                    (mc.mean - predicted).abs() / mc.std_error,
                    0.0,
                    3.0,
                    Comparison::UpperBound,
                )
                .with_note(format!("MC {:.9e} m, closed form {:.9e} m", mc.mean, predicted)))
            })
            .collect()
    };
    collect(8, "positional average vs Monte Carlo", run())
}

fn property_suite(opts: &VerifyOptions) -> Vec<Check> {
    let run = || -> Result<Vec<Check>> {
        let mut out = Vec::new();
        let s = lab_source();
        let e1 = epsilon_q(&QuantumCorrectionParams::single(HBAR, ATOM_MASS)?, &s);
        let e2 = epsilon_q(&QuantumCorrectionParams::single(HBAR, 2.0 * ATOM_MASS)?, &s);
        out.push(Check::new(
            9,
            "eps_q(2m)/eps_q(m)",
            e2 / e1,
            0.25,
            1e-14,
            Comparison::Relative,
        ));

        let (state, setup) = trap_setup()?;
        let half = GaussianState1D {
            sigma_v: 0.5 * state.sigma_v,
            ..state
        };
        out.push(Check::new(
            9,
            "P0(sigma_v/2)/P0(sigma_v)",
            p0(&half, &setup)? / p0(&state, &setup)?,
            16.0,
            1e-14,
            Comparison::Relative,
        ));

        out.push(Check::new(
            9,
            "ratio identities, worst relative error",
            ratio_identity_error(opts.seed)?,
            0.0,
            1e-12,
            Comparison::UpperBound,
        ));
        out.push(Check::new(
            9,
            "potential gradient consistency, worst relative error",
            gradient_error(opts.seed)?,
            0.0,
            1e-6,
            Comparison::UpperBound,
        ));

        let grid = Grid1D::centred(0.0, 60.0, 512)?;
        let packet = gaussian_packet(&grid, 0.0, 0.0, 2.0, 1.0, 1.0)?;
        let evolved = evolve(&packet, &GravityModel::cubic_with(0.1, 200.0)?, 2.0, 10_000)?;
        out.push(Check::new(
            9,
            "norm drift over 1e4 split steps",
            (evolved.norm() - packet.norm()).abs(),
            0.0,
            1e-10,
            Comparison::Absolute,
        ));

        if opts.quick {
            out.push(Check::skipped(9, "grid refinement of the oracle phase"));
        } else {
            out.push(Check::new(
                9,
                "oracle phase change on doubling points and steps",
                refinement_change()?,
                0.0,
                1e-7,
                Comparison::Absolute,
            ));
        }
        let (same, threads) = determinism(opts)?;
        out.push(Check::new(
            9,
            "byte-identical reruns",
            f64::from(u8::from(!same)),
            0.0,
            0.0,
            Comparison::Absolute,
        ));
        out.push(Check::new(
            9,
            "histogram independent of thread count",
            f64::from(u8::from(!threads)),
            0.0,
            0.0,
            Comparison::Absolute,
        ));
        Ok(out)
    };
    collect(9, "property suite", run())
}

fn ratio_identity_error(seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let k = 10f64.powf(rng.random_range(3.0..8.0));
        let t = rng.random_range(0.01..20.0);
        let g = 10f64.powf(rng.random_range(-9.0..1.5));
        let radius = 10f64.powf(rng.random_range(-1.0..7.0));
        let cfg = AIConfig::new(k, t, ATOM_MASS, HBAR, g, radius)?;
        let mean_v = rng.random_range(1e-6..1e-2) * if rng.random::<bool>() { 1.0 } else { -1.0 };
        let second = mean_v * mean_v + rng.random_range(1e-12..1e-4);
        let m = StateMoments {
            mean_v: Vector3::new(mean_v, 0.0, 0.0),
            second_v: Vector3::new(second, 0.0, 0.0),
            ..StateMoments::point(Vector3::zeros(), Vector3::zeros())
        };
        let b = phase_budget(&cfg, &m);
        let r0 = 7.0 * t * t * second / (2.0 * radius * radius);
        let rv = 7.0 * t * second / (4.0 * radius * mean_v);
        let rv_got = b.ratio_vx2_over_vx.unwrap_or(f64::NAN);
        worst = worst
            .max(((b.ratio_vx2_over_0 - r0) / r0).abs())
            .max(((rv_got - rv) / rv).abs());
    }
    Ok(worst)
}

fn gradient_error(seed: u64) -> Result<f64> {
    let s = lab_source();
    let models = [
        GravityModel::exact(s),
        GravityModel::cubic(&s),
        GravityModel::magnetic_analog(0.1, 0.1)?,
        GravityModel::uniform(9.8),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut worst = 0.0f64;
    for model in &models {
        let r_scale = model.radius().unwrap_or(1.0);
        let h = 1e-6 * r_scale;
        for _ in 0..50 {
            let r = Vector3::from_fn(|_, _| rng.random_range(-0.05..0.05) * r_scale);
            let a = model.acceleration(&r)?;
            let mut fd = Vector3::zeros();
            for i in 0..3 {
                let mut e = Vector3::zeros();
                e[i] = h;
                fd[i] = -(model.potential(&(r + e))? - model.potential(&(r - e))?) / (2.0 * h);
            }
            worst = worst.max((fd - a).norm() / a.norm());
        }
    }
    Ok(worst)
}

fn refinement_change() -> Result<f64> {
    let coarse = OracleSetup::acceptance(Some(50.0))?;
    let fine = OracleSetup {
        grid: coarse.grid.refined(),
        n_steps: 2 * coarse.n_steps,
        radius: coarse.radius,
    };
    let state = PreparedState::minimum_uncertainty(0.0, 0.0, 10.0, 1.0, 1.0);
    let a = coarse.interferometer()?.phase(&state)?;
    let b = fine.interferometer()?.phase(&state)?;
    Ok(wrap(b - a).abs())
}

/// Reruns a residual table and a Monte Carlo histogram, returning whether
/// the reruns are byte-identical and whether a single-threaded run matches.
fn determinism(opts: &VerifyOptions) -> Result<(bool, bool)> {
    let model = GravityModel::exact(lab_source());
    let table = || -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        let meta = Metadata::new("residual").with("seed", opts.seed);
        write_residuals(&mut buf, &meta, &reference_curves(&model, 51)?).expect("writing to memory");
        Ok(buf)
    };
    let ens = GaussianEnsemble::isotropic(1e-3, 1e-3, Vector3::zeros(), Vector3::zeros())?;
    let hist = || {
        classical_density_mc(
            &model,
            &ens,
            10.0,
            51,
            10_000,
            opts.seed,
            &IntegrationOptions::default(),
        )
    };
    let first = hist()?;
    let same = table()? == table()? && first == hist()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .expect("single-thread pool");
    let serial = pool.install(hist)?;
    Ok((same, serial == first))
}
