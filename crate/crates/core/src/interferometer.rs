//! Closed-form phase budget of the three-pulse interferometer with
//! second-order gravity gradients.
//!
//! The laser wave vector is along x and both free-fall stages last `t`.
//! `theta_vx2` uses the raw second moment `⟨v_x²⟩`, which equals the velocity
//! variance only when `⟨v_x⟩ = 0`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::constants::{
    laser_wave_number, ATOM_MASS, EARTH_G, EARTH_RADIUS, G_ROUNDED, HBAR, SATELLITE_DISTANCE, SATELLITE_MASS,
};
use crate::error::{ensure_positive, Error, Result};
use crate::moments::StateMoments;
use crate::potential::GravitySource;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AIConfig {
    /// Laser wave number (1/m).
    pub k: f64,
    /// Duration of each free-fall stage (s).
    pub t: f64,
    /// Atom mass (kg).
    pub mass: f64,
    pub hbar: f64,
    /// Local acceleration (m/s²).
    pub g: f64,
    /// Distance to the source (m).
    pub radius: f64,
}

impl AIConfig {
    pub fn new(k: f64, t: f64, mass: f64, hbar: f64, g: f64, radius: f64) -> Result<Self> {
        ensure_positive("k", k)?;
        ensure_positive("t", t)?;
        ensure_positive("m", mass)?;
        ensure_positive("hbar", hbar)?;
        ensure_positive("g", g)?;
        ensure_positive("R", radius)?;
        let cfg = Self {
            k,
            t,
            mass,
            hbar,
            g,
            radius,
        };
        ensure_positive("hbar k / m", cfg.kick_velocity())?;
        Ok(cfg)
    }

    pub fn from_source(k: f64, t: f64, mass: f64, hbar: f64, source: &GravitySource) -> Result<Self> {
        Self::new(k, t, mass, hbar, source.g(), source.distance)
    }

    /// Recoil velocity `ħk/m`.
    pub fn kick_velocity(&self) -> f64 {
        self.hbar * self.k / self.mass
    }

    /// Uniform-gravity phase `g k t²`.
    pub fn theta0(&self) -> f64 {
        self.g * self.k * self.t * self.t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseBreakdown {
    pub theta0: f64,
    pub theta_prime: f64,
    pub theta_vx: f64,
    pub theta_vx2: f64,
    pub ratio_vx2_over_0: f64,
    /// Undefined when `⟨v_x⟩ = 0`.
    pub ratio_vx2_over_vx: Option<f64>,
}

/// All closed-form phases for `cfg` and an initial state with moments `m`.
pub fn phase_budget(cfg: &AIConfig, m: &StateMoments) -> PhaseBreakdown {
    let AIConfig {
        k,
        t,
        mass,
        hbar,
        g,
        radius,
    } = *cfg;
    let theta0 = g * k * t * t;
    let theta_prime = 7.0 * theta0 * g * t * t / (6.0 * radius) - theta0 * hbar * k * t / (mass * radius);
    let theta_vx = 2.0 * theta0 * t * m.mean_v.x / radius;
    let theta_vx2 = 7.0 * g * k * t.powi(4) * m.second_v.x / (2.0 * radius * radius);
    PhaseBreakdown {
        theta0,
        theta_prime,
        theta_vx,
        theta_vx2,
        ratio_vx2_over_0: theta_vx2 / theta0,
        ratio_vx2_over_vx: (theta_vx != 0.0).then(|| theta_vx2 / theta_vx),
    }
}

/// Phase budget with gravity replaced by the magnetic analog acceleration
/// `g_b` at distance `radius` from the current.
pub fn phase_budget_magnetic(g_b: f64, radius: f64, cfg: &AIConfig, m: &StateMoments) -> Result<PhaseBreakdown> {
    ensure_positive("R", radius)?;
    if !(g_b >= 0.0 && g_b.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "g_b",
            reason: format!("must be finite and non-negative, got {g_b:e}"),
        });
    }
    Ok(phase_budget(&AIConfig { g: g_b, radius, ..*cfg }, m))
}

/// Scalar parts of the position-operator commutators entering the phase.
///
/// `[x̂₀, x̂₁] = i c01`, `[x̂₀, x̂₂] = i (a x̂ + b v̂_x + c)` with
/// `(a, b, c) = affine`, and `[x̂₀, [x̂₀, x̂₂]] = c002`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommutatorCoefficients {
    pub c01: f64,
    pub affine: [f64; 3],
    pub c002: f64,
}

pub fn commutator_coefficients(cfg: &AIConfig) -> CommutatorCoefficients {
    commutators_at(cfg.g, cfg.t, cfg.hbar / cfg.mass)
}

/// As [`commutator_coefficients`] for bare `g`, `t` and `ħ/m`.
pub fn commutators_at(g: f64, t: f64, hbar_over_m: f64) -> CommutatorCoefficients {
    let t3 = t * t * t;
    let t4 = t3 * t;
    CommutatorCoefficients {
        c01: -2.0 * g * t3 / 3.0 * hbar_over_m,
        affine: [
            2.0 * g * t3 * hbar_over_m,
            0.5 * g * t4 * hbar_over_m,
            -7.0 * g * g * t4 * t / 30.0 * hbar_over_m,
        ],
        c002: 1.5 * g * t4 * hbar_over_m * hbar_over_m,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preset {
    Earth,
    Satellite1000kg,
    Satellite100kg,
    Magnetic,
}

impl Preset {
    pub const ALL: [Preset; 4] = [
        Preset::Earth,
        Preset::Satellite1000kg,
        Preset::Satellite100kg,
        Preset::Magnetic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Earth => "earth",
            Preset::Satellite1000kg => "satellite-1000kg",
            Preset::Satellite100kg => "satellite-100kg",
            Preset::Magnetic => "magnetic",
        }
    }

    /// Interferometer parameters; every preset uses k = 2π/500 nm and
    /// m = 1e-25 kg.
    pub fn config(self) -> AIConfig {
        let k = laser_wave_number();
        let (t, g, radius) = match self {
            Preset::Earth => (1.0, EARTH_G, EARTH_RADIUS),
            Preset::Satellite1000kg => (
                10.0,
                G_ROUNDED * SATELLITE_MASS / SATELLITE_DISTANCE.powi(2),
                SATELLITE_DISTANCE,
            ),
            Preset::Satellite100kg => (10.0, G_ROUNDED * 100.0 / SATELLITE_DISTANCE.powi(2), SATELLITE_DISTANCE),
            Preset::Magnetic => (0.1, 0.1, 0.1),
        };
        AIConfig {
            k,
            t,
            mass: ATOM_MASS,
            hbar: HBAR,
            g,
            radius,
        }
    }

    /// Centred initial state with `√⟨v_x²⟩ = 0.1 ħk/m` on every axis.
    pub fn moments(self) -> StateMoments {
        let cfg = self.config();
        let sv = 0.1 * cfg.kick_velocity();
        StateMoments {
            mean_r: Vector3::zeros(),
            mean_v: Vector3::zeros(),
            second_r: Vector3::zeros(),
            second_v: Vector3::repeat(sv * sv),
            sym_rv: Vector3::zeros(),
        }
    }

    pub fn budget(self) -> PhaseBreakdown {
        phase_budget(&self.config(), &self.moments())
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidParameter {
                name: "preset",
                reason: format!("unknown preset `{s}`"),
            })
    }
}

/// Radians expressed in units of π.
pub fn in_pi(rad: f64) -> f64 {
    rad / PI
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn earth_preset() {
        let b = Preset::Earth.budget();
        assert!(rel(in_pi(b.theta_vx2), 5.9e-12) < 0.02, "{:e}", in_pi(b.theta_vx2));
    }

    #[test]
    fn satellite_presets() {
        let b = Preset::Satellite1000kg.budget();
        assert!(rel(in_pi(b.theta0), 12.0) < 0.05);
        assert!(rel(in_pi(b.theta_vx2), 3.2e-3) < 0.05);
        let b = Preset::Satellite100kg.budget();
        assert!(rel(in_pi(b.theta0), 1.2) < 0.05);
        assert!(rel(in_pi(b.theta_vx2), 3.2e-4) < 0.05);
    }

    #[test]
    fn magnetic_preset_and_scaling() {
        let b = Preset::Magnetic.budget();
        assert!(rel(in_pi(b.theta0), 4e3) < 0.05);
        assert!(rel(in_pi(b.theta_vx2), 0.025) < 0.05);

        let cfg = Preset::Magnetic.config();
        let m = Preset::Magnetic.moments();
        let zero = phase_budget_magnetic(0.0, 0.1, &cfg, &m).unwrap();
        assert_eq!(
            (zero.theta0, zero.theta_prime, zero.theta_vx, zero.theta_vx2),
            (0.0, 0.0, 0.0, 0.0)
        );

        let long = AIConfig { t: 2.0 * cfg.t, ..cfg };
        let b2 = phase_budget_magnetic(0.1, 0.1, &long, &m).unwrap();
        assert!(rel(b2.theta0, 4.0 * b.theta0) < 1e-14);
        assert!(rel(b2.theta_vx2, 16.0 * b.theta_vx2) < 1e-14);
    }

    #[test]
    fn preset_names_round_trip() {
        for p in Preset::ALL {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        assert!("moon".parse::<Preset>().is_err());
    }

    #[test]
    fn commutators_natural_units() {
        let c = commutators_at(1.0, 1.0, 1.0);
        assert!((c.c01 + 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(c.affine[0], 2.0);
        assert_eq!(c.affine[1], 0.5);
        assert!((c.affine[2] + 7.0 / 30.0).abs() < 1e-15);
        assert_eq!(c.c002, 1.5);
        let z = commutators_at(1.0, 0.0, 1.0);
        assert_eq!((z.c01, z.affine, z.c002), (-0.0, [0.0, 0.0, -0.0], 0.0));
        let d = commutators_at(2.0, 1.0, 1.0);
        assert!(rel(d.c01, 2.0 * c.c01) < 1e-15);
        assert!(rel(d.c002, 2.0 * c.c002) < 1e-15);
        assert!(rel(d.affine[2], 4.0 * c.affine[2]) < 1e-15);
    }

    #[test]
    fn ground_ordering() {
        let cfg = Preset::Earth.config();
        let v = 0.1 * cfg.kick_velocity();
        let mut m = Preset::Earth.moments();
        m.mean_v.x = v;
        m.second_v.x = 2.0 * v * v;
        let b = phase_budget(&cfg, &m);
        let r_vx = b.ratio_vx2_over_vx.unwrap();
        assert!(
            b.ratio_vx2_over_0 < r_vx && r_vx < 1e-6,
            "{:e} {r_vx:e}",
            b.ratio_vx2_over_0
        );
    }

    #[test]
    fn recoil_term_vanishes_for_heavy_atoms() {
        let cfg = Preset::Satellite1000kg.config();
        let heavy = AIConfig { mass: 1e10, ..cfg };
        let b = phase_budget(&heavy, &Preset::Satellite1000kg.moments());
        let limit = 7.0 * b.theta0 * cfg.g * cfg.t * cfg.t / (6.0 * cfg.radius);
        assert!(rel(b.theta_prime, limit) < 1e-12);
    }

    proptest! {
        #[test]
        fn ratio_identities(
            k in 1e3f64..1e8,
            t in 0.01f64..20.0,
            g in 1e-9f64..20.0,
            radius in 0.05f64..1e7,
            mean_v in prop_oneof![-1e-2f64..-1e-6, 1e-6f64..1e-2],
            var_v in 1e-12f64..1e-4,
        ) {
            let cfg = AIConfig::new(k, t, ATOM_MASS, HBAR, g, radius).unwrap();
            let mut m = Preset::Earth.moments();
            m.mean_v.x = mean_v;
            m.second_v.x = var_v + mean_v * mean_v;
            let b = phase_budget(&cfg, &m);
            let r0 = 7.0 * t * t * m.second_v.x / (2.0 * radius * radius);
            let rv = 7.0 * t * m.second_v.x / (4.0 * radius * mean_v);
            prop_assert!(rel(b.ratio_vx2_over_0, r0) < 1e-12);
            prop_assert!(rel(b.ratio_vx2_over_vx.unwrap(), rv) < 1e-12);
            prop_assert!(rel(b.theta0, g * k * t * t) < 1e-15);
        }
    }
}
