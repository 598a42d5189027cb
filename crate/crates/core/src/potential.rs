//! Gravitational and magnetic-analog field models.
//!
//! Coordinates are displaced: the origin sits at distance `R` from the source
//! centre along +x, so a point `r = (x, y, z)` lies at `(R + x, y, z)` from the
//! source. The cubic model is the Taylor expansion of the point-source
//! potential to order `1/R²` with the constant `-GM/R` dropped; it is never
//! added back.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};

/// Distances below `SINGULAR_FLOOR * R` from the source centre are rejected.
pub const SINGULAR_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GravitySource {
    /// Gravitational constant (m³·kg⁻¹·s⁻²).
    pub g_const: f64,
    /// Source mass (kg).
    pub mass: f64,
    /// Distance from the source centre to the coordinate origin (m).
    pub distance: f64,
}

impl GravitySource {
    pub fn new(g_const: f64, mass: f64, distance: f64) -> Result<Self> {
        ensure_positive("G", g_const)?;
        ensure_positive("M", mass)?;
        ensure_positive("R", distance)?;
        let source = Self {
            g_const,
            mass,
            distance,
        };
        ensure_positive("g", source.g())?;
        Ok(source)
    }

    pub fn gm(&self) -> f64 {
        self.g_const * self.mass
    }

    /// Local acceleration `g = GM/R²` at the coordinate origin.
    pub fn g(&self) -> f64 {
        self.gm() / (self.distance * self.distance)
    }
}

/// Largest acceleration on the surface of a sphere of radius `surface_radius`.
pub fn surface_gravity(source: &GravitySource, surface_radius: f64) -> Result<f64> {
    ensure_positive("R_s", surface_radius)?;
    Ok(source.gm() / (surface_radius * surface_radius))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GravityModel {
    /// Point source, `-GM/|R e_x + r|`.
    Exact(GravitySource),
    /// Cubic Taylor expansion with local acceleration `g` and inverse
    /// distance `inv_r`. `inv_r = 0` is uniform gravity.
    Cubic { g: f64, inv_r: f64 },
    /// Field of a line current acting on a magnetic moment; x-only cubic
    /// expansion per unit mass.
    MagneticAnalog { g_b: f64, inv_r: f64 },
}

impl GravityModel {
    pub fn exact(source: GravitySource) -> Self {
        Self::Exact(source)
    }

    pub fn cubic(source: &GravitySource) -> Self {
        Self::Cubic {
            g: source.g(),
            inv_r: 1.0 / source.distance,
        }
    }

    pub fn cubic_with(g: f64, radius: f64) -> Result<Self> {
        ensure_positive("g", g)?;
        ensure_positive("R", radius)?;
        Ok(Self::Cubic { g, inv_r: 1.0 / radius })
    }

    /// Uniform field of strength `g` (the `1/R → 0` limit of the cubic model).
    pub fn uniform(g: f64) -> Self {
        Self::Cubic { g, inv_r: 0.0 }
    }

    pub fn magnetic_analog(g_b: f64, radius: f64) -> Result<Self> {
        ensure_positive("g_b", g_b)?;
        ensure_positive("R", radius)?;
        Ok(Self::MagneticAnalog {
            g_b,
            inv_r: 1.0 / radius,
        })
    }

    /// Local acceleration at the origin.
    pub fn g(&self) -> f64 {
        match self {
            Self::Exact(s) => s.g(),
            Self::Cubic { g, .. } => *g,
            Self::MagneticAnalog { g_b, .. } => *g_b,
        }
    }

    pub fn inv_radius(&self) -> f64 {
        match self {
            Self::Exact(s) => 1.0 / s.distance,
            Self::Cubic { inv_r, .. } | Self::MagneticAnalog { inv_r, .. } => *inv_r,
        }
    }

    /// Distance from origin to source, `None` for the uniform limit.
    pub fn radius(&self) -> Option<f64> {
        let inv_r = self.inv_radius();
        (inv_r > 0.0).then(|| 1.0 / inv_r)
    }

    /// `max(|x|,|y|,|z|) / R`; the cubic expansion is only meaningful when
    /// this is small.
    pub fn validity_ratio(&self, r: &Vector3<f64>) -> f64 {
        r.amax() * self.inv_radius()
    }

    /// The model's own potential: exact for `Exact`, the expansion otherwise.
    pub fn potential(&self, r: &Vector3<f64>) -> Result<f64> {
        match self {
            Self::Exact(s) => potential_exact(s, r),
            _ => Ok(self.potential_cubic(r)),
        }
    }

    /// Cubic expansion of the potential. For `Exact` this is the expansion of
    /// its source.
    pub fn potential_cubic(&self, r: &Vector3<f64>) -> f64 {
        let (x, y, z) = (r.x, r.y, r.z);
        match *self {
            Self::Exact(s) => cubic_potential(s.g(), 1.0 / s.distance, x, y, z),
            Self::Cubic { g, inv_r } => cubic_potential(g, inv_r, x, y, z),
            Self::MagneticAnalog { g_b, inv_r } => g_b * x * (1.0 - inv_r * x + inv_r * inv_r * x * x),
        }
    }

    /// Acceleration `-∇φ` of the model's own potential.
    pub fn acceleration(&self, r: &Vector3<f64>) -> Result<Vector3<f64>> {
        match *self {
            Self::Exact(s) => {
                let d = source_offset(&s, r)?;
                let dist = d.norm();
                Ok(d * (-s.gm() / (dist * dist * dist)))
            }
            Self::Cubic { g, inv_r } => Ok(cubic_acceleration(g, inv_r, r)),
            Self::MagneticAnalog { g_b, inv_r } => {
                let x = r.x;
                let ax = -g_b * (1.0 - 2.0 * inv_r * x + 3.0 * inv_r * inv_r * x * x);
                Ok(Vector3::new(ax, 0.0, 0.0))
            }
        }
    }

    /// Potential along the x axis; used by the one-dimensional propagator.
    pub fn potential_x(&self, x: f64) -> Result<f64> {
        self.potential(&Vector3::new(x, 0.0, 0.0))
    }
}

fn source_offset(s: &GravitySource, r: &Vector3<f64>) -> Result<Vector3<f64>> {
    let d = Vector3::new(s.distance + r.x, r.y, r.z);
    let dist = d.norm();
    let floor = SINGULAR_FLOOR * s.distance;
    if dist.is_nan() || dist < floor {
        return Err(Error::SingularPoint { distance: dist, floor });
    }
    Ok(d)
}

/// `-GM / sqrt((R+x)² + y² + z²)`.
pub fn potential_exact(source: &GravitySource, r: &Vector3<f64>) -> Result<f64> {
    let d = source_offset(source, r)?;
    Ok(-source.gm() / d.norm())
}

fn cubic_potential(g: f64, inv_r: f64, x: f64, y: f64, z: f64) -> f64 {
    let rho2 = y * y + z * z;
    let a = inv_r;
    let a2 = inv_r * inv_r;
    g * x - g * a * x * x + 0.5 * g * a * rho2 + g * a2 * x * x * x - 1.5 * g * a2 * rho2 * x
}

fn cubic_acceleration(g: f64, inv_r: f64, r: &Vector3<f64>) -> Vector3<f64> {
    let (x, y, z) = (r.x, r.y, r.z);
    let a = inv_r;
    let a2 = inv_r * inv_r;
    let rho2 = y * y + z * z;
    let ax = -g * (1.0 - 2.0 * a * x + 3.0 * a2 * x * x - 1.5 * a2 * rho2);
    let transverse = -g * a + 3.0 * g * a2 * x;
    Vector3::new(ax, transverse * y, transverse * z)
}

/// Acceleration `g_b = μ₀ I M_b / (2π R² m)` of an atom with magnetic moment
/// `M_b` next to a straight current `I`.
pub fn magnetic_g_b(mu0: f64, current: f64, moment: f64, radius: f64, mass: f64) -> Result<f64> {
    ensure_positive("mu0", mu0)?;
    ensure_positive("R", radius)?;
    ensure_positive("m", mass)?;
    if !(current >= 0.0 && moment >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "I, M_b",
            reason: "current and magnetic moment must be non-negative".into(),
        });
    }
    Ok(mu0 * current * moment / (2.0 * std::f64::consts::PI * radius * radius * mass))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantumCorrectionParams {
    pub hbar: f64,
    /// Test mass (kg).
    pub mass: f64,
    /// Masses of a gravitationally bound pair; when set, the two-body
    /// coefficient is used and the source mass is replaced by `m1 + m2`.
    pub two_body: Option<(f64, f64)>,
}

impl QuantumCorrectionParams {
    pub fn single(hbar: f64, mass: f64) -> Result<Self> {
        ensure_positive("hbar", hbar)?;
        ensure_positive("m", mass)?;
        Ok(Self {
            hbar,
            mass,
            two_body: None,
        })
    }

    pub fn two_body(hbar: f64, m1: f64, m2: f64) -> Result<Self> {
        ensure_positive("hbar", hbar)?;
        ensure_positive("m1", m1)?;
        ensure_positive("m2", m2)?;
        Ok(Self {
            hbar,
            mass: m1 * m2 / (m1 + m2),
            two_body: Some((m1, m2)),
        })
    }
}

/// Strength of the ħ² correction to the Wigner transport equation,
/// `GMħ²/(4R⁴m²)`, or `ħ²G(m1+m2)³/(4R⁴m1²m2²)` for a bound pair.
pub fn epsilon_q(params: &QuantumCorrectionParams, source: &GravitySource) -> f64 {
    let r4 = source.distance.powi(4);
    let hbar2 = params.hbar * params.hbar;
    match params.two_body {
        None => source.gm() * hbar2 / (4.0 * r4 * params.mass * params.mass),
        Some((m1, m2)) => {
            let total = m1 + m2;
            hbar2 * source.g_const * total.powi(3) / (4.0 * r4 * m1 * m1 * m2 * m2)
        }
    }
}

/// `g ħ² / (4 R² m²)` from the local acceleration directly.
pub fn epsilon_q_local(g: f64, inv_r: f64, mass: f64, hbar: f64) -> f64 {
    g * hbar * hbar * inv_r * inv_r / (4.0 * mass * mass)
}
