//! Physical constants and the parameter values used by the reference scenarios.

use std::f64::consts::PI;

/// CODATA 2018 gravitational constant (m³·kg⁻¹·s⁻²).
pub const G_CODATA: f64 = 6.674_30e-11;

/// Rounded gravitational constant used by the reference scenarios.
pub const G_ROUNDED: f64 = 6.67e-11;

/// Reduced Planck constant (J·s).
pub const HBAR: f64 = 1.054_571_817e-34;

/// Vacuum permeability (T·m/A).
pub const MU0: f64 = 1.256_637_062_12e-6;

/// Atomic test mass of the reference scenarios (kg).
pub const ATOM_MASS: f64 = 1e-25;

/// Laser wavelength of the reference scenarios (m).
pub const LASER_WAVELENGTH: f64 = 500e-9;

/// Laser wave number 2π/λ (1/m).
pub fn laser_wave_number() -> f64 {
    2.0 * PI / LASER_WAVELENGTH
}

/// Satellite test mass source (kg) and its reference distance (m).
pub const SATELLITE_MASS: f64 = 1e3;
pub const SATELLITE_DISTANCE: f64 = 1.5;
pub const SATELLITE_SURFACE_RADIUS: f64 = 1.0;

/// Earth surface values as quoted for the ground-based scenario.
pub const EARTH_G: f64 = 9.8;
pub const EARTH_RADIUS: f64 = 6.4e6;
