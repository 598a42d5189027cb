//! Free-fall dynamics and atom-interferometer phases in second-order gravity
//! gradients.

pub mod constants;
pub mod error;
pub mod interferometer;
pub mod io;
pub mod moments;
pub mod ode;
pub mod potential;
pub mod trajectory;
pub mod verify;
pub mod wavepacket;
pub mod wigner;

pub use error::{Error, Result};
