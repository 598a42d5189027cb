use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("singular point: distance {distance:e} m is below the floor {floor:e} m")]
    SingularPoint { distance: f64, floor: f64 },

    #[error("step size underflow at t = {t:e} s (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("integrator exceeded {max_steps} steps before reaching t = {target:e} s (reached {t:e} s)")]
    TooManySteps { max_steps: usize, t: f64, target: f64 },

    #[error("wave packet leaves the grid: support [{lo:e}, {hi:e}] not inside [{x_min:e}, {x_max:e}]")]
    GridFit { lo: f64, hi: f64, x_min: f64, x_max: f64 },

    #[error("time step too coarse: per-step phase increment {phase:.3} rad exceeds pi/4")]
    StepResolution { phase: f64 },

    #[error("velocity spread {sigma_v:e} m/s is below the floor {floor:e} m/s")]
    SigmaVelocityFloor { sigma_v: f64, floor: f64 },

    #[error("adaptive quadrature did not converge (error estimate {estimate:e})")]
    QuadratureNonConvergence { estimate: f64 },

    #[error("predicted differential phase {predicted:.3} rad is too large to unwrap unambiguously")]
    PhaseWrap { predicted: f64 },

    #[error("branch overlap modulus {modulus:e} is too small to define a phase")]
    LostContrast { modulus: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be finite and positive, got {value:e}"),
        })
    }
}

pub(crate) fn ensure_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be finite, got {value:e}"),
        })
    }
}
