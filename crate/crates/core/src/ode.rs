//! Adaptive Dormand–Prince 5(4) integrator.
//!
//! Steps are clamped so that the solution lands exactly on every requested
//! output time; no interpolation is involved in the reported states.

use crate::error::{Error, Result};

pub trait OdeSystem<const N: usize> {
    fn rhs(&self, t: f64, y: &[f64; N], dydt: &mut [f64; N]) -> Result<()>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperConfig {
    pub tol: Tolerances,
    pub max_steps: usize,
    /// Initial step; estimated from the derivative when `None`.
    pub initial_step: Option<f64>,
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self {
            tol: Tolerances { rel: 1e-12, abs: 1e-15 },
            max_steps: 5_000_000,
            initial_step: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

/// Integrates `sys` from `(t0, y0)` and returns the state at each of `times`.
///
/// `times` must be monotone in one direction starting from `t0`; backward
/// integration is supported.
pub fn integrate<const N: usize, S: OdeSystem<N>>(
    sys: &S,
    t0: f64,
    y0: [f64; N],
    times: &[f64],
    cfg: &StepperConfig,
) -> Result<(Vec<[f64; N]>, Stats)> {
    let tol = cfg.tol;
    if !(tol.rel > 0.0 && tol.rel <= 1e-3 && tol.abs > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tolerances",
            reason: format!("rel must lie in (0, 1e-3] and abs > 0, got {tol:?}"),
        });
    }
    let dir = match times.iter().find(|&&t| t != t0) {
        Some(&t) if t > t0 => 1.0,
        Some(_) => -1.0,
        None => 1.0,
    };
    let mut prev = t0;
    for &t in times {
        if !t.is_finite() || (t - prev) * dir < 0.0 {
            return Err(Error::InvalidParameter {
                name: "times",
                reason: "output times must be finite and monotone from t0".into(),
            });
        }
        prev = t;
    }

    let mut stats = Stats::default();
    let mut out = Vec::with_capacity(times.len());
    let mut t = t0;
    let mut y = y0;
    let mut k1 = [0.0; N];
    sys.rhs(t, &y, &mut k1)?;
    stats.rhs_evals += 1;

    let span = times.last().map_or(0.0, |&tl| (tl - t0).abs());
    let mut h = match cfg.initial_step {
        Some(h0) => h0.abs(),
        None => initial_step(sys, t, &y, &k1, dir, tol, &mut stats)?,
    };
    if span > 0.0 {
        h = h.min(span);
    }

    let mut k = [[0.0; N]; 7];
    for &target in times {
        while (target - t) * dir > 0.0 {
            if stats.accepted + stats.rejected >= cfg.max_steps {
                return Err(Error::TooManySteps {
                    max_steps: cfg.max_steps,
                    t,
                    target,
                });
            }
            let remaining = (target - t).abs();
            let landing = h >= remaining;
            let step = if landing { remaining } else { h };
            if step <= 16.0 * f64::EPSILON * t.abs().max(span) {
                return Err(Error::StepSizeUnderflow { t, h: step });
            }
            let hs = step * dir;

            k[0] = k1;
            let mut tmp = [0.0; N];
            stage(&y, hs, &k, &[A21], &mut tmp);
            sys.rhs(t + C2 * hs, &tmp, &mut k[1])?;
            stage(&y, hs, &k, &[A31, A32], &mut tmp);
            sys.rhs(t + C3 * hs, &tmp, &mut k[2])?;
            stage(&y, hs, &k, &[A41, A42, A43], &mut tmp);
            sys.rhs(t + C4 * hs, &tmp, &mut k[3])?;
            stage(&y, hs, &k, &[A51, A52, A53, A54], &mut tmp);
            sys.rhs(t + C5 * hs, &tmp, &mut k[4])?;
            stage(&y, hs, &k, &[A61, A62, A63, A64, A65], &mut tmp);
            sys.rhs(t + hs, &tmp, &mut k[5])?;
            let mut y_new = [0.0; N];
            stage(&y, hs, &k, &[A71, 0.0, A73, A74, A75, A76], &mut y_new);
            let t_new = if landing { target } else { t + hs };
            sys.rhs(t_new, &y_new, &mut k[6])?;
            stats.rhs_evals += 6;

            let mut acc = 0.0;
            for i in 0..N {
                let e = hs * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
                let sc = tol.abs + tol.rel * y[i].abs().max(y_new[i].abs());
                acc += (e / sc) * (e / sc);
            }
            let err = (acc / N as f64).sqrt();
            if !err.is_finite() {
                stats.rejected += 1;
                h = step * MIN_FACTOR;
                continue;
            }

            let factor = if err == 0.0 {
                MAX_FACTOR
            } else {
                (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
            };
            if err <= 1.0 {
                stats.accepted += 1;
                t = t_new;
                y = y_new;
                k1 = k[6];
                // a clamped landing step says nothing about the natural size
                h = if landing { h.max(step * factor) } else { step * factor };
            } else {
                stats.rejected += 1;
                h = step * factor.min(1.0);
            }
        }
        out.push(y);
    }
    Ok((out, stats))
}

fn stage<const N: usize>(y: &[f64; N], h: f64, k: &[[f64; N]; 7], a: &[f64], out: &mut [f64; N]) {
    for i in 0..N {
        let mut s = 0.0;
        for (j, &aj) in a.iter().enumerate() {
            s += aj * k[j][i];
        }
        out[i] = y[i] + h * s;
    }
}

fn initial_step<const N: usize, S: OdeSystem<N>>(
    sys: &S,
    t: f64,
    y: &[f64; N],
    f0: &[f64; N],
    dir: f64,
    tol: Tolerances,
    stats: &mut Stats,
) -> Result<f64> {
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..N {
        let sc = tol.abs + tol.rel * y[i].abs();
        d0 += (y[i] / sc).powi(2);
        d1 += (f0[i] / sc).powi(2);
    }
    d0 = (d0 / N as f64).sqrt();
    d1 = (d1 / N as f64).sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let mut y1 = [0.0; N];
    for i in 0..N {
        y1[i] = y[i] + dir * h0 * f0[i];
    }
    let mut f1 = [0.0; N];
    sys.rhs(t + dir * h0, &y1, &mut f1)?;
    stats.rhs_evals += 1;
    let mut d2 = 0.0;
    for i in 0..N {
        let sc = tol.abs + tol.rel * y[i].abs();
        d2 += ((f1[i] - f0[i]) / sc).powi(2);
    }
    d2 = (d2 / N as f64).sqrt() / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    Ok((100.0 * h0).min(h1))
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Oscillator;
    impl OdeSystem<2> for Oscillator {
        fn rhs(&self, _t: f64, y: &[f64; 2], d: &mut [f64; 2]) -> Result<()> {
            d[0] = y[1];
            d[1] = -y[0];
            Ok(())
        }
    }

    struct Exponential;
    impl OdeSystem<1> for Exponential {
        fn rhs(&self, _t: f64, y: &[f64; 1], d: &mut [f64; 1]) -> Result<()> {
            d[0] = y[0];
            Ok(())
        }
    }

    #[test]
    fn harmonic_oscillator_lands_on_output_times() {
        let times: Vec<f64> = (0..=20).map(|i| i as f64 * 0.5).collect();
        let (ys, stats) = integrate(&Oscillator, 0.0, [1.0, 0.0], &times, &StepperConfig::default()).unwrap();
        for (t, y) in times.iter().zip(&ys) {
            assert!((y[0] - t.cos()).abs() < 1e-10, "t={t}");
            assert!((y[1] + t.sin()).abs() < 1e-10);
        }
        assert!(stats.accepted > 0);
    }

    #[test]
    fn backward_integration() {
        let (ys, _) = integrate(&Exponential, 1.0, [1f64.exp()], &[0.0], &StepperConfig::default()).unwrap();
        assert!((ys[0][0] - 1.0).abs() < 1e-11);
    }

    #[test]
    fn output_at_start_time_is_initial_state() {
        let (ys, _) = integrate(&Exponential, 0.0, [2.0], &[0.0, 0.0, 1.0], &StepperConfig::default()).unwrap();
        assert_eq!(ys[0][0], 2.0);
        assert_eq!(ys[1][0], 2.0);
    }

    #[test]
    fn rejects_bad_tolerances_and_times() {
        let mut cfg = StepperConfig::default();
        cfg.tol.rel = 0.1;
        assert!(integrate(&Exponential, 0.0, [1.0], &[1.0], &cfg).is_err());
        let cfg = StepperConfig::default();
        assert!(integrate(&Exponential, 0.0, [1.0], &[1.0, 0.5], &cfg).is_err());
    }

    #[test]
    fn max_steps_reported() {
        let cfg = StepperConfig {
            max_steps: 3,
            ..StepperConfig::default()
        };
        let r = integrate(&Oscillator, 0.0, [1.0, 0.0], &[100.0], &cfg);
        assert!(matches!(r, Err(Error::TooManySteps { .. })));
    }

    struct Blowup;
    impl OdeSystem<1> for Blowup {
        fn rhs(&self, _t: f64, y: &[f64; 1], d: &mut [f64; 1]) -> Result<()> {
            d[0] = y[0] * y[0];
            Ok(())
        }
    }

    #[test]
    fn finite_time_blowup_underflows() {
        // y' = y², y(0) = 1 blows up at t = 1
        let r = integrate(&Blowup, 0.0, [1.0], &[2.0], &StepperConfig::default());
        match r {
            Err(Error::StepSizeUnderflow { t, .. }) => assert!((t - 1.0).abs() < 1e-3),
            Err(Error::TooManySteps { t, .. }) => assert!((t - 1.0).abs() < 1e-3),
            other => panic!("unexpected {other:?}"),
        }
    }
}
