//! Plain-text artifacts: CSV tables with `#` metadata headers and the
//! serializable phase summary.
//!
//! Floats are written with `{:e}`, the shortest representation that round
//! trips, so identical inputs give byte-identical files.

use std::io::{self, Write};

use serde::Serialize;

use crate::interferometer::{in_pi, AIConfig, PhaseBreakdown};
use crate::trajectory::{ResidualPoint, TrajectorySample};
use crate::wavepacket::SweepPoint;
use crate::wigner::DensityProfile;

/// Ordered `key = value` pairs echoed at the top of every file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metadata(pub Vec<(String, String)>);

impl Metadata {
    pub fn new(artifact: &str) -> Self {
        let mut m = Self::default();
        m.push("artifact", artifact);
        m.push("version", env!("CARGO_PKG_VERSION"));
        m
    }

    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.0.push((key.to_owned(), value.to_string()));
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.push(key, value);
        self
    }

    pub fn write(&self, w: &mut impl Write) -> io::Result<()> {
        for (k, v) in &self.0 {
            writeln!(w, "# {k} = {v}")?;
        }
        Ok(())
    }
}

pub fn write_trajectory(w: &mut impl Write, meta: &Metadata, samples: &[TrajectorySample]) -> io::Result<()> {
    meta.write(w)?;
    writeln!(w, "t,x,y,z,vx,vy,vz")?;
    for s in samples {
        let (r, v) = (s.position, s.velocity);
        writeln!(
            w,
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            s.t, r.x, r.y, r.z, v.x, v.y, v.z
        )?;
    }
    Ok(())
}

/// Several labelled trajectories in one table, one block of rows each.
pub fn write_trajectories(
    w: &mut impl Write,
    meta: &Metadata,
    runs: &[(String, Vec<TrajectorySample>)],
) -> io::Result<()> {
    meta.write(w)?;
    writeln!(w, "case,t,x,y,z,vx,vy,vz")?;
    for (label, samples) in runs {
        for s in samples {
            let (r, v) = (s.position, s.velocity);
            writeln!(
                w,
                "{label},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                s.t, r.x, r.y, r.z, v.x, v.y, v.z
            )?;
        }
    }
    Ok(())
}

/// One block of rows per labelled curve.
pub fn write_residuals(w: &mut impl Write, meta: &Metadata, curves: &[(String, Vec<ResidualPoint>)]) -> io::Result<()> {
    meta.write(w)?;
    writeln!(w, "case,t,analytic,numeric")?;
    for (label, points) in curves {
        for p in points {
            writeln!(w, "{label},{:e},{:e},{:e}", p.t, p.analytic, p.numeric)?;
        }
    }
    Ok(())
}

pub fn write_sweep(w: &mut impl Write, meta: &Metadata, rows: &[SweepPoint]) -> io::Result<()> {
    meta.write(w)?;
    writeln!(w, "param,value,phase_rad,overlap_modulus")?;
    for r in rows {
        writeln!(w, "{},{:e},{:e},{:e}", r.param, r.value, r.phase, r.overlap_modulus)?;
    }
    Ok(())
}

/// `uniform` and `quantum` must share their sample points.
pub fn write_profile(
    w: &mut impl Write,
    meta: &Metadata,
    uniform: &DensityProfile,
    quantum: &DensityProfile,
) -> io::Result<()> {
    if uniform.x != quantum.x {
        return Err(io::Error::new(
            io::ErrorKind::InvalidInput,
            "profiles use different grids",
        ));
    }
    meta.write(w)?;
    writeln!(w, "x,P_u,P_q,P_total")?;
    for ((x, pu), pq) in uniform.x.iter().zip(&uniform.density).zip(&quantum.density) {
        writeln!(w, "{x:e},{pu:e},{pq:e},{:e}", pu + pq)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ratios {
    pub vx2_over_0: f64,
    pub vx2_over_vx: Option<f64>,
}

/// Phase budget in the layout of the JSON summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseSummary {
    pub preset: Option<String>,
    pub theta0_rad: f64,
    pub theta0_pi: f64,
    pub theta_prime_rad: f64,
    pub theta_vx_rad: f64,
    pub theta_vx2_rad: f64,
    pub theta_vx2_pi: f64,
    pub ratios: Ratios,
    pub config: AIConfig,
    /// `⟨v_x⟩` used for `theta_vx` (m/s).
    pub mean_vx: f64,
    /// Raw second moment `⟨v_x²⟩` used for `theta_vx2` (m²/s²).
    pub second_vx: f64,
}

impl PhaseSummary {
    pub fn new(preset: Option<&str>, config: &AIConfig, b: &PhaseBreakdown, mean_vx: f64, second_vx: f64) -> Self {
        Self {
            preset: preset.map(str::to_owned),
            theta0_rad: b.theta0,
            theta0_pi: in_pi(b.theta0),
            theta_prime_rad: b.theta_prime,
            theta_vx_rad: b.theta_vx,
            theta_vx2_rad: b.theta_vx2,
            theta_vx2_pi: in_pi(b.theta_vx2),
            ratios: Ratios {
                vx2_over_0: b.ratio_vx2_over_0,
                vx2_over_vx: b.ratio_vx2_over_vx,
            },
            config: *config,
            mean_vx,
            second_vx,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    #[test]
    fn trajectory_layout() {
        let mut buf = Vec::new();
        let meta = Metadata::new("trajectory").with("seed", 7);
        let s = TrajectorySample {
            t: 0.5,
            position: Vector3::new(1.0, -2.5e-3, 0.0),
            velocity: Vector3::new(0.0, 1e-3, 3.0),
        };
        write_trajectory(&mut buf, &meta, &[s]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# artifact = trajectory");
        assert!(lines[1].starts_with("# version = "));
        assert_eq!(lines[2], "# seed = 7");
        assert_eq!(lines[3], "t,x,y,z,vx,vy,vz");
        assert_eq!(lines[4], "5e-1,1e0,-2.5e-3,0e0,0e0,1e-3,3e0");
    }

    #[test]
    fn labelled_trajectories_share_one_table() {
        let s = TrajectorySample {
            t: 1.0,
            position: Vector3::zeros(),
            velocity: Vector3::new(2.0, 0.0, 0.0),
        };
        let mut buf = Vec::new();
        write_trajectories(
            &mut buf,
            &Metadata::default(),
            &[("a".into(), vec![s]), ("b".into(), vec![s, s])],
        )
        .unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("case,t,x,y,z,vx,vy,vz"));
        assert_eq!(text.lines().filter(|l| l.starts_with("b,")).count(), 2);
        assert!(text.contains("a,1e0,0e0,0e0,0e0,2e0,0e0,0e0\n"));
    }

    #[test]
    fn floats_round_trip() {
        let x = 0.1 + 0.2;
        let s = format!("{x:e}");
        assert_eq!(s.parse::<f64>().unwrap(), x);
    }

    #[test]
    fn profile_rejects_mismatched_grids() {
        let a = DensityProfile {
            t: 0.0,
            x: vec![0.0, 1.0],
            density: vec![1.0, 2.0],
            bin_width: None,
        };
        let b = DensityProfile {
            x: vec![0.0, 2.0],
            ..a.clone()
        };
        assert!(write_profile(&mut Vec::new(), &Metadata::default(), &a, &b).is_err());
        let mut buf = Vec::new();
        write_profile(&mut buf, &Metadata::default(), &a, &a).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "x,P_u,P_q,P_total\n0e0,1e0,1e0,2e0\n1e0,2e0,2e0,4e0\n"
        );
    }
}
