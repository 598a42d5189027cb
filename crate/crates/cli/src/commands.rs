use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use freefall::constants::{G_ROUNDED, HBAR};
use freefall::interferometer::{in_pi, phase_budget, AIConfig, Preset};
use freefall::io::{write_profile, write_residuals, write_trajectories, Metadata, PhaseSummary};
use freefall::moments::StateMoments;
use freefall::potential::{GravityModel, GravitySource};
use freefall::trajectory::{
    integrate_exact, residual_deviation, second_order_residual, uniform_times, InitialConditions, IntegrationOptions,
};
use freefall::verify::{
    lab_source, reference_label, run_all, trap_setup, VerifyOptions, REFERENCE_VELOCITIES, SPREAD_PHASE_COEFFICIENT,
};
use freefall::wigner::{closed_form_profiles, p0, pq_amplitude, FallSetup, GaussianState1D, DEFAULT_BINS};
use nalgebra::Vector3;
use serde_json::{json, Map, Value};

use crate::config::{ConfigError, RunConfig, Units};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Model(#[from] freefall::Error),
    #[error("cannot write output: {0}")]
    Io(#[from] io::Error),
    #[error("{failed} verification check(s) failed")]
    Verification { failed: usize },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Verification { .. } => 1,
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Model(freefall::Error::InvalidParameter { .. } | freefall::Error::SigmaVelocityFloor { .. }) => 2,
            CliError::Model(_) => 3,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn metadata(artifact: &str, cfg: &RunConfig) -> Metadata {
    let mut m = Metadata::new(artifact);
    for (k, v) in cfg.echo() {
        m.push(k, v);
    }
    m
}

/// Point source with surface acceleration `g` at distance `r`.
fn source(cfg: &RunConfig, g: f64, r: f64) -> Result<GravitySource> {
    let big_g = match cfg.units {
        Units::Si => G_ROUNDED,
        Units::Natural => 1.0,
    };
    Ok(GravitySource::new(big_g, g * r * r / big_g, r)?)
}

fn hbar(cfg: &RunConfig) -> f64 {
    match cfg.units {
        Units::Si => HBAR,
        Units::Natural => 1.0,
    }
}

pub fn trajectory(cfg: &RunConfig) -> Result<()> {
    let (g0, r0, t0, vscale) = match cfg.units {
        Units::Si => (lab_source().g(), lab_source().distance, 10.0, 1e-3),
        Units::Natural => (1.0, 50.0, 1.0, 1.0),
    };
    let g = cfg.g.unwrap_or(g0);
    let r = cfg.radius.unwrap_or(r0);
    let t_end = cfg.t.unwrap_or(t0);
    let model = if cfg.uniform {
        GravityModel::uniform(g)
    } else if cfg.units == Units::Si && cfg.g.is_none() && cfg.radius.is_none() {
        GravityModel::exact(lab_source())
    } else {
        GravityModel::exact(source(cfg, g, r)?)
    };
    let cases: Vec<(String, [f64; 3])> = match cfg.velocity {
        Some(v) => vec![(format!("{:e}/{:e}/{:e}", v[0], v[1], v[2]), v)],
        None => REFERENCE_VELOCITIES
            .iter()
            .map(|v| (reference_label(v), v.map(|c| c * vscale)))
            .collect(),
    };
    let times = uniform_times(t_end, cfg.points.unwrap_or(201));
    let opts = IntegrationOptions::default();
    let mut runs = Vec::new();
    let mut curves = Vec::new();
    for (label, v) in cases {
        let ic = InitialConditions::new(Vector3::zeros(), Vector3::from(v))?;
        runs.push((label.clone(), integrate_exact(&model, &ic, &times, &opts)?));
        let res = second_order_residual(&model, &ic, &times, &opts)?;
        println!(
            "{label}: max |x2/R^2 - residual| / max |x2/R^2| = {:e}",
            residual_deviation(&res)
        );
        curves.push((label, res));
    }
    let meta = |artifact: &str| {
        metadata(artifact, cfg)
            .with("model", if cfg.uniform { "uniform" } else { "point source" })
            .with("g_used", format!("{:e}", model.g()))
            .with("inv_R_used", format!("{:e}", model.inv_radius()))
            .with(
                "velocity_unit",
                if cfg.velocity.is_none() && cfg.units == Units::Si {
                    "case labels in mm/s"
                } else {
                    "as given"
                },
            )
    };
    let mut w = create(&cfg.out, "trajectory.csv")?;
    write_trajectories(&mut w, &meta("trajectory"), &runs)?;
    w.flush()?;
    let mut w = create(&cfg.out, "residual.csv")?;
    write_residuals(&mut w, &meta("residual"), &curves)?;
    w.flush()?;
    Ok(())
}

fn has_physics_overrides(cfg: &RunConfig) -> bool {
    [cfg.g, cfg.radius, cfg.t, cfg.k, cfg.mass, cfg.sigma_v]
        .iter()
        .any(Option::is_some)
}

/// Applies flag overrides to `base` and rebuilds it through the validating
/// constructor.
fn override_config(cfg: &RunConfig, base: AIConfig) -> Result<AIConfig> {
    Ok(AIConfig::new(
        cfg.k.unwrap_or(base.k),
        cfg.t.unwrap_or(base.t),
        cfg.mass.unwrap_or(base.mass),
        base.hbar,
        cfg.g.unwrap_or(base.g),
        cfg.radius.unwrap_or(base.radius),
    )?)
}

/// Centred state with `⟨v_x²⟩ = σ_v²` on every axis.
fn spread_moments(sigma_v: f64) -> StateMoments {
    StateMoments {
        second_v: Vector3::repeat(sigma_v * sigma_v),
        ..StateMoments::point(Vector3::zeros(), Vector3::zeros())
    }
}

pub fn phase(cfg: &RunConfig) -> Result<()> {
    let preset = cfg.preset.as_deref().map(str::parse::<Preset>).transpose()?;
    let mut runs: Vec<(Option<String>, AIConfig, StateMoments)> = Vec::new();
    match (cfg.units, preset) {
        (Units::Si, None) if !has_physics_overrides(cfg) => {
            for p in Preset::ALL {
                runs.push((Some(p.name().into()), p.config(), p.moments()));
            }
        }
        (Units::Si, p) => {
            let p = p.unwrap_or(Preset::Satellite1000kg);
            let c = override_config(cfg, p.config())?;
            let m = match cfg.sigma_v {
                Some(sv) => spread_moments(sv),
                None if c == p.config() => p.moments(),
                None => spread_moments(0.1 * c.kick_velocity()),
            };
            let name = if c == p.config() && cfg.sigma_v.is_none() {
                p.name().to_owned()
            } else {
                format!("{} (modified)", p.name())
            };
            runs.push((Some(name), c, m));
        }
        (Units::Natural, Some(_)) => {
            return Err(ConfigError("presets are defined in SI units; drop --units natural".into()).into());
        }
        (Units::Natural, None) => {
            let c = override_config(cfg, AIConfig::new(20.0, 1.0, 1.0, 1.0, 1.0, 50.0)?)?;
            let m = spread_moments(cfg.sigma_v.unwrap_or(0.1 * c.kick_velocity()));
            runs.push((None, c, m));
        }
    }
    let mut results = Vec::new();
    for (name, c, m) in &runs {
        let b = phase_budget(c, m);
        println!(
            "{}: theta0 = {:.6e} pi, theta_vx2 = {:.6e} pi, theta_vx2/theta0 = {:.6e}",
            name.as_deref().unwrap_or("natural"),
            in_pi(b.theta0),
            in_pi(b.theta_vx2),
            b.ratio_vx2_over_0
        );
        results.push(PhaseSummary::new(name.as_deref(), c, &b, m.mean_v.x, m.second_v.x));
    }
    let meta: Map<String, Value> = metadata("phase", cfg)
        .0
        .into_iter()
        .map(|(k, v)| (k, Value::String(v)))
        .collect();
    let doc = json!({
        "metadata": meta,
        "note": "theta_vx2 uses the raw second moment <v_x^2>, which equals the variance for a centred state",
        "results": results,
    });
    let mut w = create(&cfg.out, "phase.json")?;
    serde_json::to_writer_pretty(&mut w, &doc).map_err(io::Error::from)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn wigner(cfg: &RunConfig) -> Result<()> {
    let (state0, setup0, t0) = match cfg.units {
        Units::Si => {
            let (s, f) = trap_setup()?;
            (s, f, 10.0)
        }
        Units::Natural => (
            GaussianState1D::centred(1.0, 0.5)?,
            FallSetup::new(1.0, 1.0 / 50.0, 1.0, 1.0)?,
            1.0,
        ),
    };
    let state = GaussianState1D::centred(
        cfg.sigma_x.unwrap_or(state0.sigma_x),
        cfg.sigma_v.unwrap_or(state0.sigma_v),
    )?;
    let inv_r = match cfg.radius {
        _ if cfg.uniform => 0.0,
        Some(r) if r > 0.0 => 1.0 / r,
        Some(r) => return Err(ConfigError(format!("R must be positive, got {r:e}")).into()),
        None => setup0.inv_r,
    };
    let setup = FallSetup::new(
        cfg.g.unwrap_or(setup0.g),
        inv_r,
        cfg.mass.unwrap_or(setup0.mass),
        hbar(cfg),
    )?;
    let t = cfg.t.unwrap_or(t0);
    if !(t.is_finite() && t >= 0.0) {
        return Err(ConfigError(format!("t must be non-negative, got {t:e}")).into());
    }
    let (pu, pq) = closed_form_profiles(&state, &setup, t, cfg.points.unwrap_or(DEFAULT_BINS))?;
    let p_zero = p0(&state, &setup)?;
    let amp = pq_amplitude(&state, &setup, t)?;
    println!(
        "P0 = {p_zero:.6e} /m, P_q amplitude at t = {t:e} s: {amp:.6e} /m, eps_q = {:.6e}",
        setup.epsilon_q()
    );
    let meta = metadata("wigner", cfg)
        .with("t_used", format!("{t:e}"))
        .with("sigma_x_used", format!("{:e}", state.sigma_x))
        .with("sigma_v_used", format!("{:e}", state.sigma_v))
        .with("P0", format!("{p_zero:e}"))
        .with("Pq_amplitude", format!("{amp:e}"))
        .with("eps_q", format!("{:e}", setup.epsilon_q()));
    let mut w = create(&cfg.out, "profile.csv")?;
    write_profile(&mut w, &meta, &pu, &pq)?;
    w.flush()?;
    Ok(())
}

pub fn verify(cfg: &RunConfig, mutate: Option<f64>) -> Result<()> {
    let opts = VerifyOptions {
        quick: cfg.quick,
        seed: cfg.seed,
        spread_coefficient: SPREAD_PHASE_COEFFICIENT * (1.0 + mutate.unwrap_or(0.0)),
    };
    let report = run_all(&opts);
    for n in 1..=9 {
        let checks: Vec<_> = report.criterion(n).collect();
        let status = if checks.iter().all(|c| c.passed) {
            "PASS"
        } else {
            "FAIL"
        };
        println!("{status} criterion {n}");
        for c in checks {
            println!("    {c}");
        }
    }
    let meta: Map<String, Value> = metadata("verify", cfg)
        .with("spread_coefficient", format!("{:e}", opts.spread_coefficient))
        .0
        .into_iter()
        .map(|(k, v)| (k, Value::String(v)))
        .collect();
    let doc = json!({
        "metadata": meta,
        "all_passed": report.all_passed(),
        "checks": report.checks,
    });
    let mut w = create(&cfg.out, "verify.json")?;
    serde_json::to_writer_pretty(&mut w, &doc).map_err(io::Error::from)?;
    writeln!(w)?;
    w.flush()?;
    let failed = report.checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(CliError::Verification { failed });
    }
    Ok(())
}
