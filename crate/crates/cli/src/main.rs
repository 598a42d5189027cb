use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;

use commands::CliError;
use config::{parse_triple, RunConfig, Units};

/// Free fall in a non-uniform gravitational field: trajectories,
/// interferometer phases and Wigner-function corrections.
#[derive(Debug, Parser)]
#[command(name = "freefall", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Overrides,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact and perturbative trajectories with second-order residuals.
    Trajectory,
    /// Interferometer phase budget for a preset or custom parameters.
    Phase,
    /// Uniform-gravity density and its quantum correction.
    Wigner,
    /// Runs the acceptance checks and writes a JSON report.
    Verify,
}

#[derive(Debug, Args)]
struct Overrides {
    /// Flat INI file of `key = value` pairs; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// earth, satellite-1000kg, satellite-100kg or magnetic.
    #[arg(long, global = true)]
    preset: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Skip the slow Monte Carlo and wave-packet checks.
    #[arg(long, global = true)]
    quick: bool,
    /// Uniform gravity instead of the point source.
    #[arg(long, global = true)]
    uniform: bool,
    #[arg(long, global = true, value_enum)]
    units: Option<Units>,
    /// Local acceleration.
    #[arg(long, global = true, allow_negative_numbers = true)]
    g: Option<f64>,
    /// Distance to the source.
    #[arg(long = "R", global = true, allow_negative_numbers = true)]
    radius: Option<f64>,
    /// Duration: trajectory end time, stage time or evolution time.
    #[arg(long, global = true, allow_negative_numbers = true)]
    t: Option<f64>,
    /// Laser wave number.
    #[arg(long, global = true, allow_negative_numbers = true)]
    k: Option<f64>,
    /// Atom mass.
    #[arg(long, global = true, allow_negative_numbers = true)]
    mass: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    sigma_x: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    sigma_v: Option<f64>,
    /// Initial velocity `vx,vy,vz` for a single trajectory.
    #[arg(long, global = true, allow_hyphen_values = true)]
    velocity: Option<String>,
    /// Number of output samples.
    #[arg(long, global = true)]
    points: Option<usize>,
    /// Scales the velocity-spread phase coefficient by `1 + fraction` to
    /// show that the oracle catches a wrong formula.
    #[arg(long, global = true, hide = true, allow_negative_numbers = true)]
    mutate_spread_coefficient: Option<f64>,
}

impl Overrides {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            cfg.load(path)?;
        }
        if let Some(u) = self.units {
            cfg.units = u;
        }
        if let Some(p) = &self.preset {
            cfg.preset = Some(p.clone());
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        cfg.quick |= self.quick;
        cfg.uniform |= self.uniform;
        let pairs = [
            (&mut cfg.g, self.g),
            (&mut cfg.radius, self.radius),
            (&mut cfg.t, self.t),
            (&mut cfg.k, self.k),
            (&mut cfg.mass, self.mass),
            (&mut cfg.sigma_x, self.sigma_x),
            (&mut cfg.sigma_v, self.sigma_v),
        ];
        for (slot, flag) in pairs {
            if flag.is_some() {
                *slot = flag;
            }
        }
        if let Some(v) = &self.velocity {
            cfg.velocity = Some(parse_triple(v)?);
        }
        if self.points.is_some() {
            cfg.points = self.points;
        }
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = cli.opts.resolve().and_then(|cfg| match cli.command {
        Command::Trajectory => commands::trajectory(&cfg),
        Command::Phase => commands::phase(&cfg),
        Command::Wigner => commands::wigner(&cfg),
        Command::Verify => commands::verify(&cfg, cli.opts.mutate_spread_coefficient),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
