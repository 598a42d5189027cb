//! Run configuration: built-in defaults, then an optional INI file, then
//! command-line flags, each layer overriding the one before.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::ValueEnum;
use freefall::verify::DEFAULT_SEED;
use ini::Ini;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Units {
    /// SI units with the laboratory and preset scenarios.
    #[default]
    Si,
    /// ħ = m = g = 1 with R = 50.
    Natural,
}

impl fmt::Display for Units {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Units::Si => "si",
            Units::Natural => "natural",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Every input a subcommand may read. Physical parameters left as `None`
/// fall back to the subcommand's scenario defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub units: Units,
    pub preset: Option<String>,
    pub seed: u64,
    pub out: PathBuf,
    pub quick: bool,
    pub uniform: bool,
    pub g: Option<f64>,
    pub radius: Option<f64>,
    pub t: Option<f64>,
    pub k: Option<f64>,
    pub mass: Option<f64>,
    pub sigma_x: Option<f64>,
    pub sigma_v: Option<f64>,
    /// Initial velocity for a single custom trajectory.
    pub velocity: Option<[f64; 3]>,
    pub points: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            units: Units::Si,
            preset: None,
            seed: DEFAULT_SEED,
            out: PathBuf::from("."),
            quick: false,
            uniform: false,
            g: None,
            radius: None,
            t: None,
            k: None,
            mass: None,
            sigma_x: None,
            sigma_v: None,
            velocity: None,
            points: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value
        .trim()
        .parse()
        .map_err(|_| ConfigError(format!("cannot parse `{key} = {value}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(ConfigError(format!("cannot parse `{key} = {value}` as a boolean"))),
    }
}

/// Three comma-separated numbers.
pub fn parse_triple(value: &str) -> Result<[f64; 3], ConfigError> {
    let parts: Vec<&str> = value.split(',').collect();
    if parts.len() != 3 {
        return Err(ConfigError(format!(
            "expected three comma-separated values, got `{value}`"
        )));
    }
    let mut out = [0.0; 3];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = parse("velocity", p)?;
    }
    Ok(out)
}

impl RunConfig {
    /// Applies one `key = value` pair. Dashes and underscores are
    /// interchangeable in keys.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let k = key.trim().replace('-', "_");
        match k.as_str() {
            "units" => {
                self.units = Units::from_str(value.trim(), true)
                    .map_err(|_| ConfigError(format!("unknown unit system `{value}`")))?
            }
            "preset" => self.preset = Some(value.trim().to_owned()),
            "seed" => self.seed = parse(key, value)?,
            "out" => self.out = PathBuf::from(value.trim()),
            "quick" => self.quick = parse_bool(key, value)?,
            "uniform" => self.uniform = parse_bool(key, value)?,
            "g" => self.g = Some(parse(key, value)?),
            "R" | "r" | "radius" => self.radius = Some(parse(key, value)?),
            "t" => self.t = Some(parse(key, value)?),
            "k" => self.k = Some(parse(key, value)?),
            "mass" | "m" => self.mass = Some(parse(key, value)?),
            "sigma_x" => self.sigma_x = Some(parse(key, value)?),
            "sigma_v" => self.sigma_v = Some(parse(key, value)?),
            "velocity" | "v" => self.velocity = Some(parse_triple(value)?),
            "points" => self.points = Some(parse(key, value)?),
            _ => return Err(ConfigError(format!("unknown configuration key `{key}`"))),
        }
        Ok(())
    }

    /// Reads a flat INI file. Section headers are rejected.
    pub fn load(&mut self, path: &Path) -> Result<(), ConfigError> {
        let ini = Ini::load_from_file(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        for (section, props) in ini.iter() {
            if let Some(name) = section {
                return Err(ConfigError(format!(
                    "{}: sections are not supported (found [{name}])",
                    path.display()
                )));
            }
            for (k, v) in props.iter() {
                self.set(k, v)?;
            }
        }
        Ok(())
    }

    /// The full configuration as `key = value` pairs for metadata headers.
    pub fn echo(&self) -> Vec<(&'static str, String)> {
        let opt = |v: Option<f64>| v.map_or_else(|| "default".to_owned(), |x| format!("{x:e}"));
        vec![
            ("units", self.units.to_string()),
            ("preset", self.preset.clone().unwrap_or_else(|| "default".into())),
            ("seed", self.seed.to_string()),
            ("uniform", self.uniform.to_string()),
            ("g", opt(self.g)),
            ("R", opt(self.radius)),
            ("t", opt(self.t)),
            ("k", opt(self.k)),
            ("mass", opt(self.mass)),
            ("sigma_x", opt(self.sigma_x)),
            ("sigma_v", opt(self.sigma_v)),
            (
                "velocity",
                self.velocity
                    .map_or_else(|| "default".into(), |v| format!("{:e};{:e};{:e}", v[0], v[1], v[2])),
            ),
        ]
    }
}
