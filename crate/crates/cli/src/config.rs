//! Resolved run configurations. Each subcommand reads an optional JSON file
//! of this shape, applies flag overrides on top, and writes the result to
//! `<out>/config.json`, so re-running with `--config <out>/config.json`
//! repeats the run.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use translator_lab::diagnostics::{GrowthOptions, SuiteOptions};

use crate::CliError;

pub const DEFAULT_SEED: u64 = 42;

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    pub problem: Option<PathBuf>,
    /// Nodes per axis, replacing the problem's shape.
    pub grid: Option<usize>,
    pub out: PathBuf,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig { problem: None, grid: None, out: default_out() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnoseConfig {
    pub patch: Option<PathBuf>,
    pub out: PathBuf,
    pub suite: SuiteOptions,
    pub seed: u64,
    /// Random test functions for the Rayleigh probe; 0 skips it.
    pub stability_trials: usize,
    /// Random competitors for the weighted-minimality test; 0 skips it.
    pub competitor_trials: usize,
    pub competitor_amplitude: f64,
}

impl Default for DiagnoseConfig {
    fn default() -> Self {
        DiagnoseConfig {
            patch: None,
            out: default_out(),
            suite: SuiteOptions::default(),
            seed: default_seed(),
            stability_trials: 0,
            competitor_trials: 0,
            competitor_amplitude: 0.1,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrassmannConfig {
    /// Graph coordinates of P: the row space of [I | Z].
    pub z: Option<Vec<Vec<f64>>>,
    /// Orthonormal frame of P (rows).
    pub p: Option<Vec<Vec<f64>>>,
    /// Orthonormal frame of the reference plane; the coordinate plane if absent.
    pub q: Option<Vec<Vec<f64>>>,
    pub thresholds: bool,
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrowthConfig {
    pub patch: Option<PathBuf>,
    /// A point of the patch in ℝⁿ⁺ᵐ; the patch point over the domain centre if absent.
    pub origin: Option<Vec<f64>>,
    pub out: PathBuf,
    pub growth: GrowthOptions,
}

impl Default for GrowthConfig {
    fn default() -> Self {
        GrowthConfig { patch: None, origin: None, out: default_out(), growth: GrowthOptions::default() }
    }
}

pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, CliError> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::usage(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", p.display())))
        }
    }
}

/// Pretty JSON of the config, and the same JSON without `out` for hashing.
pub fn render<T: Serialize>(config: &T) -> Result<(String, String), CliError> {
    let mut value = serde_json::to_value(config).map_err(|e| CliError::usage(e.to_string()))?;
    let full = serde_json::to_string_pretty(&value).map_err(|e| CliError::usage(e.to_string()))? + "\n";
    if let Some(obj) = value.as_object_mut() {
        obj.remove("out");
    }
    let hashed = serde_json::to_string(&value).map_err(|e| CliError::usage(e.to_string()))?;
    Ok((full, hashed))
}

pub fn write_config<T: Serialize>(out: &Path, config: &T) -> Result<String, CliError> {
    let (full, hashed) = render(config)?;
    fs::create_dir_all(out).map_err(|e| CliError::usage(format!("{}: {e}", out.display())))?;
    let path = out.join("config.json");
    fs::write(&path, full).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    Ok(hashed)
}

/// A JSON matrix given inline (`[[1, 0], [0, 2]]`) or as a path to a file holding one.
pub fn parse_matrix(arg: &str) -> Result<Vec<Vec<f64>>, CliError> {
    let text = if arg.trim_start().starts_with('[') {
        arg.to_string()
    } else {
        fs::read_to_string(arg).map_err(|e| CliError::usage(format!("{arg}: {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| CliError::usage(format!("malformed matrix {arg:?}: {e}")))
}

/// Comma-separated numbers.
pub fn parse_point(arg: &str) -> Result<Vec<f64>, CliError> {
    arg.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| CliError::usage(format!("bad coordinate {s:?} in {arg:?}: {e}"))))
        .collect()
}
