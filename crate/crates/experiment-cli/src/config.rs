use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Example1,
    Example2,
    Example3,
    Thm1Audit,
    Thm2,
    Thm3,
    Fig2,
    Sweep,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Example1 => "example1",
            ExperimentKind::Example2 => "example2",
            ExperimentKind::Example3 => "example3",
            ExperimentKind::Thm1Audit => "thm1-audit",
            ExperimentKind::Thm2 => "thm2",
            ExperimentKind::Thm3 => "thm3",
            ExperimentKind::Fig2 => "fig2",
            ExperimentKind::Sweep => "sweep",
        }
    }

    /// Parameters each experiment understands.
    pub fn allowed_keys(self) -> &'static [&'static str] {
        match self {
            ExperimentKind::Example1 => &["delta", "x0", "iters"],
            ExperimentKind::Example2 => &["delta", "seed", "samples", "iters", "x0_min", "x0_max"],
            ExperimentKind::Example3 => &["delta", "layers", "samples", "iters"],
            ExperimentKind::Thm1Audit => &[
                "seed",
                "count",
                "target",
                "layers",
                "alpha_min",
                "alpha_max",
                "perturbation",
                "iters",
                "band",
            ],
            ExperimentKind::Thm2 => &["dim", "layers", "rho_max", "seed", "delta", "iters"],
            ExperimentKind::Thm3 => &[
                "dim",
                "layers",
                "rho_max",
                "seed",
                "delta",
                "iters",
                "negatives",
                "limit_tol",
            ],
            ExperimentKind::Fig2 => &[
                "delta",
                "seed",
                "width",
                "samples",
                "iters",
                "orbit_tol",
                "grad_tol",
                "search",
                "delta_min",
                "delta_max",
                "jump_at",
                "drop_at",
                "height",
                "slope",
            ],
            ExperimentKind::Sweep => &[
                "problem",
                "layers",
                "lambda",
                "delta_min",
                "delta_max",
                "delta_steps",
                "x0_min",
                "x0_max",
                "x0_steps",
                "iters",
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Emit {
    Csv,
    Json,
    Svg,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_emit() -> BTreeSet<Emit> {
    [Emit::Csv, Emit::Json, Emit::Svg].into()
}

/// One experiment run. The JSON report is written whatever `emit` says.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub parameters: BTreeMap<String, Value>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_emit")]
    pub emit: BTreeSet<Emit>,
}

/// Maps the accepted spellings of a parameter onto its canonical name.
pub fn canonical_key(key: &str) -> String {
    match key {
        "L" | "l" => "layers".into(),
        "n" => "dim".into(),
        "δ" => "delta".into(),
        other => other.trim_start_matches("--").replace('-', "_"),
    }
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        Self {
            experiment,
            parameters: BTreeMap::new(),
            output_dir: default_output_dir(),
            emit: default_emit(),
        }
    }

    pub fn from_json_str(text: &str, origin: &Path) -> Result<Self, CliError> {
        let mut cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| CliError::Parse {
            path: origin.to_path_buf(),
            reason: e.to_string(),
        })?;
        cfg.parameters = std::mem::take(&mut cfg.parameters)
            .into_iter()
            .map(|(k, v)| (canonical_key(&k), v))
            .collect();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json_str(&text, path)
    }

    pub fn set(&mut self, key: &str, value: Value) {
        self.parameters.insert(canonical_key(key), value);
    }

    /// Rejects unknown parameters and non-positive step sizes.
    pub fn validate(&self) -> Result<(), CliError> {
        let allowed = self.experiment.allowed_keys();
        for (key, value) in &self.parameters {
            if !allowed.contains(&key.as_str()) {
                return Err(CliError::config(
                    key,
                    format!(
                        "not a parameter of {} (expected one of {})",
                        self.experiment.name(),
                        allowed.join(", ")
                    ),
                ));
            }
            if key == "delta" || key.starts_with("delta_m") {
                match value.as_f64() {
                    Some(d) if d > 0.0 && d.is_finite() => {}
                    _ => {
                        return Err(CliError::config(
                            key,
                            format!("step size must be a positive number, got {value}"),
                        ))
                    }
                }
            }
        }
        Ok(())
    }
}

/// Typed parameter access that records every default it hands out, so the
/// config written to the report is fully resolved.
pub struct Params<'a> {
    map: &'a mut BTreeMap<String, Value>,
}

impl<'a> Params<'a> {
    pub fn new(map: &'a mut BTreeMap<String, Value>) -> Self {
        Self { map }
    }

    fn get_or(&mut self, key: &str, default: Option<Value>) -> Result<Value, CliError> {
        match (self.map.get(key), default) {
            (Some(v), _) => Ok(v.clone()),
            (None, Some(d)) => {
                self.map.insert(key.to_string(), d.clone());
                Ok(d)
            }
            (None, None) => Err(CliError::config(key, "required parameter is missing")),
        }
    }

    fn as_f64(key: &str, v: &Value) -> Result<f64, CliError> {
        v.as_f64()
            .ok_or_else(|| CliError::config(key, format!("expected a number, got {v}")))
    }

    fn as_u64(key: &str, v: &Value) -> Result<u64, CliError> {
        v.as_u64()
            .ok_or_else(|| CliError::config(key, format!("expected a nonnegative integer, got {v}")))
    }

    pub fn f64(&mut self, key: &str) -> Result<f64, CliError> {
        let v = self.get_or(key, None)?;
        Self::as_f64(key, &v)
    }

    pub fn f64_or(&mut self, key: &str, default: f64) -> Result<f64, CliError> {
        let v = self.get_or(key, Some(default.into()))?;
        Self::as_f64(key, &v)
    }

    pub fn opt_f64(&mut self, key: &str) -> Result<Option<f64>, CliError> {
        self.map.get(key).map(|v| Self::as_f64(key, v)).transpose()
    }

    pub fn positive_f64_or(&mut self, key: &str, default: f64) -> Result<f64, CliError> {
        let v = self.f64_or(key, default)?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(CliError::config(key, format!("must be positive, got {v}")));
        }
        Ok(v)
    }

    pub fn u64_or(&mut self, key: &str, default: u64) -> Result<u64, CliError> {
        let v = self.get_or(key, Some(default.into()))?;
        Self::as_u64(key, &v)
    }

    pub fn usize_or(&mut self, key: &str, default: usize) -> Result<usize, CliError> {
        Ok(self.u64_or(key, default as u64)? as usize)
    }

    /// Like [`Params::usize_or`] but rejects zero.
    pub fn count_or(&mut self, key: &str, default: usize) -> Result<usize, CliError> {
        let v = self.usize_or(key, default)?;
        if v == 0 {
            return Err(CliError::config(key, "must be at least 1"));
        }
        Ok(v)
    }

    pub fn bool_or(&mut self, key: &str, default: bool) -> Result<bool, CliError> {
        let v = self.get_or(key, Some(default.into()))?;
        v.as_bool()
            .ok_or_else(|| CliError::config(key, format!("expected true or false, got {v}")))
    }

    pub fn str_or(&mut self, key: &str, default: &str) -> Result<String, CliError> {
        let v = self.get_or(key, Some(default.into()))?;
        v.as_str()
            .map(str::to_string)
            .ok_or_else(|| CliError::config(key, format!("expected a string, got {v}")))
    }
}
