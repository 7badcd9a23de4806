//! Sweep configuration: named presets, TOML files and flag overrides.
//!
//! Layers are merged as TOML tables before deserialisation, so precedence is
//! flags > file > preset for every key, nested ones included.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dissipators::DEFAULT_CUTOFF;
use crate::dynamics::{Tolerances, OHMIC_HORIZON, RESET_HORIZON};
use crate::model::{ModelKind, SystemParams};
use crate::observables::DEFAULT_THRESHOLD_FRACTION;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown preset '{0}' (known: {known})", known = PRESET_NAMES.join(", "))]
    UnknownPreset(String),
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

pub const PRESET_NAMES: [&str; 5] = ["reset-canonical", "reset-swapped", "reset-fast", "ohmic-canonical", "ohmic-fast"];

/// A grid axis: a scalar, an explicit list, or an inclusive linear range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    Scalar(f64),
    Values(Vec<f64>),
    Range { min: f64, max: f64, count: usize },
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Axis::Scalar(v) => vec![*v],
            Axis::Values(v) => v.clone(),
            Axis::Range { min, max, count } => match count {
                0 => Vec::new(),
                1 => vec![*min],
                n => (0..*n).map(|k| min + (max - min) * k as f64 / (*n - 1) as f64).collect(),
            },
        }
    }

    fn validate(&self, name: &str) -> Result<(), ConfigError> {
        let v = self.values();
        if v.is_empty() {
            return Err(ConfigError::Invalid(format!("grid axis '{name}' is empty")));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(ConfigError::Invalid(format!("grid axis '{name}' has non-finite values")));
        }
        if let Axis::Range { min, max, .. } = self {
            if min > max {
                return Err(ConfigError::Invalid(format!("grid axis '{name}' has min > max")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub e1: f64,
    pub e3: f64,
    pub temperatures: [f64; 3],
}

/// `ε_i = u_i · 10^(−v_i)` added to each rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Perturbation {
    pub u: [f64; 3],
    pub v: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateSection {
    /// Exchange the first two canonical rates.
    #[serde(default)]
    pub swap_first_two: bool,
    /// Literal rates; the grid's `x`, `y` are then only labels.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<[f64; 3]>,
    #[serde(default = "default_cutoff")]
    pub cutoff: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<Perturbation>,
}

fn default_cutoff() -> f64 {
    DEFAULT_CUTOFF
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub x: Axis,
    pub y: Axis,
    pub g: Axis,
    /// Hot-bath temperatures; defaults to the system's `T3`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t3: Option<Axis>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub horizon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    /// Absolute classification threshold; defaults to 1% of `T1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default)]
    pub correlations: bool,
    /// Correlation maxima are taken over `[0, window]`; defaults to the horizon.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correlation_window: Option<f64>,
    #[serde(default = "default_samples")]
    pub correlation_samples: usize,
}

fn default_samples() -> usize {
    200
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Jsonl,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "jsonl" | "json-lines" => Ok(OutputFormat::Jsonl),
            other => Err(format!("unknown format '{other}' (expected csv or jsonl)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
}

/// Fully resolved sweep description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub preset: String,
    pub model: ModelKind,
    pub system: SystemSection,
    pub rates: RateSection,
    pub grid: Grid,
    pub integrator: IntegratorSection,
    pub analysis: AnalysisSection,
    #[serde(default)]
    pub run: RunSection,
}

fn preset_config(name: &str) -> Result<SweepConfig, ConfigError> {
    let tol = Tolerances::default();
    let reset_system = SystemSection { e1: 1.0, e3: 100.0, temperatures: [1.0, 1.0, 100.0] };
    let ohmic_system = SystemSection { e1: 1.0, e3: 1.0, temperatures: [1.0, 1.0, 2.0] };
    let rates = |swap: bool, raw: Option<[f64; 3]>| RateSection {
        swap_first_two: swap,
        raw,
        cutoff: DEFAULT_CUTOFF,
        perturbation: None,
    };
    let grid = |x: f64, y: f64, g: f64| Grid { x: Axis::Scalar(x), y: Axis::Scalar(y), g: Axis::Scalar(g), t3: None };
    let (model, system, rates, grid, horizon) = match name {
        "reset-canonical" => (ModelKind::Reset, reset_system, rates(false, None), grid(3.5, 2.5, 1e-2), RESET_HORIZON),
        "reset-swapped" => (ModelKind::Reset, reset_system, rates(true, None), grid(3.5, 2.5, 1e-2), RESET_HORIZON),
        "reset-fast" => (
            ModelKind::Reset,
            reset_system,
            rates(false, Some([10f64.powf(-2.5), 10f64.powf(-3.5), 10f64.powf(-1.5)])),
            grid(2.5, 1.0, 1e-2),
            RESET_HORIZON,
        ),
        "ohmic-canonical" => (ModelKind::Ohmic, ohmic_system, rates(false, None), grid(4.0, 1.0, 1.5), OHMIC_HORIZON),
        "ohmic-fast" => (ModelKind::Ohmic, ohmic_system, rates(true, None), grid(4.0, 1.0, 0.5), OHMIC_HORIZON),
        other => return Err(ConfigError::UnknownPreset(other.to_string())),
    };
    Ok(SweepConfig {
        preset: name.to_string(),
        model,
        system,
        rates,
        grid,
        integrator: IntegratorSection { rel_tol: tol.rel, abs_tol: tol.abs, horizon },
        analysis: AnalysisSection {
            threshold: None,
            correlations: false,
            correlation_window: None,
            correlation_samples: default_samples(),
        },
        run: RunSection::default(),
    })
}

/// Recursive table merge; `over` wins on every leaf.
fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn preset_name(layer: &toml::Table) -> Option<String> {
    if let Some(p) = layer.get("preset").and_then(|v| v.as_str()) {
        return Some(p.to_string());
    }
    match layer.get("model").and_then(|v| v.as_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("reset") => Some("reset-canonical".into()),
        Some("ohmic") => Some("ohmic-canonical".into()),
        _ => None,
    }
}

impl SweepConfig {
    pub fn preset(name: &str) -> Result<Self, ConfigError> {
        let cfg = preset_config(name)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Resolve `preset ← file ← flags`.
    ///
    /// The preset is taken from the highest layer naming one (or, failing
    /// that, a `model` key); `reset-canonical` otherwise.
    pub fn resolve(file: Option<&str>, flags: toml::Table) -> Result<Self, ConfigError> {
        let file: toml::Table = match file {
            Some(text) => toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?,
            None => toml::Table::new(),
        };
        let name = preset_name(&flags).or_else(|| preset_name(&file)).unwrap_or_else(|| "reset-canonical".into());
        let base = preset_config(&name)?;
        let mut table = toml::Table::try_from(&base).map_err(|e| ConfigError::Parse(e.to_string()))?;
        merge(&mut table, file);
        merge(&mut table, flags);
        table.insert("preset".into(), toml::Value::String(name));
        let cfg: SweepConfig =
            toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Self::resolve(Some(text), toml::Table::new())
    }

    pub fn load(path: &std::path::Path, flags: toml::Table) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::resolve(Some(&text), flags)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let s = &self.system;
        SystemParams::new(s.e1, s.e3, s.temperatures, 0.0).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        for (name, axis) in [("x", &self.grid.x), ("y", &self.grid.y), ("g", &self.grid.g)] {
            axis.validate(name)?;
        }
        if let Some(t3) = &self.grid.t3 {
            t3.validate("t3")?;
        }
        if self.grid.g.values().iter().any(|&g| g < 0.0) {
            return Err(ConfigError::Invalid("coupling g must be non-negative".into()));
        }
        if let Some(raw) = self.rates.raw {
            if raw.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
                return Err(ConfigError::Invalid("raw rates must be positive".into()));
            }
        }
        if let Some(p) = self.rates.perturbation {
            if p.u.iter().chain(&p.v).any(|x| !x.is_finite()) || p.u.iter().any(|&u| u < 0.0) {
                return Err(ConfigError::Invalid("perturbation needs finite u >= 0 and finite v".into()));
            }
        }
        if !(self.rates.cutoff.is_finite() && self.rates.cutoff > 0.0) {
            return Err(ConfigError::Invalid("cutoff must be positive".into()));
        }
        Tolerances::new(self.integrator.rel_tol, self.integrator.abs_tol)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if !(self.integrator.horizon.is_finite() && self.integrator.horizon > 0.0) {
            return Err(ConfigError::Invalid("horizon must be positive".into()));
        }
        if let Some(th) = self.analysis.threshold {
            if !(th.is_finite() && th > 0.0) {
                return Err(ConfigError::Invalid("threshold must be positive".into()));
            }
        }
        if let Some(w) = self.analysis.correlation_window {
            if !(w.is_finite() && w > 0.0) {
                return Err(ConfigError::Invalid("correlation window must be positive".into()));
            }
        }
        if self.analysis.correlation_samples < 2 {
            return Err(ConfigError::Invalid("correlation_samples must be at least 2".into()));
        }
        Ok(())
    }

    pub fn tolerances(&self) -> Tolerances {
        Tolerances { rel: self.integrator.rel_tol, abs: self.integrator.abs_tol }
    }

    pub fn threshold(&self) -> f64 {
        self.analysis.threshold.unwrap_or(DEFAULT_THRESHOLD_FRACTION * self.system.temperatures[0])
    }

    /// Grid axes in loop order `x, y, g, T3`.
    pub fn axes(&self) -> [Vec<f64>; 4] {
        let t3 = self.grid.t3.as_ref().map(Axis::values).unwrap_or_else(|| vec![self.system.temperatures[2]]);
        [self.grid.x.values(), self.grid.y.values(), self.grid.g.values(), t3]
    }

    pub fn grid_len(&self) -> usize {
        self.axes().iter().map(Vec::len).product()
    }

    /// Hash of everything that affects a grid point's numbers. Grid axes and
    /// run settings are excluded, so resumed or extended sweeps still match
    /// points by coordinates.
    pub fn config_hash(&self) -> String {
        let key = serde_json::json!({
            "model": self.model,
            "system": self.system,
            "rates": self.rates,
            "integrator": self.integrator,
            "analysis": self.analysis,
        });
        let digest = Sha256::digest(key.to_string().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}
