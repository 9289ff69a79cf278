//! Flat JSON experiment configuration.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dynamics::{BackendConfig, BackendKind};
use crate::error::{Error, Result};
use crate::ring::RingSpec;
use crate::schedule::{load_schedule, ScheduleTable};

/// Directory searched for relative schedule paths.
pub const SCHEDULE_DIR_ENV: &str = "WALLMEM_SCHEDULE_DIR";
pub const SYNTHETIC_SCHEDULE: &str = "synthetic";

fn one() -> f64 {
    1.0
}
fn synthetic_name() -> String {
    SYNTHETIC_SCHEDULE.to_string()
}
fn default_backend() -> BackendKind {
    BackendKind::Exact
}
fn default_dt() -> f64 {
    BackendConfig::default().dt_ns
}
fn default_sweeps() -> f64 {
    BackendConfig::default().sweeps_per_us
}
fn default_ramp() -> f64 {
    0.5
}
fn default_hold() -> f64 {
    2.0
}
fn default_shots() -> usize {
    8000
}
fn default_output() -> String {
    "archive.jsonl".to_string()
}
fn default_workers() -> usize {
    1
}
fn default_slices() -> usize {
    BackendConfig::default().oracle_slices
}

/// The configuration file as written, after overrides. Echoed verbatim into
/// archive headers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub n: usize,
    #[serde(default = "one")]
    pub j_programmed: f64,
    #[serde(default)]
    pub initial_wall_edge: usize,
    #[serde(default)]
    pub faulty_sites: Vec<usize>,
    /// `"synthetic"` or a CSV path.
    #[serde(default = "synthetic_name")]
    pub schedule: String,
    #[serde(default = "default_backend")]
    pub backend: BackendKind,
    #[serde(default = "default_dt")]
    pub dt_ns: f64,
    #[serde(default = "default_sweeps")]
    pub sweeps_per_us: f64,
    #[serde(default)]
    pub temperature_mk: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_values: Option<Vec<f64>>,
    /// Uniform grid over `[0, 1]`, used when `s_values` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_count: Option<usize>,
    #[serde(default = "default_ramp")]
    pub ramp_us: f64,
    #[serde(default = "default_hold")]
    pub hold_us: f64,
    #[serde(default = "default_shots")]
    pub shots_per_point: usize,
    #[serde(default = "default_output")]
    pub output_path: String,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default = "default_slices")]
    pub oracle_slices: usize,
}

impl RawConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Parses `text`, applies `key=value` overrides, then deserialises.
    pub fn from_json_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut value: Value = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))
    }

    /// Fields that change the sampled data; output location and worker
    /// count are excluded.
    pub(crate) fn identity(&self) -> RawConfig {
        RawConfig {
            output_path: String::new(),
            workers: 1,
            ..self.clone()
        }
    }
}

/// Applies one `key=value` override; dotted keys address nested objects.
/// The value is read as JSON when it parses, otherwise as a string.
pub fn apply_override(config: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(Error::Config(format!("override `{assignment}` has an empty key")));
    }
    let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
    let mut target = config;
    let parts: Vec<&str> = key.split('.').collect();
    for part in &parts[..parts.len() - 1] {
        target = target
            .get_mut(*part)
            .ok_or_else(|| Error::Config(format!("unknown override key `{key}`")))?;
    }
    let obj = target
        .as_object_mut()
        .ok_or_else(|| Error::Config(format!("override key `{key}` does not address an object field")))?;
    let last = parts[parts.len() - 1];
    obj.insert(last.to_string(), value);
    Ok(())
}

/// Validated configuration of one sweep.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub raw: RawConfig,
    pub spec: RingSpec,
    pub table: ScheduleTable<f64>,
    pub backend: BackendConfig,
    pub s_values: Vec<f64>,
    pub ramp_us: f64,
    pub hold_us: f64,
    pub shots_per_point: usize,
    pub output_path: PathBuf,
    pub workers: usize,
}

impl ExperimentConfig {
    /// Reads a config file, applies overrides and validates everything,
    /// including loading the schedule.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_raw(RawConfig::from_json_with_overrides(&text, overrides)?)
    }

    pub fn from_raw(raw: RawConfig) -> Result<Self> {
        let faulty: BTreeSet<usize> = raw.faulty_sites.iter().copied().collect();
        if faulty.len() != raw.faulty_sites.len() {
            return Err(Error::Config("faulty_sites contains duplicates".into()));
        }
        let spec = RingSpec::with_options(raw.n, raw.j_programmed, raw.initial_wall_edge, faulty)?;
        let table = resolve_schedule(&raw.schedule)?;
        let backend = BackendConfig {
            kind: raw.backend,
            dt_ns: raw.dt_ns,
            sweeps_per_us: raw.sweeps_per_us,
            temperature_mk: raw.temperature_mk,
            seed: raw.seed,
            oracle_slices: raw.oracle_slices,
        };
        backend.validate()?;
        let s_values = match (&raw.s_values, raw.s_count) {
            (Some(_), Some(_)) => return Err(Error::Config("give either s_values or s_count, not both".into())),
            (Some(v), None) => v.clone(),
            (None, count) => uniform_grid(count.unwrap_or(101))?,
        };
        if s_values.is_empty() {
            return Err(Error::Config("s_values is empty".into()));
        }
        if let Some(&bad) = s_values.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(Error::OutOfRange {
                what: "s_pause",
                value: bad,
                lo: 0.0,
                hi: 1.0,
            });
        }
        if s_values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("s_values must be strictly increasing".into()));
        }
        if !(raw.ramp_us > 0.0 && raw.ramp_us.is_finite()) {
            return Err(Error::Config(format!("ramp_us must be positive, got {}", raw.ramp_us)));
        }
        if !(raw.hold_us >= 0.0 && raw.hold_us.is_finite()) {
            return Err(Error::Config(format!("hold_us must be non-negative, got {}", raw.hold_us)));
        }
        if raw.shots_per_point == 0 {
            return Err(Error::Config("shots_per_point must be at least 1".into()));
        }
        if raw.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        Ok(ExperimentConfig {
            spec,
            table,
            backend,
            s_values,
            ramp_us: raw.ramp_us,
            hold_us: raw.hold_us,
            shots_per_point: raw.shots_per_point,
            output_path: PathBuf::from(&raw.output_path),
            workers: raw.workers,
            raw,
        })
    }
}

fn uniform_grid(count: usize) -> Result<Vec<f64>> {
    match count {
        0 => Err(Error::Config("s_count must be at least 1".into())),
        1 => Ok(vec![1.0]),
        _ => Ok((0..count).map(|i| i as f64 / (count - 1) as f64).collect()),
    }
}

/// `"synthetic"` or a CSV file; relative paths are looked up in
/// `$WALLMEM_SCHEDULE_DIR` when it is set.
pub fn resolve_schedule(name: &str) -> Result<ScheduleTable<f64>> {
    if name == SYNTHETIC_SCHEDULE {
        return Ok(ScheduleTable::synthetic());
    }
    let mut path = PathBuf::from(name);
    if path.is_relative() {
        if let Some(dir) = std::env::var_os(SCHEDULE_DIR_ENV) {
            path = Path::new(&dir).join(path);
        }
    }
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| name.to_string());
    load_schedule(&text, &label)
}
