//! Scenario configuration: TOML (or JSON) key-value files.
//!
//! ```toml
//! scenario = "period-law"     # optional; must match the CLI argument
//! manifold = "round-sphere"
//! params = { c = 0.1 }
//! eps = [0.05, 0.1, 0.2, 0.4]
//! seed = 7
//! tol = 1e-12
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{scenario_info, unknown};
use crate::dynamics::system::TOL_RANGE;
use crate::geometry::builtin::{builtin, BUILTIN_MANIFOLDS};
use crate::geometry::manifold::ChartManifold;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Raw file contents; every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Option<String>,
    pub manifold: Option<String>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub eps: Option<Vec<f64>>,
    pub orbits: Option<usize>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub periods: Option<usize>,
    pub amplitude: Option<f64>,
    pub q0: Option<Vec<f64>>,
    pub direction: Option<Vec<f64>>,
    pub matrix_file: Option<PathBuf>,
    pub instances: Option<usize>,
    pub dims: Option<Vec<usize>>,
    pub denom_bound: Option<u64>,
    pub points: Option<usize>,
}

pub const CONFIG_KEYS: &[&str] = &[
    "scenario", "manifold", "params", "eps", "orbits", "seed", "tol", "out", "workers", "periods",
    "amplitude", "q0", "direction", "matrix_file", "instances", "dims", "denom_bound", "points",
];

const COMMON_KEYS: &[&str] = &["scenario", "seed", "tol", "out", "workers"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfigFormat {
    Toml,
    Json,
}

impl ConfigFormat {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Self::Json,
            _ => Self::Toml,
        }
    }
}

fn check_keys<'a>(keys: impl Iterator<Item = &'a String>) -> Result<(), ConfigError> {
    for k in keys {
        if !CONFIG_KEYS.contains(&k.as_str()) {
            return Err(unknown("config key", k, CONFIG_KEYS));
        }
    }
    Ok(())
}

pub fn parse_config(text: &str, format: ConfigFormat) -> Result<ScenarioConfig, ConfigError> {
    match format {
        ConfigFormat::Toml => {
            let table: toml::Table = text.parse().map_err(|e| ConfigError(format!("invalid TOML: {e}")))?;
            check_keys(table.keys())?;
            toml::from_str(text).map_err(|e| ConfigError(format!("invalid config: {}", e.message())))
        }
        ConfigFormat::Json => {
            let value: serde_json::Value =
                serde_json::from_str(text).map_err(|e| ConfigError(format!("invalid JSON: {e}")))?;
            let obj = value.as_object().ok_or_else(|| ConfigError("config must be a JSON object".into()))?;
            check_keys(obj.keys())?;
            serde_json::from_value(value).map_err(|e| ConfigError(format!("invalid config: {e}")))
        }
    }
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text, ConfigFormat::from_path(path))
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub workers: Option<usize>,
}

/// Fully defaulted and validated configuration, echoed in summary.json.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedConfig {
    pub scenario: String,
    pub manifold: Option<String>,
    pub params: BTreeMap<String, f64>,
    pub eps: Vec<f64>,
    pub orbits: usize,
    pub seed: u64,
    pub tol: f64,
    pub out: PathBuf,
    pub workers: usize,
    pub periods: usize,
    pub amplitude: f64,
    pub q0: Vec<f64>,
    pub direction: Vec<f64>,
    pub matrix_file: Option<PathBuf>,
    pub instances: usize,
    pub dims: Vec<usize>,
    pub denom_bound: u64,
    pub points: usize,
}

impl ResolvedConfig {
    pub fn manifold(&self) -> Result<Option<ChartManifold>, ConfigError> {
        self.manifold
            .as_deref()
            .map(|name| builtin(name, &self.params).map_err(|e| ConfigError(e.to_string())))
            .transpose()
    }
}

fn default_manifold(scenario: &str) -> Option<&'static str> {
    match scenario {
        "period-law" | "zoll-defect" | "z0-identity" => Some("round-sphere"),
        "curvature-drift" => Some("conformal-torus"),
        "vertical-drift" | "chern-audit" => Some("kodaira-thurston"),
        _ => None,
    }
}

fn default_eps(scenario: &str) -> Vec<f64> {
    match scenario {
        "period-law" => vec![0.05, 0.1, 0.2, 0.4],
        "zoll-defect" => vec![0.05, 0.1, 0.2],
        "conformal-drift" => vec![0.05, 0.07, 0.1, 0.14, 0.2],
        "curvature-drift" => vec![0.1, 0.14, 0.2, 0.28, 0.4],
        "vertical-drift" => vec![0.025, 0.05, 0.1, 0.2],
        _ => vec![],
    }
}

fn default_q0(scenario: &str) -> Vec<f64> {
    match scenario {
        "conformal-drift" => vec![0.0, 0.0],
        "curvature-drift" => vec![0.3, 0.7],
        "vertical-drift" => vec![0.3, -0.2, 0.5, 0.0],
        _ => vec![],
    }
}

fn default_direction() -> Vec<f64> {
    let (th, ph) = (0.5f64, 1.0f64);
    vec![th.cos(), th.sin() * ph.cos(), 0.0, th.sin() * ph.sin()]
}

/// Applies defaults and overrides and validates the result against the
/// scenario's contract.
pub fn resolve(scenario: &str, cfg: &ScenarioConfig, ov: &Overrides) -> Result<ResolvedConfig, ConfigError> {
    let info = scenario_info(scenario)?;
    let err = |m: String| Err(ConfigError(m));
    if let Some(s) = &cfg.scenario {
        if s != scenario {
            return err(format!("config is for scenario `{s}` but `{scenario}` was requested"));
        }
    }
    // keys the scenario does not read are rejected rather than ignored
    let given = serde_json::to_value(cfg).map_err(|e| ConfigError(e.to_string()))?;
    for (k, v) in given.as_object().expect("struct serialises to an object") {
        let present = !(v.is_null() || (k == "params" && v.as_object().is_some_and(|o| o.is_empty())));
        if present && !COMMON_KEYS.contains(&k.as_str()) && !info.keys.contains(&k.as_str()) {
            return err(format!("key `{k}` is not used by scenario `{scenario}`"));
        }
    }

    let manifold = match (&cfg.manifold, default_manifold(scenario)) {
        (Some(name), _) => {
            if !BUILTIN_MANIFOLDS.contains(&name.as_str()) {
                return Err(unknown("manifold", name, BUILTIN_MANIFOLDS));
            }
            Some(name.clone())
        }
        (None, d) => d.map(str::to_string),
    };
    let built = match &manifold {
        Some(name) => Some(builtin(name, &cfg.params).map_err(|e| ConfigError(e.to_string()))?),
        None => None,
    };

    let eps = cfg.eps.clone().unwrap_or_else(|| default_eps(scenario));
    if info.keys.contains(&"eps") && eps.is_empty() {
        return err("eps list must not be empty".into());
    }
    for &e in &eps {
        if !(e > 0.0 && e < 1.0) {
            return err(format!("eps value {e} outside (0, 1)"));
        }
        if scenario == "conformal-drift" && e > 0.3 {
            return err(format!("conformal-drift needs eps ≤ 0.3, got {e}"));
        }
    }
    if let (Some(m), true) = (&built, scenario == "period-law") {
        if m.space_form_curvature.is_none() {
            return err(format!("period-law needs a space form; `{}` is not one", m.name));
        }
    }

    let tol = ov.tol.or(cfg.tol).unwrap_or(1e-12);
    if !(tol >= TOL_RANGE.0 && tol <= TOL_RANGE.1) {
        return err(format!("tol {tol:e} outside [{:e}, {:e}]", TOL_RANGE.0, TOL_RANGE.1));
    }
    let workers = ov
        .workers
        .or(cfg.workers)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if workers == 0 {
        return err("workers must be at least 1".into());
    }
    let orbits = cfg.orbits.unwrap_or(20);
    if orbits < 2 {
        return err("orbits must be at least 2".into());
    }
    let periods = cfg.periods.unwrap_or(match scenario {
        "conformal-drift" => 20,
        "vertical-drift" => 12,
        _ => 40,
    });
    if periods < 3 {
        return err("periods must be at least 3".into());
    }
    let amplitude = cfg.amplitude.unwrap_or(0.3);
    if !(amplitude.abs() < 1.0) {
        return err(format!("amplitude {amplitude} must satisfy |A| < 1 so that a > 0"));
    }

    let q0 = cfg.q0.clone().unwrap_or_else(|| default_q0(scenario));
    match (&built, info.keys.contains(&"q0")) {
        (Some(m), true) => {
            if q0.len() != m.dim {
                return err(format!("q0 has {} entries, manifold `{}` has dimension {}", q0.len(), m.name, m.dim));
            }
            if !m.charts[0].contains(&nalgebra::DVector::from_row_slice(&q0)) {
                return err(format!("q0 {q0:?} lies outside chart 0 of `{}`", m.name));
            }
        }
        (None, true) if q0.len() != 2 => return err("q0 must have 2 entries".into()),
        _ => {}
    }
    if scenario == "curvature-drift" && built.as_ref().is_some_and(|m| m.dim != 2) {
        return err("curvature-drift needs a surface".into());
    }
    if scenario == "vertical-drift" && built.as_ref().is_some_and(|m| m.dim != 4) {
        return err("vertical-drift needs a 4-dimensional manifold".into());
    }
    let direction = cfg.direction.clone().unwrap_or_else(default_direction);
    if scenario == "vertical-drift" && (direction.len() != 4 || direction.iter().all(|x| *x == 0.0)) {
        return err("direction must be 4 frame coefficients, not all zero".into());
    }

    let dims = cfg.dims.clone().unwrap_or_else(|| vec![2, 4, 6]);
    if dims.is_empty() || dims.iter().any(|d| *d == 0 || d % 2 != 0 || *d > 16) {
        return err(format!("dims must be even integers in [2, 16], got {dims:?}"));
    }
    let denom_bound = cfg.denom_bound.unwrap_or(crate::spectral::DEFAULT_DENOM_BOUND);
    if denom_bound == 0 {
        return err("denom_bound must be positive".into());
    }
    if let Some(p) = &cfg.matrix_file {
        if !p.exists() {
            return err(format!("matrix_file {} does not exist", p.display()));
        }
    }
    let points = cfg.points.unwrap_or(if scenario == "z0-identity" { 4 } else { 8 });
    if points == 0 {
        return err("points must be positive".into());
    }

    Ok(ResolvedConfig {
        scenario: scenario.to_string(),
        manifold,
        params: cfg.params.clone(),
        eps,
        orbits,
        seed: ov.seed.or(cfg.seed).unwrap_or(0),
        tol,
        out: ov.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("results").join(scenario)),
        workers,
        periods,
        amplitude,
        q0,
        direction,
        matrix_file: cfg.matrix_file.clone(),
        instances: cfg.instances.unwrap_or(100),
        dims,
        denom_bound,
        points,
    })
}
