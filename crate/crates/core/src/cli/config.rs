//! JSON problem configuration.
//!
//! ```json
//! {
//!   "dimension": 2,
//!   "states": [[[1.0, 0.0], [0.0, 0.0]], [[0.5, 0.0], [0.8660254037844386, 0.0]]],
//!   "max_copies": 1
//! }
//! ```
//!
//! Complex amplitudes are `[re, im]` pairs. Optional fields: `weights`,
//! `allocation` (an `M x k` matrix), `blank_index` (0), `seed` (0),
//! `trials` (10000), `unitary_dim_cap` (4096) and `tolerances`.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::hilbert::{PureState, StateSet, INDEPENDENCE_TOL, PSD_TOL};
use crate::optimizer::WeightVector;
use crate::synthesis::{ProbabilityAllocation, SynthesisOptions, DEFAULT_UNITARY_DIM_CAP};

/// States whose norm is off by more than this are renormalized or rejected.
pub const NORM_EXACT_TOL: f64 = 1e-12;
/// Norms inside this band are renormalized silently (with a warning).
pub const NORM_REPAIR_BAND: (f64, f64) = (0.999, 1.001);
pub const DEFAULT_TRIALS: u64 = 10_000;
pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub dimension: usize,
    pub states: Vec<Vec<[f64; 2]>>,
    pub max_copies: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allocation: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub blank_index: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default = "default_cap")]
    pub unitary_dim_cap: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Tolerances>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Minimum Gram eigenvalue for a set to count as independent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub independence: Option<f64>,
    /// Relative eigenvalue slack in the residual PSD test.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feasibility: Option<f64>,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_trials() -> u64 {
    DEFAULT_TRIALS
}

fn default_cap() -> usize {
    DEFAULT_UNITARY_DIM_CAP
}

/// A rejected configuration, located by a JSON path such as `states[1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() || self.path == "." {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

/// A validated configuration and any warnings raised while repairing it.
#[derive(Debug, Clone, PartialEq)]
pub struct Parsed {
    pub config: ProblemConfig,
    pub warnings: Vec<String>,
}

/// Parses and validates a configuration document.
///
/// With `strict`, more states than dimensions is an error instead of a warning.
pub fn parse_config(text: &[u8], strict: bool) -> Result<Parsed, ConfigError> {
    let text = std::str::from_utf8(text)
        .map_err(|e| ConfigError::new("", format!("config is not valid UTF-8: {e}")))?;
    let de = &mut serde_json::Deserializer::from_str(text);
    let mut config: ProblemConfig = serde_path_to_error::deserialize(de)
        .map_err(|e| ConfigError::new(e.path().to_string(), e.inner().to_string()))?;
    let warnings = validate(&mut config, strict)?;
    Ok(Parsed { config, warnings })
}

/// Pretty-printed JSON for a configuration.
pub fn emit_config(config: &ProblemConfig) -> String {
    serde_json::to_string_pretty(config).expect("configuration serializes")
}

fn validate(cfg: &mut ProblemConfig, strict: bool) -> Result<Vec<String>, ConfigError> {
    let mut warnings = Vec::new();
    let d = cfg.dimension;
    if d < 2 {
        return Err(ConfigError::new(
            "dimension",
            format!("must be at least 2, got {d}"),
        ));
    }
    if cfg.states.is_empty() {
        return Err(ConfigError::new("states", "at least one state is required"));
    }
    let k = cfg.states.len();
    for (i, state) in cfg.states.iter_mut().enumerate() {
        let path = format!("states[{i}]");
        if state.len() != d {
            return Err(ConfigError::new(
                path,
                format!("expected {d} amplitudes, found {}", state.len()),
            ));
        }
        if state.iter().flatten().any(|x| !x.is_finite()) {
            return Err(ConfigError::new(path, "amplitudes must be finite"));
        }
        let norm = state
            .iter()
            .map(|[re, im]| re * re + im * im)
            .sum::<f64>()
            .sqrt();
        if (norm - 1.0).abs() > NORM_EXACT_TOL {
            let (lo, hi) = NORM_REPAIR_BAND;
            if !(lo..=hi).contains(&norm) {
                return Err(ConfigError::new(
                    path,
                    format!("state {i} has norm {norm}, outside [{lo}, {hi}]"),
                ));
            }
            for amp in state.iter_mut() {
                amp[0] /= norm;
                amp[1] /= norm;
            }
            warnings.push(format!("{path}: renormalized from norm {norm}"));
        }
    }
    if k > d {
        let msg = format!("{k} states in dimension {d} cannot be linearly independent");
        if strict {
            return Err(ConfigError::new("states", msg));
        }
        warnings.push(format!("states: {msg}"));
    }

    let m = cfg.max_copies;
    if m == 0 {
        return Err(ConfigError::new("max_copies", "must be at least 1"));
    }
    if let Some(w) = &cfg.weights {
        if w.len() != m {
            return Err(ConfigError::new(
                "weights",
                format!("expected {m} weights (one per branch), found {}", w.len()),
            ));
        }
        WeightVector::new(w.clone()).map_err(|e| ConfigError::new("weights", e.to_string()))?;
    }
    if let Some(rows) = &cfg.allocation {
        let found_cols = rows.first().map_or(0, Vec::len);
        if rows.len() != m || rows.iter().any(|r| r.len() != k) {
            let detail = rows
                .iter()
                .position(|r| r.len() != k)
                .map(|r| format!(" (row {r} has {} entries)", rows[r].len()))
                .unwrap_or_default();
            return Err(ConfigError::new(
                "allocation",
                format!(
                    "expected a {m} x {k} matrix (branches x states), found {} x {found_cols}{detail}",
                    rows.len()
                ),
            ));
        }
        ProbabilityAllocation::new(rows.clone())
            .map_err(|e| ConfigError::new("allocation", e.to_string()))?;
    }
    if cfg.blank_index >= d {
        return Err(ConfigError::new(
            "blank_index",
            format!("must be below the dimension {d}, got {}", cfg.blank_index),
        ));
    }
    if cfg.trials == 0 {
        return Err(ConfigError::new("trials", "must be at least 1"));
    }
    if let Some(t) = &cfg.tolerances {
        for (name, v) in [
            ("independence", t.independence),
            ("feasibility", t.feasibility),
        ] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(ConfigError::new(
                        format!("tolerances.{name}"),
                        format!("must be positive and finite, got {v}"),
                    ));
                }
            }
        }
    }
    Ok(warnings)
}

impl ProblemConfig {
    /// Minimal configuration with defaults for every optional field.
    pub fn new(dimension: usize, states: Vec<Vec<[f64; 2]>>, max_copies: usize) -> Self {
        Self {
            dimension,
            states,
            max_copies,
            weights: None,
            allocation: None,
            blank_index: 0,
            seed: DEFAULT_SEED,
            trials: DEFAULT_TRIALS,
            unitary_dim_cap: DEFAULT_UNITARY_DIM_CAP,
            tolerances: None,
        }
    }

    pub fn state_set(&self) -> crate::Result<StateSet> {
        let states = self
            .states
            .iter()
            .map(|s| PureState::new(s.iter().map(|&[re, im]| Complex64::new(re, im)).collect()))
            .collect::<crate::Result<Vec<_>>>()?;
        StateSet::new(states)
    }

    pub fn weight_vector(&self) -> crate::Result<WeightVector> {
        match &self.weights {
            Some(w) => WeightVector::new(w.clone()),
            None => WeightVector::ones(self.max_copies),
        }
    }

    pub fn explicit_allocation(&self) -> crate::Result<Option<ProbabilityAllocation>> {
        self.allocation
            .as_ref()
            .map(|rows| ProbabilityAllocation::new(rows.clone()))
            .transpose()
    }

    pub fn independence_tol(&self) -> f64 {
        self.tolerances
            .and_then(|t| t.independence)
            .unwrap_or(INDEPENDENCE_TOL)
    }

    pub fn feasibility_tol(&self) -> f64 {
        self.tolerances
            .and_then(|t| t.feasibility)
            .unwrap_or(PSD_TOL)
    }

    pub fn synthesis_options(&self) -> SynthesisOptions {
        SynthesisOptions {
            blank_index: self.blank_index,
            unitary_dim_cap: self.unitary_dim_cap,
            independence_tol: self.independence_tol(),
            feasibility_tol: self.feasibility_tol(),
        }
    }
}
