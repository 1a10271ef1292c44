//! Plain-text `key = value` run configuration.
//!
//! ```text
//! # baseline
//! g_a = 10
//! omega_a = 10
//! delta_a = 1000
//! kappa_a = 0.9
//! kappa_loss_a = 0.1
//! ```
//!
//! Any `_b` key that is absent takes the value of its `_a` counterpart.
//! `#` starts a comment. Unknown and repeated keys are errors.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::detection::DEFAULT_ETA;
use crate::dynamics::{Grid, DEFAULT_DT, DEFAULT_T_MAX};
use crate::error::Error as ParamError;
use crate::params::{SubsystemParams, SystemParams};

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_NTRAJ: usize = 100_000;
/// Output every n-th grid point (0.01/𝒦 spacing at the default step).
pub const DEFAULT_EVERY: usize = 10;

const SUBSYSTEM_KEYS: [&str; 7] = ["g", "omega", "delta", "kappa", "kappa_loss", "gamma", "gamma_prime"];
const REQUIRED: [&str; 4] = ["g_a", "omega_a", "delta_a", "kappa_a"];
const GLOBAL_KEYS: [&str; 7] = ["phi", "eta", "t_max", "dt", "seed", "ntraj", "tbar"];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {message}")]
    MissingFile { path: PathBuf, message: String },

    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },

    #[error("line {line}: {message}")]
    ParseError { line: usize, message: String },

    #[error("missing required key `{0}`")]
    MissingKey(String),

    #[error("{}{source}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Invalid {
        line: Option<usize>,
        #[source]
        source: ParamError,
    },
}

impl ConfigError {
    pub fn line(&self) -> Option<usize> {
        match self {
            Self::UnknownKey { line, .. } | Self::ParseError { line, .. } => Some(*line),
            Self::Invalid { line, .. } => *line,
            _ => None,
        }
    }
}

/// When to switch the lasers off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TbarChoice {
    /// At the maximum of the atom-atom concurrence.
    Auto,
    Fixed(f64),
}

impl FromStr for TbarChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Self::Auto);
        }
        let v: f64 = s.parse().map_err(|_| format!("expected `auto` or a time, got `{s}`"))?;
        if !v.is_finite() || v < 0.0 {
            return Err(format!("switch-off time must be finite and non-negative, got {v}"));
        }
        Ok(Self::Fixed(v))
    }
}

/// Numerical and statistical settings of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunOptions {
    pub eta: f64,
    pub grid: Grid,
    pub seed: u64,
    pub ntraj: usize,
    pub tbar: TbarChoice,
    pub every: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            eta: DEFAULT_ETA,
            grid: Grid {
                t_max: DEFAULT_T_MAX,
                dt: DEFAULT_DT,
            },
            seed: DEFAULT_SEED,
            ntraj: DEFAULT_NTRAJ,
            tbar: TbarChoice::Auto,
            every: DEFAULT_EVERY,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Config {
    pub params: SystemParams,
    pub options: RunOptions,
    /// Key/value pairs as written in the file.
    pub entries: BTreeMap<String, String>,
}

pub fn parse_config(path: &Path) -> Result<Config, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::MissingFile {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    parse_config_str(&text)
}

fn is_known(key: &str) -> bool {
    GLOBAL_KEYS.contains(&key)
        || SUBSYSTEM_KEYS
            .iter()
            .any(|k| key.strip_prefix(k).is_some_and(|s| s == "_a" || s == "_b"))
}

pub fn parse_config_str(text: &str) -> Result<Config, ConfigError> {
    let mut values: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::ParseError {
            line,
            message: format!("expected `key = value`, got `{content}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if !is_known(key) {
            return Err(ConfigError::UnknownKey {
                line,
                key: key.to_string(),
            });
        }
        if value.is_empty() {
            return Err(ConfigError::ParseError {
                line,
                message: format!("empty value for `{key}`"),
            });
        }
        if let Some((first, _)) = values.insert(key.to_string(), (line, value.to_string())) {
            return Err(ConfigError::ParseError {
                line,
                message: format!("`{key}` already set on line {first}"),
            });
        }
    }
    for key in REQUIRED {
        if !values.contains_key(key) {
            return Err(ConfigError::MissingKey(key.to_string()));
        }
    }

    let line_of = |key: &str| -> Option<usize> {
        values.get(key).map(|(l, _)| *l).or_else(|| {
            key.strip_suffix("_b")
                .and_then(|stem| values.get(&format!("{stem}_a")).map(|(l, _)| *l))
        })
    };
    let number = |key: &str| -> Result<Option<f64>, ConfigError> {
        values
            .get(key)
            .map(|(line, v)| {
                v.parse::<f64>().map_err(|_| ConfigError::ParseError {
                    line: *line,
                    message: format!("`{key}`: `{v}` is not a number"),
                })
            })
            .transpose()
    };
    let sub = |suffix: &str| -> Result<SubsystemParams, ConfigError> {
        let mut v = [0.0; 7];
        for (slot, stem) in v.iter_mut().zip(SUBSYSTEM_KEYS) {
            let own = number(&format!("{stem}_{suffix}"))?;
            let fallback = number(&format!("{stem}_a"))?;
            *slot = own.or(fallback).unwrap_or(0.0);
        }
        Ok(SubsystemParams::new(v[0], v[1], v[2], v[3], v[4]).with_spontaneous_emission(v[5], v[6]))
    };
    let invalid = |source: ParamError| {
        let key = match &source {
            ParamError::NegativeRate { name, .. } | ParamError::NonFinite { name } => name.clone(),
            ParamError::NonPositiveDetuning { subsystem, .. } => format!("delta_{subsystem}"),
            ParamError::ZeroBandwidth(s) => format!("kappa_{s}"),
            ParamError::InvalidEfficiency(_) => "eta".into(),
            ParamError::InvalidGrid { .. } => {
                if values.contains_key("dt") { "dt" } else { "t_max" }.into()
            }
            _ => String::new(),
        };
        ConfigError::Invalid {
            line: line_of(&key),
            source,
        }
    };

    let params = SystemParams::new(sub("a")?, sub("b")?, number("phi")?.unwrap_or(0.0)).map_err(invalid)?;

    let mut options = RunOptions::default();
    if let Some(eta) = number("eta")? {
        if !(0.0..=1.0).contains(&eta) {
            return Err(invalid(ParamError::InvalidEfficiency(eta)));
        }
        options.eta = eta;
    }
    let t_max = number("t_max")?.unwrap_or(DEFAULT_T_MAX);
    let dt = number("dt")?.unwrap_or(DEFAULT_DT);
    options.grid = Grid::new(t_max, dt).map_err(invalid)?;
    if let Some((line, v)) = values.get("seed") {
        options.seed = v.parse().map_err(|_| ConfigError::ParseError {
            line: *line,
            message: format!("`seed`: `{v}` is not a non-negative integer"),
        })?;
    }
    if let Some((line, v)) = values.get("ntraj") {
        options.ntraj = parse_count(v).ok_or_else(|| ConfigError::ParseError {
            line: *line,
            message: format!("`ntraj`: `{v}` is not a positive integer"),
        })?;
    }
    if let Some((line, v)) = values.get("tbar") {
        options.tbar = v.parse().map_err(|message| ConfigError::ParseError { line: *line, message })?;
    }

    Ok(Config {
        params,
        options,
        entries: values.into_iter().map(|(k, (_, v))| (k, v)).collect(),
    })
}

/// Positive integer, also accepting exact float notation such as `1e5`.
pub fn parse_count(s: &str) -> Option<usize> {
    let n = s.parse::<usize>().ok().or_else(|| {
        let f: f64 = s.parse().ok()?;
        (f.fract() == 0.0 && (1.0..1e15).contains(&f)).then_some(f as usize)
    })?;
    (n > 0).then_some(n)
}
