//! JSON experiment configuration.
//!
//! The file mirrors [`ExperimentConfig`] field for field. Unknown keys are
//! rejected at every level, and every validation failure names the
//! offending key and value. States and arms are 1-based in the file (as in
//! the printed tables) and 0-based in the library.
//!
//! ```json
//! {
//!   "k": 2,
//!   "horizon": 1000,
//!   "delta": 0.3,
//!   "replications": 100,
//!   "seed": 42,
//!   "chain": { "rows": [[0.5, 0.5], [0.3, 0.7]] },
//!   "arms": { "arms": [ { "kind": "bernoulli", "mean": 0.9 },
//!                       { "kind": "bernoulli", "mean": 0.1 } ] },
//!   "policies": [ { "kind": "genie" }, { "kind": "p2ee", "alpha": 0.1 } ]
//! }
//! ```
//!
//! `delta` accepts a single number or an array (for sweeps). `chain` is
//! either `{ "rows": [...] }` or `{ "seed": <u64> }` for a seeded random
//! chain. `arms` is either `{ "arms": [...] }` or
//! `{ "linear": { "top": 0.95, "bottom": 0.05 } }` for evenly spaced
//! Bernoulli means. Optional keys: `start_state` (1-based; omitted means
//! the stationary start) and `output` (directory for artifacts, default
//! `out`).

use std::fmt::Display;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::env::{Arm, RewardModel, StartRule};
use crate::markov::TransitionMatrix;
use crate::policy::PolicyKind;
use crate::sim::ExperimentConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid value for `{key}`: {message}")]
    Validation { key: String, message: String },
}

fn invalid(key: impl Into<String>, message: impl Display) -> ConfigError {
    ConfigError::Validation {
        key: key.into(),
        message: message.to_string(),
    }
}

/// Raw file schema. Strict: unknown keys anywhere are a parse error.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub k: usize,
    pub horizon: u64,
    pub delta: DeltaSpec,
    pub replications: u32,
    pub seed: u64,
    pub chain: ChainSpec,
    pub arms: ArmsSpec,
    #[serde(default)]
    pub policies: Vec<PolicySpec>,
    /// Fixed start state (1-based). Omitted: draw from the unbiased
    /// chain's stationary distribution.
    #[serde(default)]
    pub start_state: Option<usize>,
    /// Output directory for CSV/SVG artifacts.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum DeltaSpec {
    One(f64),
    Many(Vec<f64>),
}

impl DeltaSpec {
    fn to_vec(&self) -> Vec<f64> {
        match self {
            DeltaSpec::One(d) => vec![*d],
            DeltaSpec::Many(ds) => ds.clone(),
        }
    }
}

/// Exactly one of `rows` (explicit matrix) or `seed` (random chain).
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    #[serde(default)]
    pub rows: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Exactly one of `arms` (explicit list) or `linear` (spaced Bernoullis).
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmsSpec {
    #[serde(default)]
    pub arms: Option<Vec<ArmSpec>>,
    #[serde(default)]
    pub linear: Option<LinearArms>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmSpec {
    pub kind: String,
    pub mean: f64,
    #[serde(default)]
    pub sd: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearArms {
    pub top: f64,
    pub bottom: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySpec {
    pub kind: String,
    /// Exploration fraction; only meaningful for `p2ee` (default 0.1).
    #[serde(default)]
    pub alpha: Option<f64>,
}

/// A parsed, fully validated configuration plus its output location.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub experiment: ExperimentConfig,
    pub output_dir: PathBuf,
}

/// Reads, parses, and validates a config file.
pub fn load_config(path: &Path) -> Result<LoadedConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let file: ConfigFile = serde_json::from_str(&text)?;
    resolve(file)
}

/// Turns the raw file into a validated [`ExperimentConfig`].
pub fn resolve(file: ConfigFile) -> Result<LoadedConfig, ConfigError> {
    if file.k < 2 {
        return Err(invalid("k", format!("{} (need at least 2 arms)", file.k)));
    }

    let matrix = match (&file.chain.rows, file.chain.seed) {
        (Some(rows), None) => {
            if rows.len() != file.k {
                return Err(invalid(
                    "chain.rows",
                    format!("{} rows for k = {}", rows.len(), file.k),
                ));
            }
            TransitionMatrix::new(rows.clone())
                .map_err(|e| invalid("chain.rows", e))?
        }
        (None, Some(seed)) => {
            TransitionMatrix::random(file.k, seed).map_err(|e| invalid("chain.seed", e))?
        }
        _ => {
            return Err(invalid(
                "chain",
                "give exactly one of `rows` (explicit matrix) or `seed` (random chain)",
            ))
        }
    };

    let rewards = match (&file.arms.arms, &file.arms.linear) {
        (Some(arms), None) => {
            if arms.len() != file.k {
                return Err(invalid(
                    "arms.arms",
                    format!("{} arms for k = {}", arms.len(), file.k),
                ));
            }
            let mut resolved = Vec::with_capacity(arms.len());
            for (i, spec) in arms.iter().enumerate() {
                let key = format!("arms.arms[{i}]");
                let arm = match spec.kind.as_str() {
                    "bernoulli" => {
                        if spec.sd.is_some() {
                            return Err(invalid(
                                format!("{key}.sd"),
                                "`sd` only applies to gaussian arms",
                            ));
                        }
                        Arm::Bernoulli { mean: spec.mean }
                    }
                    "gaussian" => Arm::Gaussian {
                        mean: spec.mean,
                        sd: spec.sd.ok_or_else(|| {
                            invalid(format!("{key}.sd"), "gaussian arms need an `sd`")
                        })?,
                    },
                    other => {
                        return Err(invalid(
                            format!("{key}.kind"),
                            format!("`{other}` (expected `bernoulli` or `gaussian`)"),
                        ))
                    }
                };
                resolved.push(arm);
            }
            RewardModel::new(resolved).map_err(|e| invalid("arms.arms", e))?
        }
        (None, Some(linear)) => {
            for (key, v) in [("top", linear.top), ("bottom", linear.bottom)] {
                if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                    return Err(invalid(
                        format!("arms.linear.{key}"),
                        format!("{v} (Bernoulli means must lie in [0, 1])"),
                    ));
                }
            }
            RewardModel::linear_bernoulli(file.k, linear.top, linear.bottom)
                .map_err(|e| invalid("arms.linear", e))?
        }
        _ => {
            return Err(invalid(
                "arms",
                "give exactly one of `arms` (explicit list) or `linear` (spaced Bernoulli means)",
            ))
        }
    };

    let mut policies = Vec::with_capacity(file.policies.len());
    for (i, spec) in file.policies.iter().enumerate() {
        let key = format!("policies[{i}]");
        let kind = match spec.kind.as_str() {
            "genie" => PolicyKind::Genie,
            "p2ee" => PolicyKind::P2ee {
                alpha: spec.alpha.unwrap_or(0.1),
            },
            "ucb" => PolicyKind::Ucb,
            "greedy" => PolicyKind::Greedy,
            "noop" => PolicyKind::Noop,
            other => {
                return Err(invalid(
                    format!("{key}.kind"),
                    format!("`{other}` (expected genie, p2ee, ucb, greedy, or noop)"),
                ))
            }
        };
        if spec.alpha.is_some() && spec.kind != "p2ee" {
            return Err(invalid(
                format!("{key}.alpha"),
                "`alpha` only applies to p2ee",
            ));
        }
        policies.push(kind);
    }

    let start = match file.start_state {
        None => StartRule::Stationary,
        Some(state) => {
            if state < 1 || state > file.k {
                return Err(invalid(
                    "start_state",
                    format!("{state} (states are 1-based, so 1..={})", file.k),
                ));
            }
            StartRule::Fixed(state - 1)
        }
    };

    let experiment = ExperimentConfig::new(
        matrix,
        rewards,
        file.horizon,
        file.delta.to_vec(),
        file.replications,
        file.seed,
        start,
        policies,
    )
    .map_err(|e| match e {
        crate::sim::ExperimentError::Horizon => invalid("horizon", file.horizon),
        crate::sim::ExperimentError::Replications => invalid("replications", file.replications),
        crate::sim::ExperimentError::NoDeltas | crate::sim::ExperimentError::SweepNeedsTwoDeltas => {
            invalid("delta", "at least one value is required")
        }
        crate::sim::ExperimentError::DeltaRange(d) => {
            invalid("delta", format!("{d} (must lie in [0, 1])"))
        }
        crate::sim::ExperimentError::DuplicatePolicy(name) => {
            invalid("policies", format!("duplicate policy `{name}`"))
        }
        crate::sim::ExperimentError::AlphaRange(a) => {
            invalid("policies", format!("alpha {a} must lie in [0, 1]"))
        }
        other => invalid("config", other),
    })?;

    Ok(LoadedConfig {
        experiment,
        output_dir: file.output.unwrap_or_else(|| PathBuf::from("out")),
    })
}
