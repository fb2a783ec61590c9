//! Experiment configuration: TOML in, validated plan out.

use std::path::PathBuf;

use serde::Deserialize;
use thiserror::Error;
use urnlab::urn::{ReplacementSpec, SpecError};
use urnlab::verify::{EnsembleConfig, DEFAULT_CAP, MIN_ENSEMBLE, MIN_HORIZON};

pub const DEFAULT_HORIZON: u64 = 100_000;
pub const DEFAULT_ENSEMBLE: usize = 10_000;
pub const DEFAULT_SEED: u64 = 1;
/// Sample files hold every checkpoint of every trajectory; keep the grid
/// coarse by default.
pub const DEFAULT_PER_OCTAVE: u32 = 2;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("{path}: {source}")]
    Spec { path: String, source: SpecError },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: RawModel,
    #[serde(default)]
    run: RawRun,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    replacement: Vec<Vec<f64>>,
    initial: Vec<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    horizon: Option<u64>,
    ensemble: Option<usize>,
    seed: Option<u64>,
    cap: Option<u64>,
    per_octave: Option<u32>,
    checkpoints: Option<Vec<u64>>,
    predictions: Option<Vec<String>>,
    output: Option<PathBuf>,
    threads: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub replacement: Vec<Vec<f64>>,
    pub initial: Vec<f64>,
    pub spec: ReplacementSpec,
    pub horizon: u64,
    pub ensemble: usize,
    pub seed: u64,
    pub cap: u64,
    pub per_octave: u32,
    pub checkpoints: Option<Vec<u64>>,
    /// Labels to verify; all when absent.
    pub predictions: Option<Vec<String>>,
    pub output: PathBuf,
    pub threads: Option<usize>,
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub horizon: Option<u64>,
    pub ensemble: Option<usize>,
    pub cap: Option<u64>,
    pub output: Option<PathBuf>,
}

fn spec_error_path(e: &SpecError) -> String {
    match e {
        SpecError::RaggedRow { row, .. } => format!("model.replacement[{row}]"),
        SpecError::NegativeEntry { row, col, .. } => format!("model.replacement[{row}][{col}]"),
        SpecError::UnequalRowSums { row, .. } => format!("model.replacement[{row}]"),
        SpecError::NegativeInitial { index, .. } => format!("model.initial[{index}]"),
        SpecError::InitialLength { .. } | SpecError::InitialNotProbability(_) => "model.initial".into(),
        _ => "model.replacement".into(),
    }
}

pub fn parse_config(text: &str, overrides: &Overrides) -> Result<ExperimentPlan, ConfigError> {
    let de = toml::Deserializer::new(text);
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let message = e.inner().message().to_string();
        ConfigError::Schema { path: if path == "." { "<root>".into() } else { path }, message }
    })?;

    let spec = ReplacementSpec::new(&raw.model.replacement, &raw.model.initial)
        .map_err(|source| ConfigError::Spec { path: spec_error_path(&source), source })?;

    let run = raw.run;
    let plan = ExperimentPlan {
        replacement: raw.model.replacement,
        initial: raw.model.initial,
        spec,
        horizon: overrides.horizon.or(run.horizon).unwrap_or(DEFAULT_HORIZON),
        ensemble: overrides.ensemble.or(run.ensemble).unwrap_or(DEFAULT_ENSEMBLE),
        seed: overrides.seed.or(run.seed).unwrap_or(DEFAULT_SEED),
        cap: overrides.cap.or(run.cap).unwrap_or(DEFAULT_CAP),
        per_octave: run.per_octave.unwrap_or(DEFAULT_PER_OCTAVE),
        checkpoints: run.checkpoints,
        predictions: run.predictions,
        output: overrides.output.clone().or(run.output).unwrap_or_else(|| PathBuf::from("urnlab-out")),
        threads: run.threads,
    };
    plan.validate()?;
    Ok(plan)
}

impl ExperimentPlan {
    fn validate(&self) -> Result<(), ConfigError> {
        let schema = |path: &str, message: String| ConfigError::Schema { path: path.into(), message };
        if self.horizon < MIN_HORIZON {
            return Err(schema("run.horizon", format!("{} is below the minimum {MIN_HORIZON}", self.horizon)));
        }
        if self.ensemble < MIN_ENSEMBLE {
            return Err(schema("run.ensemble", format!("{} is below the minimum {MIN_ENSEMBLE}", self.ensemble)));
        }
        let product = self.horizon as u128 * self.ensemble as u128;
        if product > self.cap as u128 {
            return Err(ConfigError::Invalid(format!(
                "resource cap: horizon x ensemble = {product} exceeds run.cap = {}",
                self.cap
            )));
        }
        if self.per_octave == 0 {
            return Err(schema("run.per_octave", "must be at least 1".into()));
        }
        if let Some(c) = &self.checkpoints {
            if let Some(i) = c.iter().position(|&n| n > self.horizon) {
                return Err(schema(&format!("run.checkpoints[{i}]"), format!("{} exceeds the horizon", c[i])));
            }
        }
        if self.threads == Some(0) {
            return Err(schema("run.threads", "must be at least 1".into()));
        }
        Ok(())
    }

    pub fn ensemble_config(&self) -> EnsembleConfig {
        EnsembleConfig {
            horizon: self.horizon,
            ensemble: self.ensemble,
            seed: self.seed,
            checkpoints: self.checkpoints.clone(),
            per_octave: self.per_octave,
            cap: self.cap,
            threads: self.threads,
        }
    }
}
