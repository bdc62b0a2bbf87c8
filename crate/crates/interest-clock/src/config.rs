//! Experiment configuration: one TOML file with [generator], [model],
//! [optim], [clock] and [eval] sections, plus `--set section.key=value`
//! overrides applied before deserialization.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::clock::{ClockStrategy, TimeMode};
use crate::error::{Error, Result};
use crate::feature_store::ScoreWeights;
use crate::model::{ModelConfig, OptimConfig};
use crate::sim::GeneratorConfig;
use crate::types::Vocabulary;

pub const ALL_STRATEGIES: [&str; 4] = ["time_encoding", "naive", "adaptive", "gaussian"];

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_strategies() -> Vec<String> {
    ALL_STRATEGIES.iter().map(|s| s.to_string()).collect()
}

fn default_seed() -> u64 {
    42
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ClockConfig {
    pub strategy: String,
    pub sigma: f64,
    pub mu: f64,
    pub time_mode: String,
    /// Behavior score weights (like, finish, skip, dislike terms).
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub omega: f64,
}

impl Default for ClockConfig {
    fn default() -> Self {
        let w = ScoreWeights::default();
        ClockConfig {
            strategy: "gaussian".into(),
            sigma: 1.0,
            mu: 0.0,
            time_mode: "continuous".into(),
            alpha: w.alpha,
            beta: w.beta,
            gamma: w.gamma,
            omega: w.omega,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    /// Leading days that only populate the feature store.
    pub warmup_days: u64,
    /// Days trained on after warm-up; everything later is held out.
    pub train_days: u64,
    /// Telemetry row cadence, in steps.
    pub telemetry_every: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            warmup_days: 30,
            train_days: 10,
            telemetry_every: 100,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub embedding_dim: usize,
    pub hidden: Vec<usize>,
    pub user_hash_bits: u32,
    pub item_hash_bits: u32,
}

impl Default for ModelSection {
    fn default() -> Self {
        let m = ModelConfig::default();
        ModelSection {
            embedding_dim: m.embedding_dim,
            hidden: m.hidden,
            user_hash_bits: m.user_hash_bits,
            item_hash_bits: m.item_hash_bits,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct OptimSection {
    pub lr: f64,
    pub init_acc: f64,
}

impl Default for OptimSection {
    fn default() -> Self {
        let o = OptimConfig::default();
        OptimSection {
            lr: o.lr,
            init_acc: o.init_acc,
        }
    }
}

/// The merged view of all module configurations.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Strategies `compare` runs, in report order.
    #[serde(default = "default_strategies")]
    pub strategies: Vec<String>,
    pub generator: GeneratorConfig,
    pub model: ModelSection,
    pub optim: OptimSection,
    pub clock: ClockConfig,
    pub eval: EvalConfig,
}

impl ExperimentConfig {
    pub fn load(path: &Path, overrides: &[String]) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config file {}: {e}", path.display()))
        })?;
        Self::from_toml(&text, overrides)
    }

    pub fn from_toml(text: &str, overrides: &[String]) -> Result<ExperimentConfig> {
        let mut value: toml::Value = text
            .parse()
            .map_err(|e| Error::Config(format!("config parse error: {e}")))?;
        for spec in overrides {
            apply_override(&mut value, spec)?;
        }
        let cfg: ExperimentConfig = value
            .try_into()
            .map_err(|e| Error::Config(format!("config error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.strategies.is_empty() {
            return Err(Error::Config("strategy list must not be empty".into()));
        }
        for s in &self.strategies {
            self.strategy_by_name(s)?;
        }
        self.strategy()?;
        self.score_weights()?;
        self.time_mode()?;
        self.generator.validate()?;
        if self.model.embedding_dim == 0 {
            return Err(Error::Config("model.embedding_dim must be >= 1".into()));
        }
        if self.model.hidden.is_empty() || self.model.hidden.contains(&0) {
            return Err(Error::Config(
                "model.hidden must be non-empty, widths >= 1".into(),
            ));
        }
        if self.model.user_hash_bits == 0 || self.model.user_hash_bits > 30 {
            return Err(Error::Config(
                "model.user_hash_bits must lie in [1, 30]".into(),
            ));
        }
        if self.model.item_hash_bits == 0 || self.model.item_hash_bits > 30 {
            return Err(Error::Config(
                "model.item_hash_bits must lie in [1, 30]".into(),
            ));
        }
        if !(self.optim.lr > 0.0) || !self.optim.lr.is_finite() {
            return Err(Error::Config("optim.lr must be > 0".into()));
        }
        if !(self.optim.init_acc > 0.0) || !self.optim.init_acc.is_finite() {
            return Err(Error::Config("optim.init_acc must be > 0".into()));
        }
        if self.eval.warmup_days + self.eval.train_days >= self.generator.days {
            return Err(Error::Config(format!(
                "warmup ({}) + train ({}) days must leave held-out days within {} generated days",
                self.eval.warmup_days, self.eval.train_days, self.generator.days
            )));
        }
        if self.eval.telemetry_every == 0 {
            return Err(Error::Config("eval.telemetry_every must be >= 1".into()));
        }
        Ok(())
    }

    pub fn strategy_by_name(&self, name: &str) -> Result<ClockStrategy> {
        match name {
            "time_encoding" => Ok(ClockStrategy::TimeEncoding),
            "naive" => Ok(ClockStrategy::Naive),
            "adaptive" => Ok(ClockStrategy::Adaptive),
            "gaussian" => ClockStrategy::gaussian(self.clock.sigma, self.clock.mu),
            other => Err(Error::Config(format!(
                "unknown clock.strategy {other:?}; expected one of {ALL_STRATEGIES:?}"
            ))),
        }
    }

    pub fn strategy(&self) -> Result<ClockStrategy> {
        self.strategy_by_name(&self.clock.strategy)
    }

    pub fn score_weights(&self) -> Result<ScoreWeights> {
        ScoreWeights::new(
            self.clock.alpha,
            self.clock.beta,
            self.clock.gamma,
            self.clock.omega,
        )
    }

    pub fn time_mode(&self) -> Result<TimeMode> {
        TimeMode::from_name(&self.clock.time_mode).ok_or_else(|| {
            Error::Config(format!(
                "unknown clock.time_mode {:?}; expected continuous or hourly",
                self.clock.time_mode
            ))
        })
    }

    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            embedding_dim: self.model.embedding_dim,
            hidden: self.model.hidden.clone(),
            user_hash_bits: self.model.user_hash_bits,
            item_hash_bits: self.model.item_hash_bits,
        }
    }

    pub fn optim_config(&self) -> OptimConfig {
        OptimConfig {
            lr: self.optim.lr,
            init_acc: self.optim.init_acc,
        }
    }

    pub fn vocabulary(&self) -> Result<Vocabulary> {
        Vocabulary::synthetic([
            self.generator.genre_vocab,
            self.generator.mood_vocab,
            self.generator.language_vocab,
        ])
    }

    /// Canonical TOML rendering; the manifest hashes this, so any override
    /// changes the hash.
    pub fn canonical_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn content_hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_toml().as_bytes());
        hex::encode(digest)
    }
}

/// Apply one `section.key=value` override onto the parsed TOML tree. Values
/// parse as TOML fragments; anything that fails to parse is kept as a string.
fn apply_override(root: &mut toml::Value, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {spec:?} is not of the form key=value")))?;
    let parsed: toml::Value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap(),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let mut node = root;
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!(
            "override {spec:?} has an empty key segment"
        )));
    }
    for part in &parts[..parts.len() - 1] {
        let table = node
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override {spec:?}: {part} is not a table")))?;
        node = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()));
    }
    let table = node
        .as_table_mut()
        .ok_or_else(|| Error::Config(format!("override {spec:?}: parent is not a table")))?;
    table.insert(parts.last().unwrap().to_string(), parsed);
    Ok(())
}
