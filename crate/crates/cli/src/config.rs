//! Run configuration: one TOML file per run, with command-line flags
//! overriding file values and all randomness flowing from recorded seeds.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use nateval_core::dataset::{SchemaMap, SplitRatios};
use nateval_core::training::artifacts::ModelKind;
use nateval_core::training::HyperParams;
use nateval_core::{Criterion, Error, Result};

/// Environment variable naming the default checkpoint cache directory.
pub const CHECKPOINT_DIR_ENV: &str = "NATEVAL_CHECKPOINT_DIR";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub data: DataConfig,
    pub split: SplitConfig,
    pub model: ModelConfig,
    pub training: TrainingConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct DataConfig {
    /// Raw ratings file (delimiter-separated with a header).
    pub path: Option<PathBuf>,
    /// Directory produced by `prepare`.
    pub prepared_dir: Option<PathBuf>,
    pub schema: SchemaMap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitConfig {
    pub ratios: [f64; 3],
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            ratios: [0.8, 0.1, 0.1],
            seed: 42,
        }
    }
}

impl SplitConfig {
    pub fn split_ratios(&self) -> SplitRatios {
        SplitRatios {
            train: self.ratios[0],
            dev: self.ratios[1],
            test: self.ratios[2],
        }
    }
}

/// Encoder/Bi-LSTM dimension presets for freshly initialized models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DimPreset {
    /// 12-layer 768-wide encoder, or 768-wide Bi-LSTM.
    Base,
    /// 2-layer 128-wide encoder (the published tiny checkpoint shape).
    Tiny,
    /// 2-layer 64-wide encoder or 16-wide Bi-LSTM, for desk-scale runs.
    Stub,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub kind: Option<ModelKind>,
    /// Directory with pre-trained encoder weights
    /// (config.json + encoder.safetensors + vocab.txt).
    pub checkpoint: Option<PathBuf>,
    /// WordPiece vocabulary file for neural models without a checkpoint.
    pub vocab: Option<PathBuf>,
    pub max_len: usize,
    /// Dimensions when initializing from scratch.
    pub preset: Option<DimPreset>,
    /// SVM regularization strength.
    pub c: f64,
    /// Recorded for config fidelity; inert for the linear kernel.
    pub gamma: String,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            kind: None,
            checkpoint: None,
            vocab: None,
            max_len: 128,
            preset: None,
            c: 1.0,
            gamma: "auto".into(),
        }
    }
}

impl ModelConfig {
    /// Resolve a checkpoint path, falling back to the cache directory named
    /// by `NATEVAL_CHECKPOINT_DIR` when the configured path does not exist.
    pub fn resolved_checkpoint(&self) -> Option<PathBuf> {
        let path = self.checkpoint.as_ref()?;
        if path.exists() {
            return Some(path.clone());
        }
        if let Ok(cache) = std::env::var(CHECKPOINT_DIR_ENV) {
            let candidate = Path::new(&cache).join(path);
            if candidate.exists() {
                return Some(candidate);
            }
        }
        Some(path.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Linear learning-rate warmup steps; off by default.
    pub warmup_steps: usize,
    /// L2 penalty; off by default.
    pub weight_decay: f64,
    /// Global-norm gradient clip; off by default.
    pub grad_clip: f64,
    /// `quality` or `informativeness` switches on the two-stage schedule.
    pub transfer_source: Option<Criterion>,
    /// Stage-1 overrides for transfer runs; defaults to the main values.
    pub stage1: Option<HyperParams>,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        let hp = HyperParams::default();
        TrainingConfig {
            batch_size: hp.batch_size,
            epochs: hp.epochs,
            learning_rate: hp.learning_rate,
            seed: hp.seed,
            warmup_steps: hp.warmup_steps,
            weight_decay: hp.weight_decay,
            grad_clip: hp.grad_clip,
            transfer_source: None,
            stage1: None,
        }
    }
}

impl TrainingConfig {
    pub fn hyperparams(&self) -> HyperParams {
        HyperParams {
            batch_size: self.batch_size,
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            seed: self.seed,
            warmup_steps: self.warmup_steps,
            weight_decay: self.weight_decay,
            grad_clip: self.grad_clip,
        }
    }

    pub fn stage1_hyperparams(&self) -> HyperParams {
        self.stage1.unwrap_or_else(|| self.hyperparams())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let content = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        toml::from_str(&content).map_err(|e| Error::Config(format!("invalid config: {e}")))
    }

    /// Load the given config file, or start from defaults.
    pub fn load_or_default(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => Self::load(p),
            None => Ok(RunConfig::default()),
        }
    }

    /// Write the fully resolved snapshot next to a run's artifacts.
    pub fn save(&self, path: &Path) -> Result<()> {
        let content = toml::to_string_pretty(self)
            .map_err(|e| Error::Config(format!("cannot serialize config: {e}")))?;
        std::fs::write(path, content)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_the_documented_run_setup() {
        let config = RunConfig::default();
        assert_eq!(config.split.ratios, [0.8, 0.1, 0.1]);
        assert_eq!(config.split.seed, 42);
        assert_eq!(config.training.batch_size, 256);
        assert_eq!(config.training.epochs, 25);
        assert!((config.training.learning_rate - 5e-3).abs() < 1e-12);
        assert_eq!(config.model.max_len, 128);
        assert!((config.model.c - 1.0).abs() < 1e-12);
        assert_eq!(config.model.gamma, "auto");
    }

    #[test]
    fn toml_roundtrip_preserves_values() {
        let mut config = RunConfig::default();
        config.model.kind = Some(ModelKind::Encoder);
        config.training.transfer_source = Some(Criterion::Quality);
        config.training.stage1 = Some(HyperParams {
            epochs: 10,
            ..HyperParams::default()
        });
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        config.save(&path).unwrap();
        let loaded = RunConfig::load(&path).unwrap();
        assert_eq!(loaded, config);
    }

    #[test]
    fn partial_toml_fills_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "[model]\nkind = \"svm\"\n").unwrap();
        let config = RunConfig::load(&path).unwrap();
        assert_eq!(config.model.kind, Some(ModelKind::Svm));
        assert_eq!(config.training.epochs, 25);
    }
}
