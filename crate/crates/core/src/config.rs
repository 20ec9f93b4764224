//! Experiment configuration: a TOML document with one section per stage.
//!
//! Unknown keys are rejected and every seed is explicit; nothing defaults to
//! wall-clock state, so a config file pins a run completely.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::data::{CsvSchema, SyntheticConfig};
use crate::error::{Error, Result};
use crate::nn::{Activation, ArchitectureDescriptor};
use crate::train::{OptimizerSpec, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub output_dir: PathBuf,
    pub dataset: DatasetSection,
    pub architecture: ArchitectureSection,
    pub training: TrainingSection,
    pub pretrain: PretrainSection,
    pub ensemble: EnsembleSection,
    pub landscape: LandscapeSection,
}

/// Exactly one of `synthetic` or `csv` must be present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<CsvDatasetSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvDatasetSection {
    pub path: PathBuf,
    pub schema: CsvSchema,
    pub held_out_sites: usize,
    pub seed: u64,
    #[serde(default = "default_ratios")]
    pub ratios: [f64; 3],
}

fn default_ratios() -> [f64; 3] {
    [0.7, 0.1, 0.2]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchitectureSection {
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub activation: Activation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSection {
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: OptimizerSpec,
    /// Decay factor used by direct pool training.
    pub gamma: f64,
    /// Grid searched by the full pipeline's tuning stage.
    pub gamma_grid: Vec<f64>,
    pub seed: u64,
    /// Models per lineage.
    pub n_models: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PretrainSection {
    pub epochs: usize,
    pub gamma: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    pub t_grid: Vec<usize>,
    pub resamples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandscapeSection {
    pub n_lambda: usize,
    pub pairs_per_scenario: usize,
    pub seed: u64,
    #[serde(default)]
    pub eval_partition: EvalPartition,
}

/// Which partition barrier curves are evaluated on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalPartition {
    #[default]
    Test,
    Validation,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.dataset.synthetic, &self.dataset.csv) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "dataset: choose either synthetic or csv, not both".into(),
                ))
            }
            (None, None) => {
                return Err(Error::Config(
                    "dataset: one of synthetic or csv is required".into(),
                ))
            }
            _ => {}
        }
        if let Some(syn) = &self.dataset.synthetic {
            syn.validate()?;
            if syn.input_dim != self.architecture.input_dim {
                return Err(Error::Config(format!(
                    "dataset input_dim {} does not match architecture input_dim {}",
                    syn.input_dim, self.architecture.input_dim
                )));
            }
        }
        if let Some(csv) = &self.dataset.csv {
            if csv.schema.feature_columns.len() != self.architecture.input_dim {
                return Err(Error::Config(format!(
                    "csv schema has {} feature columns, architecture expects {}",
                    csv.schema.feature_columns.len(),
                    self.architecture.input_dim
                )));
            }
            if csv.held_out_sites == 0 {
                return Err(Error::Config("csv: held_out_sites must be >= 1".into()));
            }
        }
        self.arch()?;
        self.train_config().validate()?;
        self.pretrain_config().validate()?;
        if self.training.n_models == 0 {
            return Err(Error::Config("training: n_models must be >= 1".into()));
        }
        if self.training.gamma_grid.is_empty() {
            return Err(Error::Config("training: gamma_grid must be non-empty".into()));
        }
        for &g in &self.training.gamma_grid {
            if !(g > 0.0 && g < 1.0) {
                return Err(Error::Config(format!(
                    "training: gamma_grid value {g} outside (0,1)"
                )));
            }
        }
        if self.ensemble.t_grid.is_empty()
            || self.ensemble.t_grid[0] == 0
            || self.ensemble.t_grid.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::Config(
                "ensemble: t_grid must be non-empty, strictly increasing, and >= 1".into(),
            ));
        }
        if self.ensemble.resamples == 0 {
            return Err(Error::Config("ensemble: resamples must be >= 1".into()));
        }
        if self.landscape.n_lambda < 2 {
            return Err(Error::Config("landscape: n_lambda must be >= 2".into()));
        }
        if self.landscape.pairs_per_scenario == 0 {
            return Err(Error::Config(
                "landscape: pairs_per_scenario must be >= 1".into(),
            ));
        }
        Ok(())
    }

    pub fn arch(&self) -> Result<ArchitectureDescriptor> {
        ArchitectureDescriptor::new(
            self.architecture.input_dim,
            self.architecture.hidden_dims.clone(),
            self.architecture.activation,
        )
    }

    /// Fine-tuning config from the training section.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.training.epochs,
            batch_size: self.training.batch_size,
            optimizer: self.training.optimizer.clone(),
            gamma: self.training.gamma,
            seed: self.training.seed,
        }
    }

    /// Pretext config: its own epochs/gamma/seed, shared optimizer and batch
    /// size.
    pub fn pretrain_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.pretrain.epochs,
            batch_size: self.training.batch_size,
            optimizer: self.training.optimizer.clone(),
            gamma: self.pretrain.gamma,
            seed: self.pretrain.seed,
        }
    }

    /// Overrides every stage seed with one value.
    pub fn override_seed(&mut self, seed: u64) {
        if let Some(syn) = &mut self.dataset.synthetic {
            syn.seed = seed;
        }
        if let Some(csv) = &mut self.dataset.csv {
            csv.seed = seed;
        }
        self.training.seed = seed;
        self.pretrain.seed = seed;
        self.ensemble.seed = seed;
        self.landscape.seed = seed;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const SAMPLE: &str = r#"
output_dir = "runs/demo"

[dataset.synthetic]
n_subjects = 1200
n_sites = 6
input_dim = 16
class_separation = 1.6
site_effect_scale = 0.5
auxiliary_effect_scale = 1.0
label_balance = 0.5
seed = 7

[architecture]
input_dim = 16
hidden_dims = [16, 8]
activation = "relu"

[training]
epochs = 60
batch_size = 32
optimizer = { kind = "adam", lr0 = 1e-3, beta1 = 0.9, beta2 = 0.999, eps = 1e-8 }
gamma = 0.4
gamma_grid = [0.2, 0.4, 0.6, 0.8]
seed = 1000
n_models = 10

[pretrain]
epochs = 40
gamma = 0.6
seed = 77

[ensemble]
t_grid = [2, 3, 5, 10, 15, 20, 30, 40, 50, 60]
resamples = 1000
seed = 99

[landscape]
n_lambda = 30
pairs_per_scenario = 10
seed = 17
"#;

    #[test]
    fn sample_config_parses() {
        let cfg = ExperimentConfig::from_toml(SAMPLE).unwrap();
        assert_eq!(cfg.training.n_models, 10);
        assert_eq!(cfg.landscape.eval_partition, EvalPartition::Test);
        assert_eq!(cfg.arch().unwrap().param_count(), 16 * 16 + 16 + 16 * 8 + 8 + 9);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = SAMPLE.replace("[pretrain]", "[pretrain]\nmystery_knob = 3");
        match ExperimentConfig::from_toml(&text) {
            Err(Error::Config(msg)) => assert!(msg.contains("mystery_knob"), "{msg}"),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn dataset_must_be_exactly_one_kind() {
        let text = SAMPLE.replace(
            "[architecture]",
            "[dataset.csv]\npath = \"x.csv\"\nheld_out_sites = 1\nseed = 3\n\
             schema = { feature_columns = [\"a\"], label_column = \"label\", site_column = \"site\", auxiliary_column = \"aux\" }\n\n[architecture]",
        );
        assert!(ExperimentConfig::from_toml(&text).is_err());
    }

    #[test]
    fn input_dim_mismatch_is_rejected() {
        let text = SAMPLE.replace("input_dim = 16\nhidden_dims", "input_dim = 12\nhidden_dims");
        assert!(ExperimentConfig::from_toml(&text).is_err());
    }

    #[test]
    fn seed_override_touches_every_section() {
        let mut cfg = ExperimentConfig::from_toml(SAMPLE).unwrap();
        cfg.override_seed(42);
        assert_eq!(cfg.dataset.synthetic.as_ref().unwrap().seed, 42);
        assert_eq!(cfg.training.seed, 42);
        assert_eq!(cfg.pretrain.seed, 42);
        assert_eq!(cfg.ensemble.seed, 42);
        assert_eq!(cfg.landscape.seed, 42);
    }
}
