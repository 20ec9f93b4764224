//! Seeded training harness.
//!
//! Every run is a pure function of (config, data, init): weight
//! initialization, per-epoch shuffles, and optimizer arithmetic are all
//! seeded and evaluated in a fixed order, so repeat runs emit bit-identical
//! checkpoints. A run yields two checkpoints: the final-epoch weights
//! (`last`) and the weights at the epoch with the highest validation ROC-AUC
//! (`best`, earliest epoch on ties).
//!
//! Seed substreams: `substream(seed, epoch)` drives epoch `epoch`'s shuffle
//! and `substream(seed, 1_000_000)` draws the random initialization.

mod optimizer;
mod pool;
mod pretrain;

pub use optimizer::OptimizerSpec;
pub use pool::{train_pool, tune_gamma, GammaCell, GammaReport, PoolInit, PoolMember, PoolResult};
pub use pretrain::{pretrain, PretextEpochRecord, PretrainOutcome};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::DatasetSplit;
use crate::error::{Error, Result};
use crate::metrics::roc_auc;
use crate::nn::{
    forward, loss_and_gradient, Activation, ArchitectureDescriptor, FlatWeights, LossKind,
};
use crate::rng;

/// The learning rate is multiplied by gamma after every block of this many
/// epochs.
pub const DECAY_PERIOD_EPOCHS: usize = 10;

/// Substream index reserved for weight initialization (epoch shuffles use
/// indices 0..epochs).
const INIT_STREAM: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: OptimizerSpec,
    /// Step-decay factor applied every [`DECAY_PERIOD_EPOCHS`] epochs.
    pub gamma: f64,
    pub seed: u64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Config(format!(
                "gamma must lie strictly inside (0,1), got {}",
                self.gamma
            )));
        }
        self.optimizer.validate()
    }
}

/// lr0 * gamma^floor(epoch / 10).
pub fn lr_at_epoch(lr0: f64, gamma: f64, epoch: usize) -> f64 {
    lr0 * gamma.powi((epoch / DECAY_PERIOD_EPOCHS) as i32)
}

/// Where a model's starting weights came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Lineage {
    RandomInit { seed: u64 },
    Transfer { pretrain_id: String },
}

impl Lineage {
    /// Short tag used in model ids and manifests: "ri" or "tl".
    pub fn short_tag(&self) -> &'static str {
        match self {
            Lineage::RandomInit { .. } => "ri",
            Lineage::Transfer { .. } => "tl",
        }
    }

    pub fn pretrain_id(&self) -> Option<&str> {
        match self {
            Lineage::Transfer { pretrain_id } => Some(pretrain_id),
            Lineage::RandomInit { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckpointTag {
    Last,
    Best,
}

impl std::fmt::Display for CheckpointTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CheckpointTag::Last => write!(f, "last"),
            CheckpointTag::Best => write!(f, "best"),
        }
    }
}

/// A trained model snapshot with its lineage and provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelCheckpoint {
    pub arch: ArchitectureDescriptor,
    pub weights: FlatWeights,
    pub lineage: Lineage,
    pub epoch: usize,
    pub tag: CheckpointTag,
    /// Validation score at the saved epoch: ROC-AUC for classifiers, R^2 for
    /// the pretext encoder emitted by [`pretrain`].
    pub val_auc_at_save: f64,
    pub train_config_digest: String,
    pub task_id: String,
}

/// Identifier under which a pretext encoder is referenced by TL lineages.
pub fn pretrain_id_of(checkpoint: &ModelCheckpoint) -> Result<String> {
    if !checkpoint.task_id.starts_with("pretext/") {
        return Err(Error::Config(format!(
            "checkpoint with task \"{}\" is not a pretext encoder",
            checkpoint.task_id
        )));
    }
    Ok(format!("pt-{}", &checkpoint.train_config_digest[..12]))
}

/// Starting point of a training run.
#[derive(Debug, Clone, Copy)]
pub enum InitMode<'a> {
    Random { seed: u64 },
    Pretrained(&'a ModelCheckpoint),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_auc: f64,
    pub lr: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub last: ModelCheckpoint,
    pub best: ModelCheckpoint,
    pub history: TrainHistory,
}

/// Digest binding a checkpoint to the exact run that produced it.
fn config_digest(
    cfg: &TrainConfig,
    arch: &ArchitectureDescriptor,
    init_desc: &str,
    objective: &str,
) -> String {
    let payload = format!(
        "{}|{}|{}|{}",
        serde_json::to_string(cfg).expect("config serializes"),
        serde_json::to_string(arch).expect("arch serializes"),
        init_desc,
        objective
    );
    let digest = Sha256::digest(payload.as_bytes());
    let mut hex = String::with_capacity(32);
    for byte in digest.iter().take(16) {
        hex.push_str(&format!("{byte:02x}"));
    }
    hex
}

/// Initial weight vector for a run: He-style Gaussian fan-in scaling for
/// relu, Xavier-style for tanh, biases zero; or an exact copy of the
/// pretrained weights.
pub fn initial_weights(
    arch: &ArchitectureDescriptor,
    init: &InitMode<'_>,
) -> Result<FlatWeights> {
    match init {
        InitMode::Random { seed } => {
            let mut rng = rng::substream(*seed, INIT_STREAM);
            let mut values = vec![0.0f32; arch.param_count()];
            for span in crate::nn::layer_spans(arch) {
                let std = match arch.activation() {
                    Activation::Relu => (2.0 / span.fan_in as f64).sqrt(),
                    Activation::Tanh => (1.0 / span.fan_in as f64).sqrt(),
                };
                for v in values[span.weight_start..span.bias_start].iter_mut() {
                    *v = (rng::standard_normal(&mut rng) * std) as f32;
                }
                // biases stay zero
            }
            Ok(FlatWeights::new(values))
        }
        InitMode::Pretrained(cp) => Ok(cp.weights.clone()),
    }
}

/// Trains a classifier, returning the last-epoch and best-validation-epoch
/// checkpoints plus the per-epoch history.
pub fn train_model(
    cfg: &TrainConfig,
    data: &DatasetSplit,
    arch: &ArchitectureDescriptor,
    init: InitMode<'_>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    arch.validate()?;
    if data.train.batch.input_dim() != arch.input_dim() {
        return Err(Error::Shape(format!(
            "training data width {} does not match architecture input_dim {}",
            data.train.batch.input_dim(),
            arch.input_dim()
        )));
    }
    let (lineage, init_desc) = match &init {
        InitMode::Random { seed } => (
            Lineage::RandomInit { seed: *seed },
            format!("random:{seed}"),
        ),
        InitMode::Pretrained(cp) => {
            if cp.arch != *arch {
                return Err(Error::Shape(
                    "pretrained checkpoint architecture differs from requested architecture"
                        .into(),
                ));
            }
            let id = pretrain_id_of(cp)?;
            (
                Lineage::Transfer {
                    pretrain_id: id.clone(),
                },
                format!("transfer:{id}"),
            )
        }
    };

    let mut weights = initial_weights(arch, &init)?;
    let run = run_epochs(cfg, data, arch, &mut weights, LossKind::Bce, |w| {
        let probs = forward(arch, w, &data.validation.batch)?;
        roc_auc(&probs, data.validation.batch.labels())
    })?;

    let digest = config_digest(cfg, arch, &init_desc, "bce");
    let task_id = data.metadata.task_id.clone();
    let last = ModelCheckpoint {
        arch: arch.clone(),
        weights,
        lineage: lineage.clone(),
        epoch: cfg.epochs - 1,
        tag: CheckpointTag::Last,
        val_auc_at_save: run.history.epochs[cfg.epochs - 1].val_auc,
        train_config_digest: digest.clone(),
        task_id: task_id.clone(),
    };
    let best = ModelCheckpoint {
        arch: arch.clone(),
        weights: run.best_weights,
        lineage,
        epoch: run.best_epoch,
        tag: CheckpointTag::Best,
        val_auc_at_save: run.best_score,
        train_config_digest: digest,
        task_id,
    };
    Ok(TrainOutcome {
        last,
        best,
        history: run.history,
    })
}

pub(crate) struct EpochRun {
    pub history: TrainHistory,
    pub best_weights: FlatWeights,
    pub best_epoch: usize,
    pub best_score: f64,
}

/// Shared epoch loop. `val_score` is "higher is better"; the caller decides
/// what it measures.
pub(crate) fn run_epochs(
    cfg: &TrainConfig,
    data: &DatasetSplit,
    arch: &ArchitectureDescriptor,
    weights: &mut FlatWeights,
    loss: LossKind,
    mut val_score: impl FnMut(&FlatWeights) -> Result<f64>,
) -> Result<EpochRun> {
    let n_train = data.train.batch.len();
    let mut state = cfg.optimizer.state(arch.param_count());
    let mut history = TrainHistory::default();
    let mut best_weights = weights.clone();
    let mut best_epoch = 0usize;
    let mut best_score = f64::NEG_INFINITY;

    let mut order: Vec<usize> = (0..n_train).collect();
    for epoch in 0..cfg.epochs {
        let lr = lr_at_epoch(cfg.optimizer.lr0(), cfg.gamma, epoch);
        let mut shuffle_rng = rng::substream(cfg.seed, epoch as u64);
        order.sort_unstable();
        rng::shuffle(&mut shuffle_rng, &mut order);

        let mut loss_weighted_sum = 0.0f64;
        for chunk in order.chunks(cfg.batch_size) {
            let batch = data.train.batch.select(chunk);
            let (batch_loss, grad) = loss_and_gradient(arch, weights, &batch, loss)?;
            if !batch_loss.is_finite() {
                return Err(Error::Training(format!(
                    "non-finite loss at epoch {epoch}; run aborted, no checkpoints emitted"
                )));
            }
            loss_weighted_sum += batch_loss * chunk.len() as f64;
            state.step(lr, weights.values_mut(), &grad);
        }

        let score = val_score(weights)?;
        history.epochs.push(EpochRecord {
            epoch,
            train_loss: loss_weighted_sum / n_train as f64,
            val_auc: score,
            lr,
        });
        if score > best_score {
            best_score = score;
            best_epoch = epoch;
            best_weights = weights.clone();
        }
    }
    Ok(EpochRun {
        history,
        best_weights,
        best_epoch,
        best_score,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate, SyntheticConfig};

    pub(crate) fn small_data(seed: u64) -> DatasetSplit {
        generate(&SyntheticConfig {
            n_subjects: 320,
            n_sites: 4,
            input_dim: 6,
            class_separation: 1.5,
            site_effect_scale: 0.4,
            auxiliary_effect_scale: 0.8,
            label_balance: 0.5,
            seed,
        })
        .unwrap()
    }

    pub(crate) fn small_arch() -> ArchitectureDescriptor {
        ArchitectureDescriptor::new(6, vec![8, 4], Activation::Relu).unwrap()
    }

    pub(crate) fn quick_cfg(epochs: usize, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs,
            batch_size: 32,
            optimizer: OptimizerSpec::Adam {
                lr0: 1e-3,
                beta1: 0.9,
                beta2: 0.999,
                eps: 1e-8,
            },
            gamma: 0.4,
            seed,
        }
    }

    #[test]
    fn lr_schedule_closed_forms() {
        assert_eq!(lr_at_epoch(0.05, 0.3, 0), 0.05);
        assert_eq!(lr_at_epoch(1e-3, 0.2, 10), 2e-4);
        let lr = lr_at_epoch(1e-3, 0.4, 25);
        assert!((lr - 1.6e-4).abs() < 1e-19, "{lr}");
    }

    #[test]
    fn one_epoch_makes_last_equal_best() {
        let data = small_data(1);
        let out = train_model(
            &quick_cfg(1, 5),
            &data,
            &small_arch(),
            InitMode::Random { seed: 5 },
        )
        .unwrap();
        assert_eq!(out.last.epoch, 0);
        assert_eq!(out.best.epoch, 0);
        assert!(out.last.weights.bits_eq(&out.best.weights));
        assert_eq!(out.last.tag, CheckpointTag::Last);
        assert_eq!(out.best.tag, CheckpointTag::Best);
    }

    #[test]
    fn repeat_runs_are_bitwise_identical() {
        let data = small_data(2);
        let cfg = quick_cfg(5, 9);
        let a = train_model(&cfg, &data, &small_arch(), InitMode::Random { seed: 9 }).unwrap();
        let b = train_model(&cfg, &data, &small_arch(), InitMode::Random { seed: 9 }).unwrap();
        assert!(a.last.weights.bits_eq(&b.last.weights));
        assert!(a.best.weights.bits_eq(&b.best.weights));
        assert_eq!(a.history, b.history);
    }

    #[test]
    fn history_follows_the_schedule_exactly() {
        let data = small_data(3);
        let cfg = quick_cfg(25, 4);
        let out = train_model(&cfg, &data, &small_arch(), InitMode::Random { seed: 4 }).unwrap();
        assert_eq!(out.history.epochs.len(), 25);
        for (e, rec) in out.history.epochs.iter().enumerate() {
            assert_eq!(rec.epoch, e);
            assert_eq!(
                rec.lr.to_bits(),
                lr_at_epoch(cfg.optimizer.lr0(), cfg.gamma, e).to_bits()
            );
        }
    }

    #[test]
    fn best_epoch_dominates_history() {
        let data = small_data(4);
        let out = train_model(
            &quick_cfg(15, 11),
            &data,
            &small_arch(),
            InitMode::Random { seed: 11 },
        )
        .unwrap();
        for rec in &out.history.epochs {
            assert!(out.best.val_auc_at_save >= rec.val_auc);
        }
        // earliest epoch wins ties: no earlier epoch may match the best score
        let first_max = out
            .history
            .epochs
            .iter()
            .find(|r| r.val_auc == out.best.val_auc_at_save)
            .unwrap();
        assert_eq!(first_max.epoch, out.best.epoch);
    }

    #[test]
    fn separable_task_reaches_high_validation_auc() {
        let data = generate(&SyntheticConfig {
            n_subjects: 1200,
            n_sites: 6,
            input_dim: 16,
            class_separation: 2.0,
            site_effect_scale: 0.5,
            auxiliary_effect_scale: 1.0,
            label_balance: 0.5,
            seed: 0,
        })
        .unwrap();
        let arch = ArchitectureDescriptor::new(16, vec![16, 8], Activation::Relu).unwrap();
        let out = train_model(
            &quick_cfg(60, 10),
            &data,
            &arch,
            InitMode::Random { seed: 10 },
        )
        .unwrap();
        assert!(
            out.best.val_auc_at_save >= 0.9,
            "best validation AUC {}",
            out.best.val_auc_at_save
        );
    }

    #[test]
    fn rejects_mismatched_input_dim() {
        let data = small_data(1);
        let arch = ArchitectureDescriptor::new(7, vec![4], Activation::Relu).unwrap();
        assert!(matches!(
            train_model(&quick_cfg(1, 0), &data, &arch, InitMode::Random { seed: 0 }),
            Err(Error::Shape(_))
        ));
    }
}
