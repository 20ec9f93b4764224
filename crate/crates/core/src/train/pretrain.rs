//! Weak-supervision pretext: regress the auxiliary covariate with a linear
//! head on top of the encoder, then discard the head.

use crate::data::DatasetSplit;
use crate::error::{Error, Result};
use crate::nn::{forward_logits, ArchitectureDescriptor, LossKind};

use super::{
    config_digest, initial_weights, run_epochs, CheckpointTag, InitMode, Lineage,
    ModelCheckpoint, TrainConfig,
};

#[derive(Debug, Clone, PartialEq)]
pub struct PretextEpochRecord {
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mse: f64,
    pub lr: f64,
}

#[derive(Debug, Clone)]
pub struct PretrainOutcome {
    /// Final-epoch encoder with the classification head zero-initialized.
    pub checkpoint: ModelCheckpoint,
    pub pretrain_id: String,
    pub val_mse: f64,
    /// 1 - val_mse / var(validation auxiliary).
    pub val_r2: f64,
    pub history: Vec<PretextEpochRecord>,
}

/// Trains encoder + regression head on the auxiliary covariate with MSE,
/// zeroes the head, and emits the result as a pretext checkpoint whose id
/// TL lineages reference.
pub fn pretrain(
    cfg: &TrainConfig,
    data: &DatasetSplit,
    arch: &ArchitectureDescriptor,
) -> Result<PretrainOutcome> {
    cfg.validate()?;
    arch.validate()?;
    if data.train.batch.input_dim() != arch.input_dim() {
        return Err(Error::Shape(format!(
            "pretext data width {} does not match architecture input_dim {}",
            data.train.batch.input_dim(),
            arch.input_dim()
        )));
    }

    let init = InitMode::Random { seed: cfg.seed };
    let mut weights = initial_weights(arch, &init)?;
    let val = &data.validation.batch;
    // run_epochs maximizes its score; feed it negated MSE
    let run = run_epochs(cfg, data, arch, &mut weights, LossKind::Pretext, |w| {
        let preds = forward_logits(arch, w, val)?;
        let mut mse = 0.0f64;
        for (&p, &a) in preds.iter().zip(val.auxiliary()) {
            let d = p - a as f64;
            mse += d * d;
        }
        Ok(-(mse / preds.len() as f64))
    })?;

    let val_mse = -run.history.epochs[cfg.epochs - 1].val_auc;
    let aux_mean =
        val.auxiliary().iter().map(|&a| a as f64).sum::<f64>() / val.len() as f64;
    let aux_var = val
        .auxiliary()
        .iter()
        .map(|&a| (a as f64 - aux_mean) * (a as f64 - aux_mean))
        .sum::<f64>()
        / val.len() as f64;
    let val_r2 = 1.0 - val_mse / aux_var;

    // discard the regression head: zero the final layer weights and bias
    let head_span = *crate::nn::layer_spans(arch)
        .last()
        .expect("architecture has at least one layer");
    for v in weights.values_mut()[head_span.weight_start..].iter_mut() {
        *v = 0.0;
    }

    let digest = config_digest(cfg, arch, &format!("random:{}", cfg.seed), "pretext");
    let checkpoint = ModelCheckpoint {
        arch: arch.clone(),
        weights,
        lineage: Lineage::RandomInit { seed: cfg.seed },
        epoch: cfg.epochs - 1,
        tag: CheckpointTag::Last,
        val_auc_at_save: val_r2,
        train_config_digest: digest,
        task_id: format!("pretext/{}", data.metadata.task_id),
    };
    let pretrain_id = super::pretrain_id_of(&checkpoint)?;

    let history = run
        .history
        .epochs
        .iter()
        .map(|r| PretextEpochRecord {
            epoch: r.epoch,
            train_mse: r.train_loss,
            val_mse: -r.val_auc,
            lr: r.lr,
        })
        .collect();

    Ok(PretrainOutcome {
        checkpoint,
        pretrain_id,
        val_mse,
        val_r2,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::super::tests::{quick_cfg, small_arch};
    use super::*;
    use crate::data::{generate, SyntheticConfig};
    use crate::nn::layer_spans;

    fn data_with_aux(aux_scale: f64, seed: u64) -> DatasetSplit {
        generate(&SyntheticConfig {
            n_subjects: 600,
            n_sites: 4,
            input_dim: 6,
            class_separation: 1.2,
            site_effect_scale: 0.4,
            auxiliary_effect_scale: aux_scale,
            label_balance: 0.5,
            seed,
        })
        .unwrap()
    }

    #[test]
    fn same_seed_gives_identical_pretrained_weights() {
        let data = data_with_aux(1.0, 5);
        let cfg = quick_cfg(8, 21);
        let a = pretrain(&cfg, &data, &small_arch()).unwrap();
        let b = pretrain(&cfg, &data, &small_arch()).unwrap();
        assert!(a.checkpoint.weights.bits_eq(&b.checkpoint.weights));
        assert_eq!(a.pretrain_id, b.pretrain_id);
    }

    #[test]
    fn classification_head_is_zeroed() {
        let data = data_with_aux(1.0, 6);
        let out = pretrain(&quick_cfg(5, 3), &data, &small_arch()).unwrap();
        let arch = small_arch();
        let head = *layer_spans(&arch).last().unwrap();
        let values = out.checkpoint.weights.values();
        assert!(values[head.weight_start..].iter().all(|&v| v == 0.0));
        // encoder is not all zeros
        assert!(values[..head.weight_start].iter().any(|&v| v != 0.0));
        assert!(out.checkpoint.task_id.starts_with("pretext/"));
    }

    #[test]
    fn no_signal_auxiliary_mse_approaches_its_variance() {
        // with auxiliary_effect_scale = 0 there is nothing to learn; the
        // validation MSE should sit near var(auxiliary). gamma 0.2 decays the
        // LR fast enough that the encoder cannot overfit its way far above it.
        let data = generate(&SyntheticConfig {
            n_subjects: 1200,
            n_sites: 6,
            input_dim: 16,
            class_separation: 1.6,
            site_effect_scale: 0.5,
            auxiliary_effect_scale: 0.0,
            label_balance: 0.5,
            seed: 7,
        })
        .unwrap();
        let arch = ArchitectureDescriptor::new(16, vec![16, 8], crate::nn::Activation::Relu)
            .unwrap();
        let mut cfg = quick_cfg(30, 13);
        cfg.gamma = 0.2;
        let out = pretrain(&cfg, &data, &arch).unwrap();
        let val = &data.validation.batch;
        let mean = val.auxiliary().iter().map(|&a| a as f64).sum::<f64>() / val.len() as f64;
        let var = val
            .auxiliary()
            .iter()
            .map(|&a| (a as f64 - mean) * (a as f64 - mean))
            .sum::<f64>()
            / val.len() as f64;
        let ratio = out.val_mse / var;
        assert!(
            (ratio - 1.0).abs() < 0.20,
            "val mse {} vs aux variance {var}",
            out.val_mse
        );
    }

    #[test]
    fn strong_auxiliary_signal_is_learned() {
        let data = data_with_aux(1.5, 8);
        let mut cfg = quick_cfg(60, 17);
        cfg.gamma = 0.8;
        let out = pretrain(&cfg, &data, &small_arch()).unwrap();
        assert!(out.val_r2 > 0.5, "val R^2 {}", out.val_r2);
    }
}
