//! `train-pool`: dataset, pretraining, both model pools, checkpoints,
//! manifest.

use std::path::{Path, PathBuf};

use basinlab::checkpoint::save_checkpoint;
use basinlab::config::ExperimentConfig;
use basinlab::data::{write_split_csv, DatasetSplit};
use basinlab::error::Result;
use basinlab::train::{
    pretrain, train_pool, ModelCheckpoint, PoolInit, PoolResult, PretrainOutcome, TrainConfig,
};

use crate::manifest::{write_manifest, ManifestRow};

use super::load_dataset;

#[derive(Debug)]
pub struct TrainPoolArtifacts {
    pub manifest_path: PathBuf,
    pub rows: Vec<ManifestRow>,
    pub pretrain_id: String,
    pub n_failures: usize,
}

pub fn cmd_train_pool(cfg: &ExperimentConfig) -> Result<TrainPoolArtifacts> {
    let data = load_dataset(cfg)?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    write_split_csv(&cfg.output_dir.join("dataset"), &data)?;
    let pre = run_pretrain_stage(cfg, &data)?;
    let gamma = cfg.training.gamma;
    run_pool_stage(cfg, &data, &pre, gamma, gamma)
}

/// Pretrains the shared encoder and saves it as `pretrained.bpck`.
pub(super) fn run_pretrain_stage(
    cfg: &ExperimentConfig,
    data: &DatasetSplit,
) -> Result<PretrainOutcome> {
    let arch = cfg.arch()?;
    let pre = pretrain(&cfg.pretrain_config(), data, &arch)?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    save_checkpoint(&pre.checkpoint, &cfg.output_dir.join("pretrained.bpck"))?;
    Ok(pre)
}

/// Trains both pools (gamma may differ per lineage after tuning), writes the
/// 4N checkpoints and the manifest.
pub(super) fn run_pool_stage(
    cfg: &ExperimentConfig,
    data: &DatasetSplit,
    pre: &PretrainOutcome,
    gamma_ri: f64,
    gamma_tl: f64,
) -> Result<TrainPoolArtifacts> {
    let arch = cfg.arch()?;
    let n = cfg.training.n_models;
    let ckpt_dir = cfg.output_dir.join("checkpoints");
    std::fs::create_dir_all(&ckpt_dir)?;

    let template = |gamma: f64| -> TrainConfig {
        let mut t = cfg.train_config();
        t.gamma = gamma;
        t
    };
    let ri = train_pool(&template(gamma_ri), data, &arch, n, PoolInit::Random)?;
    let tl = train_pool(
        &template(gamma_tl),
        data,
        &arch,
        n,
        PoolInit::Pretrained(&pre.checkpoint),
    )?;

    let mut rows = Vec::with_capacity(4 * n);
    let mut save = |lineage: &str, index: usize, tag: &str, cp: &ModelCheckpoint| -> Result<()> {
        let file = format!("{lineage}-{index:02}-{tag}.bpck");
        save_checkpoint(cp, &ckpt_dir.join(&file))?;
        rows.push(ManifestRow {
            model_id: format!("{lineage}-{index:02}-{tag}"),
            path: Path::new("checkpoints").join(file),
            lineage: lineage.to_string(),
            tag: tag.to_string(),
            model_index: index,
            val_auc: cp.val_auc_at_save,
            pretrain_id: cp.lineage.pretrain_id().unwrap_or("").to_string(),
            task_id: cp.task_id.clone(),
        });
        Ok(())
    };
    let mut emit = |lineage: &str, pool: &PoolResult| -> Result<()> {
        for m in &pool.members {
            save(lineage, m.index, "last", &m.last)?;
            save(lineage, m.index, "best", &m.best)?;
        }
        Ok(())
    };
    emit("ri", &ri)?;
    emit("tl", &tl)?;

    let manifest_path = cfg.output_dir.join("manifest.csv");
    write_manifest(&manifest_path, &rows)?;
    Ok(TrainPoolArtifacts {
        manifest_path,
        rows,
        pretrain_id: pre.pretrain_id.clone(),
        n_failures: ri.failures.len() + tl.failures.len(),
    })
}
