//! Model pools and gamma tuning.

use rayon::prelude::*;

use crate::data::DatasetSplit;
use crate::error::{Error, Result};
use crate::nn::ArchitectureDescriptor;

use super::{train_model, InitMode, ModelCheckpoint, TrainConfig};

/// How every member of a pool is initialized.
#[derive(Debug, Clone, Copy)]
pub enum PoolInit<'a> {
    /// Member i draws fresh weights from seed base_seed + i.
    Random,
    /// Every member starts from the same pretrained encoder; seeds vary only
    /// the data shuffling.
    Pretrained(&'a ModelCheckpoint),
}

#[derive(Debug, Clone)]
pub struct PoolMember {
    pub index: usize,
    pub last: ModelCheckpoint,
    pub best: ModelCheckpoint,
}

#[derive(Debug, Clone)]
pub struct PoolResult {
    /// Successful runs, ordered by model index.
    pub members: Vec<PoolMember>,
    pub failures: Vec<(usize, String)>,
}

/// Trains `n_models` models; member i uses seed `cfg_template.seed + i`.
/// Individual failures are recorded; more than 10% failures is an error.
pub fn train_pool(
    cfg_template: &TrainConfig,
    data: &DatasetSplit,
    arch: &ArchitectureDescriptor,
    n_models: usize,
    init: PoolInit<'_>,
) -> Result<PoolResult> {
    if n_models == 0 {
        return Err(Error::Config("train_pool: n_models must be >= 1".into()));
    }
    cfg_template.validate()?;

    let runs: Vec<(usize, Result<super::TrainOutcome>)> = (0..n_models)
        .into_par_iter()
        .map(|i| {
            let mut cfg = cfg_template.clone();
            cfg.seed = cfg_template.seed + i as u64;
            let init_mode = match init {
                PoolInit::Random => InitMode::Random { seed: cfg.seed },
                PoolInit::Pretrained(cp) => InitMode::Pretrained(cp),
            };
            (i, train_model(&cfg, data, arch, init_mode))
        })
        .collect();

    let mut members = Vec::with_capacity(n_models);
    let mut failures = Vec::new();
    for (index, run) in runs {
        match run {
            Ok(out) => members.push(PoolMember {
                index,
                last: out.last,
                best: out.best,
            }),
            Err(e) => failures.push((index, e.to_string())),
        }
    }
    if failures.len() as f64 > 0.1 * n_models as f64 {
        return Err(Error::Training(format!(
            "{} of {} pool runs failed: {:?}",
            failures.len(),
            n_models,
            failures
        )));
    }
    Ok(PoolResult { members, failures })
}

#[derive(Debug, Clone)]
pub struct GammaCell {
    pub gamma: f64,
    pub best_val_auc: Option<f64>,
    pub best_epoch: Option<usize>,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct GammaReport {
    /// One row per grid value, in grid order.
    pub cells: Vec<GammaCell>,
    pub best_gamma: f64,
}

/// Trains one model per gamma on the same seed and picks the gamma with the
/// highest best-epoch validation AUC (ties go to the smaller gamma). Failed
/// cells are excluded; all cells failing is an error.
pub fn tune_gamma(
    cfg_template: &TrainConfig,
    data: &DatasetSplit,
    arch: &ArchitectureDescriptor,
    init: InitMode<'_>,
    gamma_grid: &[f64],
) -> Result<GammaReport> {
    if gamma_grid.is_empty() {
        return Err(Error::Config("tune_gamma: empty gamma grid".into()));
    }
    let cells: Vec<GammaCell> = gamma_grid
        .par_iter()
        .map(|&gamma| {
            let mut cfg = cfg_template.clone();
            cfg.gamma = gamma;
            match train_model(&cfg, data, arch, init) {
                Ok(out) => GammaCell {
                    gamma,
                    best_val_auc: Some(out.best.val_auc_at_save),
                    best_epoch: Some(out.best.epoch),
                    error: None,
                },
                Err(e) => GammaCell {
                    gamma,
                    best_val_auc: None,
                    best_epoch: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();

    let best = cells
        .iter()
        .filter(|c| c.best_val_auc.is_some())
        .max_by(|a, b| {
            let (sa, sb) = (a.best_val_auc.unwrap(), b.best_val_auc.unwrap());
            // higher AUC wins; on ties the smaller gamma wins
            sa.partial_cmp(&sb)
                .unwrap()
                .then(b.gamma.partial_cmp(&a.gamma).unwrap())
        });
    match best {
        Some(cell) => Ok(GammaReport {
            best_gamma: cell.gamma,
            cells,
        }),
        None => Err(Error::Training(format!(
            "every gamma cell failed: {:?}",
            cells
                .iter()
                .filter_map(|c| c.error.clone())
                .collect::<Vec<_>>()
        ))),
    }
}
