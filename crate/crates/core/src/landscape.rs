//! Weight-space linear interpolation and barrier analysis.
//!
//! For a pair of compatible checkpoints the barrier curve evaluates test
//! ROC-AUC (and BCE loss) at `n_lambda` uniformly spaced mixing coefficients
//! including both endpoints. The barrier height is the largest drop of the
//! curve below the straight line between the endpoint AUCs, floored at zero.
//! A pair of models with no barrier between them sits in a single basin of
//! the loss landscape; the scenario experiment compares how often that holds
//! for transfer-initialized pairs versus randomly initialized pairs.
//!
//! Endpoints are exact: at the boundary coefficients the original weight
//! vectors are returned bit-for-bit, never recomputed, and identical input
//! vectors propagate unchanged at every coefficient. Interior coefficients
//! are formed as the pair (k/(n-1), (n-1-k)/(n-1)) so that reversing the
//! endpoints reverses the curve bitwise.

use rayon::prelude::*;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::roc_auc;
use crate::nn::{forward, loss_bce, Batch, FlatWeights};
use crate::rng;
use crate::train::{ModelCheckpoint, PoolMember};

/// Which experiment a barrier curve belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Two transfer-learned models sharing the same pretrained encoder,
    /// both at their last epoch.
    TlTl,
    /// Two randomly initialized models at their last epoch.
    RiRi,
    /// One transfer-learned model: last epoch vs best-validation epoch.
    TlTlStar,
    /// One randomly initialized model: last epoch vs best-validation epoch.
    RiRiStar,
    Custom,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::TlTl => "tl_tl",
            Scenario::RiRi => "ri_ri",
            Scenario::TlTlStar => "tl_tlstar",
            Scenario::RiRiStar => "ri_ristar",
            Scenario::Custom => "custom",
        }
    }
}

/// ROC-AUC (and BCE loss) along the interpolation path between two
/// checkpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct BarrierCurve {
    pub lambda_grid: Vec<f64>,
    pub auc_at_lambda: Vec<f64>,
    pub bce_at_lambda: Vec<f64>,
    pub endpoint_ids: (String, String),
    pub scenario: Scenario,
    pub barrier_height: f64,
}

/// Element-wise (1-lambda) * w1 + lambda * w2 with exact endpoints.
///
/// lambda = 0 returns `w1` and lambda = 1 returns `w2` bit-for-bit, and
/// identical inputs are returned unchanged for every lambda. Values outside
/// [0,1] are rejected (extrapolation is out of scope).
pub fn interpolate_weights(w1: &FlatWeights, w2: &FlatWeights, lambda: f64) -> Result<FlatWeights> {
    if w1.len() != w2.len() {
        return Err(Error::Shape(format!(
            "interpolate_weights: {} vs {} parameters",
            w1.len(),
            w2.len()
        )));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Config(format!(
            "interpolation coefficient must lie in [0,1], got {lambda}"
        )));
    }
    if lambda == 0.0 || w1.bits_eq(w2) {
        return Ok(w1.clone());
    }
    if lambda == 1.0 {
        return Ok(w2.clone());
    }
    Ok(affine_combine(w1, w2, 1.0 - lambda, lambda))
}

fn affine_combine(w1: &FlatWeights, w2: &FlatWeights, c1: f64, c2: f64) -> FlatWeights {
    FlatWeights::new(
        w1.values()
            .iter()
            .zip(w2.values())
            .map(|(&a, &b)| (c1 * a as f64 + c2 * b as f64) as f32)
            .collect(),
    )
}

/// The interpolated weight vectors at an n-point uniform grid on [0,1].
fn path_weights(w1: &FlatWeights, w2: &FlatWeights, n_lambda: usize) -> Vec<FlatWeights> {
    let last = n_lambda - 1;
    (0..n_lambda)
        .map(|k| {
            if k == 0 || w1.bits_eq(w2) {
                w1.clone()
            } else if k == last {
                w2.clone()
            } else {
                // paired coefficients keep reversed curves bitwise mirrored
                let c2 = k as f64 / last as f64;
                let c1 = (last - k) as f64 / last as f64;
                affine_combine(w1, w2, c1, c2)
            }
        })
        .collect()
}

/// Largest drop below the straight line between the endpoint AUCs, floored
/// at zero. Equal endpoints use that value directly as the baseline, so a
/// flat curve yields exactly zero.
pub fn barrier_height(curve: &BarrierCurve) -> f64 {
    barrier_height_raw(&curve.lambda_grid, &curve.auc_at_lambda)
}

fn barrier_height_raw(lambda_grid: &[f64], aucs: &[f64]) -> f64 {
    let first = aucs[0];
    let last = *aucs.last().unwrap();
    let mut max_drop = 0.0f64;
    for (&lambda, &auc) in lambda_grid.iter().zip(aucs) {
        let baseline = if first.to_bits() == last.to_bits() {
            first
        } else {
            (1.0 - lambda) * first + lambda * last
        };
        max_drop = max_drop.max(baseline - auc);
    }
    max_drop
}

/// Evaluates the interpolation path between two checkpoints on an evaluation
/// batch. The checkpoints must share an architecture and a task.
pub fn barrier_curve(
    c1: &ModelCheckpoint,
    c2: &ModelCheckpoint,
    eval: &Batch,
    n_lambda: usize,
) -> Result<BarrierCurve> {
    barrier_curve_tagged(c1, c2, eval, n_lambda, Scenario::Custom, default_ids(c1, c2))
}

fn default_ids(c1: &ModelCheckpoint, c2: &ModelCheckpoint) -> (String, String) {
    (
        format!("{}-{}", c1.lineage.short_tag(), c1.tag),
        format!("{}-{}", c2.lineage.short_tag(), c2.tag),
    )
}

fn barrier_curve_tagged(
    c1: &ModelCheckpoint,
    c2: &ModelCheckpoint,
    eval: &Batch,
    n_lambda: usize,
    scenario: Scenario,
    endpoint_ids: (String, String),
) -> Result<BarrierCurve> {
    if c1.arch != c2.arch {
        return Err(Error::Shape(
            "checkpoints are interpolation-incompatible: architecture descriptors differ".into(),
        ));
    }
    if c1.task_id != c2.task_id {
        return Err(Error::Config(format!(
            "checkpoints belong to different tasks: \"{}\" vs \"{}\"",
            c1.task_id, c2.task_id
        )));
    }
    if n_lambda < 2 {
        return Err(Error::Config("n_lambda must be >= 2".into()));
    }

    let last = n_lambda - 1;
    let lambda_grid: Vec<f64> = (0..n_lambda).map(|k| k as f64 / last as f64).collect();
    let weights = path_weights(&c1.weights, &c2.weights, n_lambda);
    let evals: Vec<(f64, f64)> = weights
        .par_iter()
        .map(|w| {
            let probs = forward(&c1.arch, w, eval)?;
            let auc = roc_auc(&probs, eval.labels())?;
            let bce = loss_bce(&probs, eval.labels())?;
            Ok((auc, bce))
        })
        .collect::<Result<_>>()?;
    let auc_at_lambda: Vec<f64> = evals.iter().map(|e| e.0).collect();
    let bce_at_lambda: Vec<f64> = evals.iter().map(|e| e.1).collect();

    let height = barrier_height_raw(&lambda_grid, &auc_at_lambda);
    Ok(BarrierCurve {
        lambda_grid,
        auc_at_lambda,
        bce_at_lambda,
        endpoint_ids,
        scenario,
        barrier_height: height,
    })
}

/// All barrier curves of one scenario with their median barrier height.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub scenario: Scenario,
    pub curves: Vec<BarrierCurve>,
    pub median_barrier: f64,
}

/// The four-scenario interpolation experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioReport {
    /// Order: TlTl, RiRi, TlTlStar, RiRiStar.
    pub scenarios: Vec<ScenarioResult>,
}

impl ScenarioReport {
    pub fn result(&self, scenario: Scenario) -> Option<&ScenarioResult> {
        self.scenarios.iter().find(|s| s.scenario == scenario)
    }
}

/// Runs the four scenarios over checkpoint pools.
///
/// TlTl pairs two distinct TL last-epoch checkpoints (all TL members must
/// share one pretrained encoder); RiRi pairs two distinct RI last-epoch
/// checkpoints; the star scenarios pair each model's last epoch with its own
/// best epoch. `pairs_per_scenario` pairs are drawn uniformly without
/// replacement from each scenario's candidates using substream
/// `(seed, scenario index)`.
pub fn run_scenarios(
    tl_pool: &[PoolMember],
    ri_pool: &[PoolMember],
    eval: &Batch,
    pairs_per_scenario: usize,
    n_lambda: usize,
    seed: u64,
) -> Result<ScenarioReport> {
    if pairs_per_scenario == 0 {
        return Err(Error::Config("pairs_per_scenario must be >= 1".into()));
    }
    let tl_ids: Vec<Option<&str>> = tl_pool
        .iter()
        .map(|m| m.last.lineage.pretrain_id())
        .collect();
    if tl_ids.iter().any(|id| id.is_none()) {
        return Err(Error::Config(
            "tl pool contains a checkpoint without transfer lineage".into(),
        ));
    }
    if tl_ids.windows(2).any(|w| w[0] != w[1]) {
        return Err(Error::Config(
            "tl pool mixes different pretrained encoders; tl_tl pairs must share one".into(),
        ));
    }

    let mut scenarios = Vec::with_capacity(4);
    for (idx, scenario) in [
        Scenario::TlTl,
        Scenario::RiRi,
        Scenario::TlTlStar,
        Scenario::RiRiStar,
    ]
    .into_iter()
    .enumerate()
    {
        let (pool, star) = match scenario {
            Scenario::TlTl => (tl_pool, false),
            Scenario::RiRi => (ri_pool, false),
            Scenario::TlTlStar => (tl_pool, true),
            Scenario::RiRiStar => (ri_pool, true),
            Scenario::Custom => unreachable!(),
        };
        let tag = pool_tag(pool)?;

        // candidate pairs: (member, member) for last-last, (member,) for
        // last-best
        let candidates: Vec<(usize, usize)> = if star {
            (0..pool.len()).map(|i| (i, i)).collect()
        } else {
            let mut v = Vec::new();
            for i in 0..pool.len() {
                for j in i + 1..pool.len() {
                    v.push((i, j));
                }
            }
            v
        };
        if candidates.len() < pairs_per_scenario {
            return Err(Error::Config(format!(
                "scenario {}: {} candidate pairs but {} requested",
                scenario.name(),
                candidates.len(),
                pairs_per_scenario
            )));
        }
        let mut rng = rng::substream(seed, idx as u64);
        let picks = rng::sample_without_replacement(&mut rng, candidates.len(), pairs_per_scenario);

        let mut curves = Vec::with_capacity(pairs_per_scenario);
        for pick in picks {
            let (i, j) = candidates[pick];
            let (c1, c2, ids) = if star {
                (
                    &pool[i].last,
                    &pool[i].best,
                    (
                        format!("{tag}-{:02}-last", pool[i].index),
                        format!("{tag}-{:02}-best", pool[i].index),
                    ),
                )
            } else {
                (
                    &pool[i].last,
                    &pool[j].last,
                    (
                        format!("{tag}-{:02}-last", pool[i].index),
                        format!("{tag}-{:02}-last", pool[j].index),
                    ),
                )
            };
            curves.push(barrier_curve_tagged(c1, c2, eval, n_lambda, scenario, ids)?);
        }
        let median_barrier = median(curves.iter().map(|c| c.barrier_height));
        scenarios.push(ScenarioResult {
            scenario,
            curves,
            median_barrier,
        });
    }
    Ok(ScenarioReport { scenarios })
}

fn pool_tag(pool: &[PoolMember]) -> Result<&'static str> {
    let first = pool
        .first()
        .ok_or_else(|| Error::Config("empty checkpoint pool".into()))?;
    Ok(first.last.lineage.short_tag())
}

fn median(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Writes one curve as `lambda,auc,bce_loss`.
pub fn write_barrier_curve_csv(path: &Path, curve: &BarrierCurve) -> Result<()> {
    let mut out = String::from("lambda,auc,bce_loss\n");
    for ((l, a), b) in curve
        .lambda_grid
        .iter()
        .zip(&curve.auc_at_lambda)
        .zip(&curve.bce_at_lambda)
    {
        out.push_str(&format!("{l},{a},{b}\n"));
    }
    std::fs::File::create(path)?.write_all(out.as_bytes())?;
    Ok(())
}

/// Writes one CSV per scenario (`pair,lambda,auc,bce_loss`) plus a summary
/// CSV (`scenario,pair,barrier_height`). Returns the summary path.
pub fn write_scenario_report_csv(dir: &Path, report: &ScenarioReport) -> Result<std::path::PathBuf> {
    std::fs::create_dir_all(dir)?;
    for result in &report.scenarios {
        let mut out = String::from("pair,lambda,auc,bce_loss\n");
        for curve in &result.curves {
            let pair = format!("{}~{}", curve.endpoint_ids.0, curve.endpoint_ids.1);
            for ((l, a), b) in curve
                .lambda_grid
                .iter()
                .zip(&curve.auc_at_lambda)
                .zip(&curve.bce_at_lambda)
            {
                out.push_str(&format!("{pair},{l},{a},{b}\n"));
            }
        }
        let path = dir.join(format!("barrier_{}.csv", result.scenario.name()));
        std::fs::File::create(path)?.write_all(out.as_bytes())?;
    }
    let mut summary = String::from("scenario,pair,barrier_height\n");
    for result in &report.scenarios {
        for curve in &result.curves {
            summary.push_str(&format!(
                "{},{}~{},{}\n",
                result.scenario.name(),
                curve.endpoint_ids.0,
                curve.endpoint_ids.1,
                curve.barrier_height
            ));
        }
    }
    let path = dir.join("barrier_summary.csv");
    std::fs::File::create(&path)?.write_all(summary.as_bytes())?;
    Ok(path)
}
