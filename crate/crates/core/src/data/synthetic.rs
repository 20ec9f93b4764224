//! Synthetic site-structured binary classification data.
//!
//! Each sample's features are a sum of a class direction, a per-site shift,
//! an auxiliary-covariate direction, and unit Gaussian noise:
//!
//! ```text
//! x_i = class_separation * y_i * mu_class
//!     + site_effect_scale * mu_site[s_i]
//!     + auxiliary_effect_scale * a_i * mu_aux
//!     + noise_i,        noise_i ~ N(0, I)
//! ```
//!
//! with the direction vectors `mu_*` drawn once from the seed and normalized
//! to unit length, `y_i ~ Bernoulli(label_balance)`, `a_i ~ N(0, 1)`, and
//! `s_i` uniform over sites. This mirrors the structure of multi-site
//! clinical data: a diagnostic signal, acquisition-site shifts, and a
//! continuous covariate entangled with the features.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

use super::{stratified_split, DatasetSplit, SampleSet, SplitRatios};

/// Pre-split per-site label-rate tolerance. Tighter than the 10pp split
/// invariant so quota rounding cannot push a partition over the limit.
const SITE_BALANCE_TOL: f64 = 0.06;

const MAX_SITE_ASSIGNMENT_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    pub n_subjects: usize,
    pub n_sites: usize,
    pub input_dim: usize,
    pub class_separation: f64,
    pub site_effect_scale: f64,
    pub auxiliary_effect_scale: f64,
    pub label_balance: f64,
    pub seed: u64,
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 4 {
            return Err(Error::Config(format!(
                "n_sites must be >= 4 so at least one site can be held out, got {}",
                self.n_sites
            )));
        }
        if self.n_subjects < 4 * self.n_sites {
            return Err(Error::Config(format!(
                "n_subjects = {} is too small for {} sites",
                self.n_subjects, self.n_sites
            )));
        }
        if self.input_dim == 0 {
            return Err(Error::Config("input_dim must be >= 1".into()));
        }
        for (name, v) in [
            ("class_separation", self.class_separation),
            ("site_effect_scale", self.site_effect_scale),
            ("auxiliary_effect_scale", self.auxiliary_effect_scale),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        if !(self.label_balance > 0.0 && self.label_balance < 1.0) {
            return Err(Error::Config(format!(
                "label_balance must lie strictly inside (0,1), got {}",
                self.label_balance
            )));
        }
        Ok(())
    }

    /// Identifier of the classification task this dataset defines.
    pub fn task_id(&self) -> String {
        format!("syn-{}-d{}", self.seed, self.input_dim)
    }
}

/// Generates a dataset and splits it 70/10/20 with `max(1, n_sites/5)`
/// held-out test sites. Pure function of the config.
pub fn generate(cfg: &SyntheticConfig) -> Result<DatasetSplit> {
    let samples = generate_samples(cfg)?;
    let held_out = ((cfg.n_sites as f64 * SplitRatios::DEFAULT.test).round() as usize).max(1);
    stratified_split(&samples, SplitRatios::DEFAULT, held_out, cfg.seed)
}

/// Generates the unpartitioned sample set.
///
/// Seed substreams: 0 = direction vectors, 1 = labels, 2 = auxiliary,
/// 3 = noise, 10+k = site assignment attempt k. Site assignments are redrawn
/// (up to 100 attempts) until every site contains both classes with a label
/// rate within 6pp of the global rate.
pub fn generate_samples(cfg: &SyntheticConfig) -> Result<SampleSet> {
    cfg.validate()?;
    let d = cfg.input_dim;
    let n = cfg.n_subjects;

    let mut dir_rng = rng::substream(cfg.seed, 0);
    let mu_class = unit_direction(&mut dir_rng, d);
    let mu_sites: Vec<Vec<f64>> = (0..cfg.n_sites)
        .map(|_| unit_direction(&mut dir_rng, d))
        .collect();
    let mu_aux = unit_direction(&mut dir_rng, d);

    let mut label_rng = rng::substream(cfg.seed, 1);
    let labels: Vec<u8> = (0..n)
        .map(|_| (label_rng.gen::<f64>() < cfg.label_balance) as u8)
        .collect();
    let global_rate =
        labels.iter().filter(|&&l| l == 1).count() as f64 / n as f64;
    if global_rate == 0.0 || global_rate == 1.0 {
        return Err(Error::Data(
            "generated labels are single-class; adjust label_balance or n_subjects".into(),
        ));
    }

    let mut aux_rng = rng::substream(cfg.seed, 2);
    let auxiliary: Vec<f64> = (0..n).map(|_| rng::standard_normal(&mut aux_rng)).collect();

    let sites = assign_sites(cfg, &labels, global_rate)?;

    let mut noise_rng = rng::substream(cfg.seed, 3);
    let mut features = Vec::with_capacity(n * d);
    for i in 0..n {
        let site = &mu_sites[sites[i] as usize];
        for j in 0..d {
            let v = cfg.class_separation * labels[i] as f64 * mu_class[j]
                + cfg.site_effect_scale * site[j]
                + cfg.auxiliary_effect_scale * auxiliary[i] * mu_aux[j]
                + rng::standard_normal(&mut noise_rng);
            features.push(v as f32);
        }
    }

    SampleSet::new(
        features,
        d,
        labels,
        auxiliary.iter().map(|&a| a as f32).collect(),
        sites,
        (0..n as u64).collect(),
        cfg.task_id(),
    )
}

fn assign_sites(cfg: &SyntheticConfig, labels: &[u8], global_rate: f64) -> Result<Vec<u32>> {
    for attempt in 0..MAX_SITE_ASSIGNMENT_ATTEMPTS {
        let mut site_rng = rng::substream(cfg.seed, 10 + attempt as u64);
        let sites: Vec<u32> = (0..labels.len())
            .map(|_| site_rng.gen_range(0..cfg.n_sites as u32))
            .collect();
        if site_assignment_ok(cfg.n_sites, labels, &sites, global_rate) {
            return Ok(sites);
        }
    }
    Err(Error::Data(format!(
        "no balanced site assignment found in {MAX_SITE_ASSIGNMENT_ATTEMPTS} attempts; \
         increase n_subjects or relax label_balance"
    )))
}

fn site_assignment_ok(n_sites: usize, labels: &[u8], sites: &[u32], global_rate: f64) -> bool {
    let mut count = vec![0usize; n_sites];
    let mut pos = vec![0usize; n_sites];
    for (&s, &l) in sites.iter().zip(labels) {
        count[s as usize] += 1;
        pos[s as usize] += (l == 1) as usize;
    }
    (0..n_sites).all(|s| {
        count[s] > 0 && pos[s] > 0 && pos[s] < count[s] && {
            let rate = pos[s] as f64 / count[s] as f64;
            (rate - global_rate).abs() <= SITE_BALANCE_TOL
        }
    })
}

fn unit_direction<R: Rng>(rng: &mut R, d: usize) -> Vec<f64> {
    let mut v = vec![0.0f64; d];
    rng::fill_standard_normal(rng, &mut v);
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    v
}
