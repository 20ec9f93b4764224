//! Leave-site-out stratified splitting.


use crate::error::{Error, Result};
use crate::rng;

use super::{DatasetSplit, SampleSet, SplitMetadata};

/// Target partition proportions. The test share is realized by holding out
/// whole sites; train and validation divide the remaining samples in
/// `train : validation` proportion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl SplitRatios {
    pub const DEFAULT: SplitRatios = SplitRatios {
        train: 0.7,
        validation: 0.1,
        test: 0.2,
    };

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("train", self.train),
            ("validation", self.validation),
            ("test", self.test),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("split ratio {name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Partitions samples so that `held_out_sites` whole sites form the test set
/// and the rest divide into train/validation, stratified on
/// (site, label, auxiliary quartile).
///
/// Deterministic given `seed`: held-out sites are drawn first, then strata
/// are processed in sorted key order, each shuffled before quota assignment.
/// Within each (site, label) group the validation quota is fixed first and
/// then spread over auxiliary quartiles by largest remainder, which keeps
/// per-site label proportions tight even in small partitions.
pub fn stratified_split(
    samples: &SampleSet,
    ratios: SplitRatios,
    held_out_sites: usize,
    seed: u64,
) -> Result<DatasetSplit> {
    ratios.validate()?;
    if held_out_sites == 0 {
        return Err(Error::Config("held_out_sites must be >= 1".into()));
    }
    let sites = samples.sites();
    if sites.len() < held_out_sites + 1 {
        return Err(Error::Config(format!(
            "cannot hold out {} of {} sites: at least one site must remain for training",
            held_out_sites,
            sites.len()
        )));
    }
    if samples.is_empty() {
        return Err(Error::Data("cannot split an empty sample set".into()));
    }

    let mut rng = rng::substream(seed, 900);

    let mut site_order = sites.clone();
    rng::shuffle(&mut rng, &mut site_order);
    let mut test_sites: Vec<u32> = site_order[..held_out_sites].to_vec();
    test_sites.sort_unstable();

    let quartiles = auxiliary_quartiles(samples.auxiliary());

    // strata over non-test samples, keyed (site, label, quartile)
    let mut test_rows: Vec<usize> = Vec::new();
    let mut strata: std::collections::BTreeMap<(u32, u8, u8), Vec<usize>> =
        std::collections::BTreeMap::new();
    for i in 0..samples.len() {
        let site = samples.site_ids()[i];
        if test_sites.binary_search(&site).is_ok() {
            test_rows.push(i);
        } else {
            let q = quartile_of(samples.auxiliary()[i], &quartiles);
            strata
                .entry((site, samples.labels()[i], q))
                .or_default()
                .push(i);
        }
    }

    let val_frac = ratios.validation / (ratios.train + ratios.validation);

    // per (site, label) group: fix the validation quota, then spread it over
    // the group's quartile strata by largest remainder
    let mut group_sizes: std::collections::BTreeMap<(u32, u8), usize> =
        std::collections::BTreeMap::new();
    for ((site, label, _), rows) in &strata {
        *group_sizes.entry((*site, *label)).or_default() += rows.len();
    }
    let mut val_quota: std::collections::BTreeMap<(u32, u8, u8), usize> =
        std::collections::BTreeMap::new();
    for (&(site, label), &n_group) in &group_sizes {
        let group_quota = (n_group as f64 * val_frac).round() as usize;
        let members: Vec<(u8, usize)> = strata
            .range((site, label, 0)..=(site, label, 3))
            .map(|((_, _, q), rows)| (*q, rows.len()))
            .collect();
        let mut assigned = 0usize;
        let mut remainders: Vec<(f64, u8)> = Vec::new();
        for &(q, n_q) in &members {
            let ideal = group_quota as f64 * n_q as f64 / n_group as f64;
            let base = ideal.floor() as usize;
            val_quota.insert((site, label, q), base);
            assigned += base;
            remainders.push((ideal - base as f64, q));
        }
        // largest remainder first; ties resolved toward the lower quartile
        remainders.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        for &(_, q) in remainders.iter().take(group_quota.saturating_sub(assigned)) {
            *val_quota.get_mut(&(site, label, q)).unwrap() += 1;
        }
    }

    let mut train_rows: Vec<usize> = Vec::new();
    let mut val_rows: Vec<usize> = Vec::new();
    for ((site, label, q), rows) in &strata {
        let mut rows = rows.clone();
        rng::shuffle(&mut rng, &mut rows);
        let k = *val_quota.get(&(*site, *label, *q)).unwrap_or(&0);
        let k = k.min(rows.len());
        val_rows.extend_from_slice(&rows[..k]);
        train_rows.extend_from_slice(&rows[k..]);
    }

    // stable partition ordering regardless of stratum iteration
    train_rows.sort_unstable();
    val_rows.sort_unstable();
    test_rows.sort_unstable();

    let train = samples.take_rows(&train_rows);
    let validation = samples.take_rows(&val_rows);
    let test = samples.take_rows(&test_rows);

    for (name, p) in [("train", &train), ("validation", &validation), ("test", &test)] {
        if p.batch.is_empty() {
            return Err(Error::Data(format!("{name} partition is empty")));
        }
        let pos = p.batch.labels().iter().filter(|&&l| l == 1).count();
        if pos == 0 || pos == p.batch.len() {
            return Err(Error::Data(format!(
                "{name} partition contains a single class; stratification impossible"
            )));
        }
    }

    let split = DatasetSplit {
        metadata: SplitMetadata {
            seed,
            task_id: samples.task_id().to_string(),
            train_sites: train.sites(),
            validation_sites: validation.sites(),
            test_sites: test.sites(),
        },
        train,
        validation,
        test,
    };
    split.validate()?;
    Ok(split)
}

/// (q25, q50, q75) of the auxiliary covariate over the full sample set.
fn auxiliary_quartiles(aux: &[f32]) -> [f32; 3] {
    let mut sorted: Vec<f32> = aux.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let q = |frac: f64| -> f32 {
        let idx = ((sorted.len() - 1) as f64 * frac).round() as usize;
        sorted[idx]
    };
    [q(0.25), q(0.5), q(0.75)]
}

fn quartile_of(v: f32, quartiles: &[f32; 3]) -> u8 {
    quartiles.iter().take_while(|&&q| v > q).count() as u8
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 2 classes x 4 sites x 100 samples per cell.
    fn grid_samples() -> SampleSet {
        let n = 800;
        let mut labels = Vec::with_capacity(n);
        let mut sites = Vec::with_capacity(n);
        let mut aux = Vec::with_capacity(n);
        let mut features = Vec::with_capacity(n * 2);
        for site in 0..4u32 {
            for label in 0..2u8 {
                for k in 0..100 {
                    labels.push(label);
                    sites.push(site);
                    aux.push((k as f32) / 100.0 - 0.5);
                    features.push(site as f32);
                    features.push(label as f32 + k as f32 * 0.01);
                }
            }
        }
        SampleSet::new(
            features,
            2,
            labels,
            aux,
            sites,
            (0..n as u64).collect(),
            "grid".into(),
        )
        .unwrap()
    }

    #[test]
    fn held_out_site_forms_the_whole_test_partition() {
        let split = stratified_split(&grid_samples(), SplitRatios::DEFAULT, 1, 7).unwrap();
        assert_eq!(split.test.sites().len(), 1);
        assert_eq!(split.test.batch.len(), 200);
        split.validate().unwrap();
        // train/val label balance within 10pp of global (0.5)
        for p in [&split.train, &split.validation] {
            let pos = p.batch.labels().iter().filter(|&&l| l == 1).count();
            let rate = pos as f64 / p.batch.len() as f64;
            assert!((rate - 0.5).abs() <= 0.10, "rate {rate}");
        }
    }

    #[test]
    fn three_of_four_sites_held_out_leaves_one_training_site() {
        let split = stratified_split(&grid_samples(), SplitRatios::DEFAULT, 3, 7).unwrap();
        assert_eq!(split.train.sites().len(), 1);
        assert_eq!(split.test.sites().len(), 3);
        assert_eq!(split.train.sites(), split.validation.sites());
    }

    #[test]
    fn too_many_held_out_sites_is_rejected() {
        let err = stratified_split(&grid_samples(), SplitRatios::DEFAULT, 4, 7);
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn partition_auxiliary_means_stay_close() {
        let samples = grid_samples();
        let split = stratified_split(&samples, SplitRatios::DEFAULT, 1, 7).unwrap();
        let global_mean =
            samples.auxiliary().iter().map(|&a| a as f64).sum::<f64>() / samples.len() as f64;
        let global_std = {
            let ss: f64 = samples
                .auxiliary()
                .iter()
                .map(|&a| (a as f64 - global_mean) * (a as f64 - global_mean))
                .sum();
            (ss / samples.len() as f64).sqrt()
        };
        let mean_of = |p: &crate::data::Partition| {
            p.batch.auxiliary().iter().map(|&a| a as f64).sum::<f64>() / p.batch.len() as f64
        };
        let means = [
            mean_of(&split.train),
            mean_of(&split.validation),
            mean_of(&split.test),
        ];
        for a in &means {
            for b in &means {
                assert!(
                    (a - b).abs() < 0.25 * global_std,
                    "partition aux means {means:?}, global std {global_std}"
                );
            }
        }
    }

    #[test]
    fn split_is_deterministic() {
        let a = stratified_split(&grid_samples(), SplitRatios::DEFAULT, 1, 11).unwrap();
        let b = stratified_split(&grid_samples(), SplitRatios::DEFAULT, 1, 11).unwrap();
        assert_eq!(a, b);
        let c = stratified_split(&grid_samples(), SplitRatios::DEFAULT, 1, 12).unwrap();
        assert_ne!(a.metadata.test_sites, c.metadata.test_sites);
    }

    #[test]
    fn subjects_are_disjoint_across_partitions() {
        let split = stratified_split(&grid_samples(), SplitRatios::DEFAULT, 2, 3).unwrap();
        let mut all: Vec<u64> = split
            .train
            .subject_ids
            .iter()
            .chain(&split.validation.subject_ids)
            .chain(&split.test.subject_ids)
            .copied()
            .collect();
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), 800);
    }
}
