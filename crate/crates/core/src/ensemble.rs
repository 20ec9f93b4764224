//! Deep-ensemble averaging and the bootstrap ensemble-size analysis.
//!
//! From a pool of N trained models evaluated on a fixed test set, the
//! bootstrap analysis draws, for each ensemble size T, `resamples` multisets
//! of T models (uniformly, with replacement), averages their predicted
//! probabilities element-wise, and records the mean and sample standard
//! deviation of the resulting ROC-AUC values. The draw stream is a contract:
//! one ChaCha8 generator seeded with `seed`, consumed grid-point by
//! grid-point, resample by resample, index by index.

use rand::Rng;
use rayon::prelude::*;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::{mean_std, roc_auc};
use crate::nn::{forward, Batch};
use crate::rng;
use crate::train::ModelCheckpoint;

/// N models x M test samples of predicted positive-class probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionMatrix {
    /// Row-major, one row per model.
    probs: Vec<f64>,
    n_models: usize,
    n_samples: usize,
    model_ids: Vec<String>,
    labels: Vec<u8>,
    sample_ids: Vec<String>,
}

impl PredictionMatrix {
    pub fn new(
        probs: Vec<f64>,
        model_ids: Vec<String>,
        labels: Vec<u8>,
        sample_ids: Vec<String>,
    ) -> Result<Self> {
        let n_models = model_ids.len();
        let n_samples = labels.len();
        if n_models == 0 || n_samples == 0 {
            return Err(Error::Shape("prediction matrix must be non-empty".into()));
        }
        if probs.len() != n_models * n_samples {
            return Err(Error::Shape(format!(
                "{} probabilities do not form {} rows of {} samples",
                probs.len(),
                n_models,
                n_samples
            )));
        }
        if sample_ids.len() != n_samples {
            return Err(Error::Shape(format!(
                "{} sample ids for {} samples",
                sample_ids.len(),
                n_samples
            )));
        }
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Data("probabilities must lie in [0,1]".into()));
        }
        let n_pos = labels.iter().filter(|&&l| l == 1).count();
        if n_pos == 0 || n_pos == n_samples {
            return Err(Error::Data(
                "prediction matrix labels must include both classes".into(),
            ));
        }
        Ok(Self {
            probs,
            n_models,
            n_samples,
            model_ids,
            labels,
            sample_ids,
        })
    }

    /// Evaluates checkpoints on a test batch. Sample ids are taken from the
    /// provided subject ids.
    pub fn from_checkpoints(
        models: &[(String, &ModelCheckpoint)],
        eval: &Batch,
        subject_ids: &[u64],
    ) -> Result<Self> {
        if models.is_empty() {
            return Err(Error::Shape("no models given".into()));
        }
        if subject_ids.len() != eval.len() {
            return Err(Error::Shape(format!(
                "{} subject ids for {} eval samples",
                subject_ids.len(),
                eval.len()
            )));
        }
        let mut probs = Vec::with_capacity(models.len() * eval.len());
        let mut model_ids = Vec::with_capacity(models.len());
        for (id, cp) in models {
            probs.extend(forward(&cp.arch, &cp.weights, eval)?);
            model_ids.push(id.clone());
        }
        Self::new(
            probs,
            model_ids,
            eval.labels().to_vec(),
            subject_ids.iter().map(|s| format!("s{s}")).collect(),
        )
    }

    pub fn n_models(&self) -> usize {
        self.n_models
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn row(&self, model: usize) -> &[f64] {
        &self.probs[model * self.n_samples..(model + 1) * self.n_samples]
    }

    pub fn model_ids(&self) -> &[String] {
        &self.model_ids
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    /// Single-model test AUC per row.
    pub fn row_aucs(&self) -> Result<Vec<f64>> {
        (0..self.n_models)
            .map(|i| roc_auc(self.row(i), &self.labels))
            .collect()
    }
}

/// Element-wise mean of the selected rows (duplicates permitted, as drawn by
/// the bootstrap). 64-bit accumulation in row order, then one division.
pub fn ensemble_predict(pm: &PredictionMatrix, rows: &[usize]) -> Result<Vec<f64>> {
    if rows.is_empty() {
        return Err(Error::Shape("ensemble_predict: empty model subset".into()));
    }
    for &r in rows {
        if r >= pm.n_models {
            return Err(Error::Shape(format!(
                "ensemble_predict: row {r} out of range for {} models",
                pm.n_models
            )));
        }
    }
    let mut acc = vec![0.0f64; pm.n_samples];
    for &r in rows {
        for (a, &p) in acc.iter_mut().zip(pm.row(r)) {
            *a += p;
        }
    }
    let t = rows.len() as f64;
    acc.iter_mut().for_each(|a| *a /= t);
    Ok(acc)
}

/// How bootstrap subsets are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResampleMode {
    /// T draws uniform over all N rows (the standard protocol).
    WithReplacement,
    /// Sensitivity variant: T distinct rows per resample (requires T <= N).
    WithoutReplacement,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub t: usize,
    pub mean_auc: f64,
    pub std_auc: f64,
}

/// Mean and spread of T-ensemble AUC per grid point, plus the single-model
/// ("no-DE") baseline over the pool.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleCurve {
    pub points: Vec<CurvePoint>,
    pub baseline_mean: f64,
    pub baseline_std: f64,
    pub resamples: usize,
    pub seed: u64,
}

/// Bootstrap ensemble curve with the standard with-replacement protocol.
pub fn bootstrap_de_curve(
    pm: &PredictionMatrix,
    t_grid: &[usize],
    resamples: usize,
    seed: u64,
) -> Result<EnsembleCurve> {
    bootstrap_de_curve_with_mode(pm, t_grid, resamples, seed, ResampleMode::WithReplacement)
}

pub fn bootstrap_de_curve_with_mode(
    pm: &PredictionMatrix,
    t_grid: &[usize],
    resamples: usize,
    seed: u64,
    mode: ResampleMode,
) -> Result<EnsembleCurve> {
    if t_grid.is_empty() {
        return Err(Error::Config("bootstrap_de_curve: empty T grid".into()));
    }
    if t_grid[0] == 0 || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(
            "bootstrap_de_curve: T grid must be strictly increasing and >= 1".into(),
        ));
    }
    if resamples == 0 {
        return Err(Error::Config(
            "bootstrap_de_curve: resamples must be >= 1".into(),
        ));
    }
    let n = pm.n_models;
    if mode == ResampleMode::WithoutReplacement && *t_grid.last().unwrap() > n {
        return Err(Error::Config(format!(
            "without-replacement draws need T <= {n} models"
        )));
    }

    let (baseline_mean, baseline_std) = mean_std(&pm.row_aucs()?)?;

    let mut rng = rng::stream(seed);
    let mut points = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        // pre-draw every resample's indices so evaluation order cannot
        // affect the stream
        let draws: Vec<Vec<usize>> = (0..resamples)
            .map(|_| match mode {
                ResampleMode::WithReplacement => (0..t).map(|_| rng.gen_range(0..n)).collect(),
                ResampleMode::WithoutReplacement => {
                    rng::sample_without_replacement(&mut rng, n, t)
                }
            })
            .collect();
        let aucs: Vec<f64> = draws
            .par_iter()
            .map(|rows| {
                let pred = ensemble_predict(pm, rows)?;
                roc_auc(&pred, &pm.labels)
            })
            .collect::<Result<_>>()?;
        let (mean_auc, std_auc) = mean_std(&aucs)?;
        points.push(CurvePoint {
            t,
            mean_auc,
            std_auc,
        });
    }
    Ok(EnsembleCurve {
        points,
        baseline_mean,
        baseline_std,
        resamples,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlateauResult {
    pub t_star: usize,
    /// Set when the curve never rises above the baseline; `t_star` is then
    /// the smallest grid value.
    pub no_gain: bool,
}

/// Smallest grid T capturing at least (1 - delta) of the total ensemble gain:
/// the first T whose remaining gain to the grid maximum is below
/// delta * (gain from baseline to grid maximum).
pub fn plateau_t(curve: &EnsembleCurve, delta: f64) -> Result<PlateauResult> {
    if curve.points.len() < 3 {
        return Err(Error::Config(
            "plateau_t: need at least 3 grid points".into(),
        ));
    }
    if !delta.is_finite() || delta <= 0.0 {
        return Err(Error::Config(format!(
            "plateau_t: delta must be > 0, got {delta}"
        )));
    }
    let max_mean = curve.points.last().unwrap().mean_auc;
    let total_gain = max_mean - curve.baseline_mean;
    if total_gain <= 0.0 {
        return Ok(PlateauResult {
            t_star: curve.points[0].t,
            no_gain: true,
        });
    }
    for p in &curve.points {
        if max_mean - p.mean_auc < delta * total_gain {
            return Ok(PlateauResult {
                t_star: p.t,
                no_gain: false,
            });
        }
    }
    Ok(PlateauResult {
        t_star: curve.points.last().unwrap().t,
        no_gain: false,
    })
}

/// Writes the curve as `T,mean_auc,std_auc`, one row per grid point.
pub fn write_ensemble_curve_csv(path: &Path, curve: &EnsembleCurve) -> Result<()> {
    let mut out = String::from("T,mean_auc,std_auc\n");
    for p in &curve.points {
        out.push_str(&format!("{},{},{}\n", p.t, p.mean_auc, p.std_auc));
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

/// Writes probabilities (`model_id` then one column per sample) and a
/// separate label file (`sample_id,label`).
pub fn write_prediction_matrix_csv(
    probs_path: &Path,
    labels_path: &Path,
    pm: &PredictionMatrix,
) -> Result<()> {
    let mut out = String::from("model_id");
    for id in &pm.sample_ids {
        out.push(',');
        out.push_str(id);
    }
    out.push('\n');
    for (i, id) in pm.model_ids.iter().enumerate() {
        out.push_str(id);
        for p in pm.row(i) {
            out.push_str(&format!(",{p}"));
        }
        out.push('\n');
    }
    std::fs::File::create(probs_path)?.write_all(out.as_bytes())?;

    let mut labels = String::from("sample_id,label\n");
    for (id, l) in pm.sample_ids.iter().zip(&pm.labels) {
        labels.push_str(&format!("{id},{l}\n"));
    }
    std::fs::File::create(labels_path)?.write_all(labels.as_bytes())?;
    Ok(())
}

/// Reads the pair of files written by [`write_prediction_matrix_csv`].
pub fn read_prediction_matrix_csv(
    probs_path: &Path,
    labels_path: &Path,
) -> Result<PredictionMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(probs_path)
        .map_err(|e| Error::Data(format!("{}: {e}", probs_path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Data(format!("{}: {e}", probs_path.display())))?
        .clone();
    let sample_ids: Vec<String> = headers.iter().skip(1).map(|h| h.to_string()).collect();
    let mut model_ids = Vec::new();
    let mut probs = Vec::new();
    for record in reader.records() {
        let record =
            record.map_err(|e| Error::Data(format!("{}: {e}", probs_path.display())))?;
        let mut fields = record.iter();
        model_ids.push(
            fields
                .next()
                .ok_or_else(|| Error::Data("empty prediction row".into()))?
                .to_string(),
        );
        for field in fields {
            let p: f64 = field
                .parse()
                .map_err(|_| Error::Data(format!("bad probability \"{field}\"")))?;
            probs.push(p);
        }
    }

    let mut label_reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(labels_path)
        .map_err(|e| Error::Data(format!("{}: {e}", labels_path.display())))?;
    let mut labels_by_id: std::collections::BTreeMap<String, u8> = Default::default();
    for record in label_reader.records() {
        let record =
            record.map_err(|e| Error::Data(format!("{}: {e}", labels_path.display())))?;
        let id = record
            .get(0)
            .ok_or_else(|| Error::Data("label row missing sample_id".into()))?;
        let l: u8 = record
            .get(1)
            .ok_or_else(|| Error::Data("label row missing label".into()))?
            .parse()
            .map_err(|_| Error::Data("label must be 0 or 1".into()))?;
        labels_by_id.insert(id.to_string(), l);
    }
    let labels: Vec<u8> = sample_ids
        .iter()
        .map(|id| {
            labels_by_id
                .get(id)
                .copied()
                .ok_or_else(|| Error::Data(format!("no label for sample \"{id}\"")))
        })
        .collect::<Result<_>>()?;

    PredictionMatrix::new(probs, model_ids, labels, sample_ids)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: &[&[f64]], labels: &[u8]) -> PredictionMatrix {
        let n_samples = labels.len();
        let probs: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        PredictionMatrix::new(
            probs,
            (0..rows.len()).map(|i| format!("m{i}")).collect(),
            labels.to_vec(),
            (0..n_samples).map(|i| format!("s{i}")).collect(),
        )
        .unwrap()
    }

    #[test]
    fn single_row_ensemble_is_that_row() {
        let pm = matrix(&[&[0.2, 0.8, 0.6], &[0.9, 0.1, 0.5]], &[0, 1, 1]);
        assert_eq!(ensemble_predict(&pm, &[1]).unwrap(), pm.row(1));
    }

    #[test]
    fn two_row_mean_is_elementwise() {
        let pm = matrix(&[&[0.2, 0.8], &[0.6, 0.4]], &[0, 1]);
        let mean = ensemble_predict(&pm, &[0, 1]).unwrap();
        assert!((mean[0] - 0.4).abs() <= 1e-15);
        assert!((mean[1] - 0.6).abs() <= 1e-15);
    }

    #[test]
    fn mean_with_duplicates_matches_loop_oracle() {
        let mut r = rng::stream(17);
        let rows: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..9).map(|_| r.gen_range(0.0..1.0)).collect())
            .collect();
        let row_refs: Vec<&[f64]> = rows.iter().map(|v| v.as_slice()).collect();
        let pm = matrix(&row_refs, &[0, 1, 0, 1, 0, 1, 0, 1, 0]);
        let subset: Vec<usize> = (0..7).map(|_| r.gen_range(0..5)).collect();
        let fast = ensemble_predict(&pm, &subset).unwrap();
        for j in 0..9 {
            let mut acc = 0.0f64;
            for &s in &subset {
                acc += rows[s][j];
            }
            let expected = acc / subset.len() as f64;
            assert!((fast[j] - expected).abs() <= 1e-15);
        }
    }

    #[test]
    fn empty_subset_is_rejected() {
        let pm = matrix(&[&[0.2, 0.8]], &[0, 1]);
        assert!(ensemble_predict(&pm, &[]).is_err());
        assert!(ensemble_predict(&pm, &[3]).is_err());
    }

    #[test]
    fn identical_rows_collapse_the_curve() {
        let row = [0.9, 0.2, 0.7, 0.4];
        let pm = matrix(&[&row, &row, &row], &[1, 0, 1, 0]);
        let curve = bootstrap_de_curve(&pm, &[2, 3, 5], 50, 9).unwrap();
        let single = roc_auc(&row, &[1, 0, 1, 0]).unwrap();
        for p in &curve.points {
            assert_eq!(p.mean_auc, single);
            assert_eq!(p.std_auc, 0.0);
        }
        assert_eq!(curve.baseline_mean, single);
        assert_eq!(curve.baseline_std, 0.0);
    }

    #[test]
    fn seeded_draws_match_a_replayed_stream() {
        let pm = matrix(
            &[&[0.9, 0.2, 0.7, 0.4], &[0.3, 0.6, 0.8, 0.1]],
            &[1, 0, 1, 0],
        );
        let seed = 123;
        let curve = bootstrap_de_curve(&pm, &[2], 3, seed).unwrap();

        // scratch oracle: replay the documented draw stream and reduce with
        // an O(n^2) AUC
        let brute_auc = |scores: &[f64], labels: &[u8]| -> f64 {
            let mut half = 0u64;
            let mut np = 0u64;
            let mut nn = 0u64;
            for (i, &si) in scores.iter().enumerate() {
                if labels[i] == 1 {
                    np += 1;
                    for (j, &sj) in scores.iter().enumerate() {
                        if labels[j] == 0 {
                            half += if si > sj {
                                2
                            } else if si == sj {
                                1
                            } else {
                                0
                            };
                        }
                    }
                } else {
                    nn += 1;
                }
            }
            half as f64 / (2 * np * nn) as f64
        };
        let mut r = rng::stream(seed);
        let mut aucs = Vec::new();
        for _ in 0..3 {
            let rows: Vec<usize> = (0..2).map(|_| r.gen_range(0..2usize)).collect();
            let mut mean = vec![0.0f64; 4];
            for &row in &rows {
                for (m, &p) in mean.iter_mut().zip(pm.row(row)) {
                    *m += p;
                }
            }
            mean.iter_mut().for_each(|m| *m /= rows.len() as f64);
            aucs.push(brute_auc(&mean, pm.labels()));
        }
        let om = aucs.iter().sum::<f64>() / 3.0;
        let os = (aucs.iter().map(|a| (a - om) * (a - om)).sum::<f64>() / 2.0).sqrt();
        assert!((curve.points[0].mean_auc - om).abs() <= 1e-15);
        assert!((curve.points[0].std_auc - os).abs() <= 1e-15);
    }

    #[test]
    fn curve_is_bitwise_deterministic() {
        let mut r = rng::stream(31);
        let rows: Vec<Vec<f64>> = (0..6)
            .map(|_| (0..12).map(|_| r.gen_range(0.0..1.0)).collect())
            .collect();
        let row_refs: Vec<&[f64]> = rows.iter().map(|v| v.as_slice()).collect();
        let pm = matrix(&row_refs, &[1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0]);
        let a = bootstrap_de_curve(&pm, &[2, 3, 5], 200, 77).unwrap();
        let b = bootstrap_de_curve(&pm, &[2, 3, 5], 200, 77).unwrap();
        for (pa, pb) in a.points.iter().zip(&b.points) {
            assert_eq!(pa.mean_auc.to_bits(), pb.mean_auc.to_bits());
            assert_eq!(pa.std_auc.to_bits(), pb.std_auc.to_bits());
        }
    }

    #[test]
    fn grid_must_be_strictly_increasing() {
        let pm = matrix(&[&[0.2, 0.8]], &[0, 1]);
        assert!(bootstrap_de_curve(&pm, &[], 10, 0).is_err());
        assert!(bootstrap_de_curve(&pm, &[2, 2], 10, 0).is_err());
        assert!(bootstrap_de_curve(&pm, &[5, 3], 10, 0).is_err());
        assert!(bootstrap_de_curve(&pm, &[0, 2], 10, 0).is_err());
    }

    #[test]
    fn without_replacement_needs_enough_models() {
        let pm = matrix(&[&[0.2, 0.8], &[0.4, 0.6]], &[0, 1]);
        assert!(bootstrap_de_curve_with_mode(
            &pm,
            &[2, 3, 5],
            10,
            0,
            ResampleMode::WithoutReplacement
        )
        .is_err());
        assert!(bootstrap_de_curve_with_mode(
            &pm,
            &[2],
            10,
            0,
            ResampleMode::WithoutReplacement
        )
        .is_ok());
    }

    fn fixed_curve(baseline: f64, pts: &[(usize, f64)]) -> EnsembleCurve {
        EnsembleCurve {
            points: pts
                .iter()
                .map(|&(t, m)| CurvePoint {
                    t,
                    mean_auc: m,
                    std_auc: 0.0,
                })
                .collect(),
            baseline_mean: baseline,
            baseline_std: 0.0,
            resamples: 1,
            seed: 0,
        }
    }

    #[test]
    fn flat_curve_flags_no_gain() {
        let curve = fixed_curve(0.8, &[(2, 0.8), (10, 0.8), (40, 0.8)]);
        let r = plateau_t(&curve, 0.2).unwrap();
        assert_eq!(r.t_star, 2);
        assert!(r.no_gain);
    }

    #[test]
    fn plateau_worked_example() {
        // remaining gain at T=10 is 0.002 < 0.2 * 0.05
        let curve = fixed_curve(0.70, &[(2, 0.74), (10, 0.748), (40, 0.75)]);
        let r = plateau_t(&curve, 0.2).unwrap();
        assert_eq!(r.t_star, 10);
        assert!(!r.no_gain);
        // tighter delta pushes the plateau out
        let r = plateau_t(&curve, 0.01).unwrap();
        assert_eq!(r.t_star, 40);
    }

    #[test]
    fn std_of_the_mean_prediction_scales_like_inverse_sqrt_t() {
        // i.i.d. rows: the bootstrap std of the mean prediction at a fixed
        // sample must follow sigma/sqrt(T)
        let n = 200;
        let mut r = rng::stream(404);
        let values: Vec<f64> = (0..n).map(|_| r.gen_range(0.2..0.8)).collect();
        let grid = [2usize, 5, 10, 15, 20, 30, 40, 50, 60];
        let resamples = 4000;
        let mut scaled = Vec::new();
        for &t in &grid {
            let mut means = Vec::with_capacity(resamples);
            for _ in 0..resamples {
                let mut acc = 0.0;
                for _ in 0..t {
                    acc += values[r.gen_range(0..n)];
                }
                means.push(acc / t as f64);
            }
            let (_, s) = mean_std(&means).unwrap();
            scaled.push(s * (t as f64).sqrt());
        }
        let reference = scaled[0];
        for (k, c) in scaled.iter().enumerate() {
            assert!(
                (c / reference - 1.0).abs() < 0.10,
                "T={} scaled std {c} vs reference {reference}",
                grid[k]
            );
        }
    }

    #[test]
    fn prediction_matrix_csv_round_trips() {
        let pm = matrix(&[&[0.25, 0.75, 0.5], &[0.125, 0.875, 0.0625]], &[1, 0, 1]);
        let dir = tempfile::tempdir().unwrap();
        let probs = dir.path().join("probs.csv");
        let labels = dir.path().join("labels.csv");
        write_prediction_matrix_csv(&probs, &labels, &pm).unwrap();
        let back = read_prediction_matrix_csv(&probs, &labels).unwrap();
        assert_eq!(pm, back);
    }
}
