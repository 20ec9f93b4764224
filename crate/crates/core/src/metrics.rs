//! ROC-AUC and basic aggregate statistics.

use crate::error::{Error, Result};

/// ROC-AUC via the Mann-Whitney statistic.
///
/// Sorts once, walks tie groups, and counts concordant and tied
/// positive-negative pairs in integer arithmetic (half-pair units), so the
/// only floating-point operation is the final division. Tied pairs count
/// one half each. O(n log n).
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Shape(format!(
            "roc_auc: {} scores vs {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Metric("roc_auc: NaN score".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count() as u64;
    let n_neg = labels.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Metric(
            "AUC undefined: need at least one positive and one negative".into(),
        ));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // half-pair units: concordant pair = 2, tied pair = 1
    let mut half_pairs: u64 = 0;
    let mut neg_below: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let mut pos_in_group: u64 = 0;
        let mut neg_in_group: u64 = 0;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            match labels[order[j]] {
                1 => pos_in_group += 1,
                _ => neg_in_group += 1,
            }
            j += 1;
        }
        half_pairs += 2 * pos_in_group * neg_below + pos_in_group * neg_in_group;
        neg_below += neg_in_group;
        i = j;
    }
    Ok(half_pairs as f64 / (2 * n_pos * n_neg) as f64)
}

/// Mean and sample standard deviation (n-1 denominator; 0 for a single value).
pub fn mean_std(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::Metric("mean_std: empty input".into()));
    }
    let n = values.len() as f64;
    let mut sum = 0.0;
    for &v in values {
        sum += v;
    }
    let mean = sum / n;
    if values.len() == 1 {
        return Ok((mean, 0.0));
    }
    let mut ss = 0.0;
    for &v in values {
        let d = v - mean;
        ss += d * d;
    }
    Ok((mean, (ss / (n - 1.0)).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    /// O(n^2) pair-enumeration oracle in the same half-pair units.
    fn auc_brute_force(scores: &[f64], labels: &[u8]) -> f64 {
        let mut half_pairs: u64 = 0;
        let mut n_pos: u64 = 0;
        for (i, &si) in scores.iter().enumerate() {
            if labels[i] != 1 {
                continue;
            }
            n_pos += 1;
            for (j, &sj) in scores.iter().enumerate() {
                if labels[j] == 1 {
                    continue;
                }
                if si > sj {
                    half_pairs += 2;
                } else if si == sj {
                    half_pairs += 1;
                }
            }
        }
        let n_neg = labels.iter().filter(|&&l| l != 1).count() as u64;
        half_pairs as f64 / (2 * n_pos * n_neg) as f64
    }

    #[test]
    fn worked_example() {
        let auc = roc_auc(&[0.9, 0.8, 0.7, 0.1], &[1, 0, 1, 0]).unwrap();
        assert_eq!(auc, 0.75);
        assert_eq!(auc, auc_brute_force(&[0.9, 0.8, 0.7, 0.1], &[1, 0, 1, 0]));
    }

    #[test]
    fn all_tied_scores_give_exactly_half() {
        let auc = roc_auc(&[0.3; 6], &[1, 0, 1, 0, 0, 1]).unwrap();
        assert_eq!(auc, 0.5);
    }

    #[test]
    fn perfect_separation_gives_one() {
        let auc = roc_auc(&[0.9, 0.8, 0.2, 0.1], &[1, 1, 0, 0]).unwrap();
        assert_eq!(auc, 1.0);
    }

    #[test]
    fn single_class_is_rejected() {
        assert!(matches!(
            roc_auc(&[0.1, 0.2], &[1, 1]),
            Err(Error::Metric(_))
        ));
        assert!(matches!(
            roc_auc(&[0.1, 0.2], &[0, 0]),
            Err(Error::Metric(_))
        ));
    }

    #[test]
    fn nan_scores_are_rejected() {
        assert!(roc_auc(&[f64::NAN, 0.2], &[1, 0]).is_err());
    }

    #[test]
    fn matches_brute_force_on_random_instances_with_ties() {
        let mut r = rng::stream(2024);
        for _ in 0..200 {
            let n = r.gen_range(2..50usize);
            // coarse grid of score values forces plenty of ties
            let scores: Vec<f64> = (0..n).map(|_| r.gen_range(0..8) as f64 / 8.0).collect();
            let mut labels: Vec<u8> = (0..n).map(|_| r.gen_range(0..2u8)).collect();
            // force both classes present
            labels[0] = 1;
            if n > 1 {
                labels[1] = 0;
            }
            let fast = roc_auc(&scores, &labels).unwrap();
            let slow = auc_brute_force(&scores, &labels);
            assert_eq!(fast, slow, "scores {scores:?} labels {labels:?}");
        }
    }

    #[test]
    fn invariant_under_strictly_increasing_transforms() {
        let mut r = rng::stream(55);
        for _ in 0..50 {
            let n = r.gen_range(4..40usize);
            let scores: Vec<f64> = (0..n).map(|_| r.gen_range(-3.0..3.0)).collect();
            let mut labels: Vec<u8> = (0..n).map(|_| r.gen_range(0..2u8)).collect();
            labels[0] = 1;
            labels[1] = 0;
            let base = roc_auc(&scores, &labels).unwrap();
            let exp: Vec<f64> = scores.iter().map(|s| s.exp()).collect();
            let affine: Vec<f64> = scores.iter().map(|s| 3.5 * s + 11.0).collect();
            assert_eq!(base, roc_auc(&exp, &labels).unwrap());
            assert_eq!(base, roc_auc(&affine, &labels).unwrap());
        }
    }

    #[test]
    fn complement_symmetry_is_exact() {
        let mut r = rng::stream(56);
        for _ in 0..50 {
            let n = r.gen_range(4..40usize);
            let scores: Vec<f64> = (0..n).map(|_| r.gen_range(0..6) as f64).collect();
            let mut labels: Vec<u8> = (0..n).map(|_| r.gen_range(0..2u8)).collect();
            labels[0] = 1;
            labels[1] = 0;
            let flipped: Vec<u8> = labels.iter().map(|&l| 1 - l).collect();
            let a = roc_auc(&scores, &labels).unwrap();
            let b = roc_auc(&scores, &flipped).unwrap();
            assert_eq!(a + b, 1.0, "a={a} b={b}");
        }
    }

    #[test]
    fn mean_std_examples() {
        assert_eq!(mean_std(&[5.0]).unwrap(), (5.0, 0.0));
        let (m, s) = mean_std(&[1.0, 3.0]).unwrap();
        assert_eq!(m, 2.0);
        assert!((s - 2.0f64.sqrt()).abs() < 1e-15);
        assert!(mean_std(&[]).is_err());
    }

    #[test]
    fn mean_std_matches_two_pass_oracle_on_ninety_values() {
        let mut r = rng::stream(90);
        let values: Vec<f64> = (0..90).map(|_| r.gen_range(0.6..0.9)).collect();
        let (m, s) = mean_std(&values).unwrap();
        // spreadsheet-style oracle: sum of squares identity
        let n = values.len() as f64;
        let sum: f64 = values.iter().sum();
        let sumsq: f64 = values.iter().map(|v| v * v).sum();
        let om = sum / n;
        let os = ((sumsq - n * om * om) / (n - 1.0)).sqrt();
        assert!((m - om).abs() < 1e-10);
        assert!((s - os).abs() < 1e-10);
    }
}
