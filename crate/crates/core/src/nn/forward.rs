//! Forward pass and loss functions.

use crate::error::{Error, Result};

use super::{check_shapes, layer_spans, Activation, ArchitectureDescriptor, Batch, FlatWeights};

/// Probabilities are clamped strictly inside (0,1); the ceiling is the
/// largest f64 below 1.
const PROB_FLOOR: f64 = 1e-300;
const PROB_CEIL: f64 = 1.0 - f64::EPSILON / 2.0;

/// Clamp applied to probabilities before the logs inside the BCE loss.
const BCE_EPS: f64 = 1e-12;

fn sigmoid(z: f64) -> f64 {
    (1.0 / (1.0 + (-z).exp())).clamp(PROB_FLOOR, PROB_CEIL)
}

/// Per-layer post-activation values for a whole batch, kept for backprop.
pub(super) struct ForwardTrace {
    /// `acts[0]` is the promoted input; `acts[l]` for l >= 1 is layer l-1's
    /// output, each row-major with `n_samples` rows.
    pub acts: Vec<Vec<f64>>,
    pub logits: Vec<f64>,
}

/// Dense forward pass in f64 with ascending-index dot products.
pub(super) fn run_forward(
    arch: &ArchitectureDescriptor,
    weights: &[f32],
    features: &[f32],
    n_samples: usize,
) -> ForwardTrace {
    let spans = layer_spans(arch);
    let activation = arch.activation();
    let mut acts: Vec<Vec<f64>> = Vec::with_capacity(spans.len());
    acts.push(features.iter().map(|&v| v as f64).collect());

    let mut logits = Vec::new();
    for (l, span) in spans.iter().enumerate() {
        let input = &acts[l];
        let is_head = l == spans.len() - 1;
        let mut output = vec![0.0f64; n_samples * span.fan_out];
        for m in 0..n_samples {
            let row = &input[m * span.fan_in..(m + 1) * span.fan_in];
            for o in 0..span.fan_out {
                let mut sum = weights[span.bias_start + o] as f64;
                let w_row = span.weight_start + o * span.fan_in;
                for i in 0..span.fan_in {
                    sum += weights[w_row + i] as f64 * row[i];
                }
                output[m * span.fan_out + o] = if is_head {
                    sum
                } else {
                    match activation {
                        Activation::Relu => sum.max(0.0),
                        Activation::Tanh => sum.tanh(),
                    }
                };
            }
        }
        if is_head {
            logits = output;
        } else {
            acts.push(output);
        }
    }
    ForwardTrace { acts, logits }
}

/// Raw head outputs (one logit per sample). Used directly by the pretext
/// regression loss.
pub fn forward_logits(
    arch: &ArchitectureDescriptor,
    weights: &FlatWeights,
    batch: &Batch,
) -> Result<Vec<f64>> {
    check_shapes(arch, weights, batch)?;
    Ok(run_forward(arch, weights.values(), batch.features(), batch.len()).logits)
}

/// Predicted positive-class probabilities, strictly inside (0,1).
pub fn forward(
    arch: &ArchitectureDescriptor,
    weights: &FlatWeights,
    batch: &Batch,
) -> Result<Vec<f64>> {
    let logits = forward_logits(arch, weights, batch)?;
    Ok(logits.into_iter().map(sigmoid).collect())
}

/// Mean binary cross-entropy. Probabilities are clamped to
/// [1e-12, 1 - 1e-12] before the logs.
pub fn loss_bce(probs: &[f64], labels: &[u8]) -> Result<f64> {
    if probs.is_empty() {
        return Err(Error::Shape("loss_bce: empty input".into()));
    }
    if probs.len() != labels.len() {
        return Err(Error::Shape(format!(
            "loss_bce: {} probabilities vs {} labels",
            probs.len(),
            labels.len()
        )));
    }
    let mut sum = 0.0f64;
    for (&p, &y) in probs.iter().zip(labels) {
        let p = p.clamp(BCE_EPS, 1.0 - BCE_EPS);
        sum += if y == 1 { -p.ln() } else { -(1.0 - p).ln() };
    }
    Ok(sum / probs.len() as f64)
}

/// Mean squared error between predictions and targets.
pub fn loss_mse(preds: &[f64], targets: &[f32]) -> Result<f64> {
    if preds.is_empty() {
        return Err(Error::Shape("loss_mse: empty input".into()));
    }
    if preds.len() != targets.len() {
        return Err(Error::Shape(format!(
            "loss_mse: {} predictions vs {} targets",
            preds.len(),
            targets.len()
        )));
    }
    let mut sum = 0.0f64;
    for (&p, &t) in preds.iter().zip(targets) {
        let d = p - t as f64;
        sum += d * d;
    }
    Ok(sum / preds.len() as f64)
}

pub(super) fn bce_eps() -> f64 {
    BCE_EPS
}

#[cfg(test)]
mod tests {
    use super::super::{flatten, LayerParams, StructuredWeights};
    use super::*;
    use crate::rng;
    use rand::Rng;

    fn arch(input: usize, hidden: &[usize], activation: Activation) -> ArchitectureDescriptor {
        ArchitectureDescriptor::new(input, hidden.to_vec(), activation).unwrap()
    }

    fn batch(rows: &[&[f32]], labels: &[u8]) -> Batch {
        let input_dim = rows[0].len();
        let features: Vec<f32> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Batch::new(features, input_dim, labels.to_vec(), vec![0.0; labels.len()]).unwrap()
    }

    #[test]
    fn zero_weights_give_exactly_half() {
        let a = arch(3, &[4, 2], Activation::Relu);
        let w = FlatWeights::zeros(a.param_count());
        let b = batch(&[&[1.0, -2.0, 0.5], &[0.0, 0.0, 0.0]], &[0, 1]);
        let p = forward(&a, &w, &b).unwrap();
        assert_eq!(p, vec![0.5, 0.5]);
    }

    #[test]
    fn tanh_pass_through_at_zero_input_gives_half() {
        // 1-1-1 tanh net, identity-like pass-through: w=1, b=0 everywhere.
        let a = arch(1, &[1], Activation::Tanh);
        let sw = StructuredWeights {
            layers: vec![
                LayerParams {
                    weights: vec![1.0],
                    biases: vec![0.0],
                },
                LayerParams {
                    weights: vec![1.0],
                    biases: vec![0.0],
                },
            ],
        };
        let w = flatten(&a, &sw).unwrap();
        let b = batch(&[&[0.0]], &[1]);
        assert_eq!(forward(&a, &w, &b).unwrap(), vec![0.5]);
    }

    /// Independent scalar re-implementation of the forward pass.
    fn oracle_forward(
        a: &ArchitectureDescriptor,
        w: &[f32],
        x: &[f32],
    ) -> f64 {
        let mut h: Vec<f64> = x.iter().map(|&v| v as f64).collect();
        let mut off = 0usize;
        let dims = a.layer_dims();
        for (l, &(fan_in, fan_out)) in dims.iter().enumerate() {
            let mut next = vec![0.0f64; fan_out];
            for (o, slot) in next.iter_mut().enumerate() {
                let mut z = w[off + fan_in * fan_out + o] as f64;
                for (i, &hi) in h.iter().enumerate() {
                    z += w[off + o * fan_in + i] as f64 * hi;
                }
                *slot = if l + 1 == dims.len() {
                    z
                } else {
                    match a.activation() {
                        Activation::Relu => z.max(0.0),
                        Activation::Tanh => z.tanh(),
                    }
                };
            }
            h = next;
            off += (fan_in + 1) * fan_out;
        }
        1.0 / (1.0 + (-h[0]).exp())
    }

    #[test]
    fn forward_matches_independent_oracle() {
        let a = arch(2, &[3], Activation::Relu);
        let mut r = rng::stream(0);
        let w = FlatWeights::new(
            (0..a.param_count())
                .map(|_| r.gen_range(-1.0f32..1.0f32))
                .collect(),
        );
        let rows: Vec<Vec<f32>> = (0..4)
            .map(|_| (0..2).map(|_| r.gen_range(-2.0..2.0)).collect())
            .collect();
        let row_refs: Vec<&[f32]> = rows.iter().map(|r| r.as_slice()).collect();
        let b = batch(&row_refs, &[0, 1, 0, 1]);
        let probs = forward(&a, &w, &b).unwrap();
        for (m, &p) in probs.iter().enumerate() {
            let expected = oracle_forward(&a, w.values(), b.row(m));
            assert!((p - expected).abs() <= 1e-12, "sample {m}: {p} vs {expected}");
        }
    }

    #[test]
    fn probabilities_stay_strictly_inside_unit_interval() {
        let a = arch(1, &[1], Activation::Relu);
        // enormous weights force saturated logits
        let w = FlatWeights::new(vec![1e30, 1e30, 1e30, 1e30]);
        let b = batch(&[&[1e5], &[-1e5]], &[1, 0]);
        for p in forward(&a, &w, &b).unwrap() {
            assert!(p > 0.0 && p < 1.0, "p = {p}");
        }
    }

    #[test]
    fn bce_examples() {
        let ln2 = std::f64::consts::LN_2;
        assert!((loss_bce(&[0.5, 0.5], &[0, 1]).unwrap() - ln2).abs() < 1e-15);
        assert!(loss_bce(&[1.0 - 1e-12], &[1]).unwrap() < 1e-11);
        // hand oracle: mean of -ln 0.9, -ln 0.8, -ln 0.7
        let expected = (-(0.9f64.ln()) - 0.8f64.ln() - 0.7f64.ln()) / 3.0;
        let got = loss_bce(&[0.9, 0.2, 0.7], &[1, 0, 1]).unwrap();
        assert!((got - expected).abs() < 1e-15);
    }

    #[test]
    fn bce_rejects_empty_and_mismatched_input() {
        assert!(matches!(loss_bce(&[], &[]), Err(Error::Shape(_))));
        assert!(matches!(loss_bce(&[0.5], &[0, 1]), Err(Error::Shape(_))));
    }

    #[test]
    fn forward_rejects_shape_mismatches() {
        let a = arch(3, &[2], Activation::Relu);
        let b = batch(&[&[1.0, 2.0, 3.0]], &[1]);
        let short = FlatWeights::zeros(a.param_count() - 1);
        assert!(matches!(forward(&a, &short, &b), Err(Error::Shape(_))));
        let wide = batch(&[&[1.0, 2.0]], &[1]);
        let w = FlatWeights::zeros(a.param_count());
        assert!(matches!(forward(&a, &w, &wide), Err(Error::Shape(_))));
    }
}
