//! Exact analytic gradients via reverse-mode accumulation.

use crate::error::Result;

use super::forward::{bce_eps, run_forward};
use super::{check_shapes, layer_spans, Activation, ArchitectureDescriptor, Batch, FlatWeights};

/// Which mean loss the gradient is taken of.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    /// Binary cross-entropy of sigmoid(logit) against the batch labels.
    Bce,
    /// Squared error of the raw logit against the auxiliary covariate.
    Pretext,
}

/// Gradient of the mean loss with respect to every parameter, in canonical
/// flat order. Internally f64; the result is rounded to f32 once at the end.
pub fn gradient(
    arch: &ArchitectureDescriptor,
    weights: &FlatWeights,
    batch: &Batch,
    loss: LossKind,
) -> Result<Vec<f32>> {
    Ok(loss_and_gradient(arch, weights, batch, loss)?.1)
}

/// Mean loss and its gradient from a single forward/backward pass.
pub fn loss_and_gradient(
    arch: &ArchitectureDescriptor,
    weights: &FlatWeights,
    batch: &Batch,
    loss: LossKind,
) -> Result<(f64, Vec<f32>)> {
    let (value, grad) = loss_and_gradient_f64(arch, weights, batch, loss)?;
    Ok((value, grad.into_iter().map(|g| g as f32).collect()))
}

pub(crate) fn loss_and_gradient_f64(
    arch: &ArchitectureDescriptor,
    weights: &FlatWeights,
    batch: &Batch,
    loss: LossKind,
) -> Result<(f64, Vec<f64>)> {
    check_shapes(arch, weights, batch)?;
    let n = batch.len();
    let w = weights.values();
    let trace = run_forward(arch, w, batch.features(), n);
    let spans = layer_spans(arch);
    let activation = arch.activation();

    // loss value and dL/dlogit per sample, mean-loss scaling included
    let mut loss_sum = 0.0f64;
    let mut delta: Vec<f64> = match loss {
        LossKind::Bce => {
            let eps = bce_eps();
            trace
                .logits
                .iter()
                .zip(batch.labels())
                .map(|(&z, &y)| {
                    let p = (1.0 / (1.0 + (-z).exp())).clamp(eps, 1.0 - eps);
                    loss_sum += if y == 1 { -p.ln() } else { -(1.0 - p).ln() };
                    (p - y as f64) / n as f64
                })
                .collect()
        }
        LossKind::Pretext => trace
            .logits
            .iter()
            .zip(batch.auxiliary())
            .map(|(&z, &a)| {
                let d = z - a as f64;
                loss_sum += d * d;
                2.0 * d / n as f64
            })
            .collect(),
    };
    let loss_value = loss_sum / n as f64;

    let mut grad = vec![0.0f64; arch.param_count()];
    for (l, span) in spans.iter().enumerate().rev() {
        let input = &trace.acts[l];
        let mut d_input = vec![0.0f64; n * span.fan_in];
        for m in 0..n {
            let in_row = &input[m * span.fan_in..(m + 1) * span.fan_in];
            for o in 0..span.fan_out {
                let dz = delta[m * span.fan_out + o];
                if dz == 0.0 {
                    continue;
                }
                grad[span.bias_start + o] += dz;
                let w_row = span.weight_start + o * span.fan_in;
                for i in 0..span.fan_in {
                    grad[w_row + i] += dz * in_row[i];
                    d_input[m * span.fan_in + i] += w[w_row + i] as f64 * dz;
                }
            }
        }
        if l == 0 {
            break;
        }
        // multiply by the activation derivative of the layer below, computed
        // from its stored output
        let below = &trace.acts[l];
        for (d, &h) in d_input.iter_mut().zip(below.iter()) {
            *d *= match activation {
                Activation::Relu => {
                    if h > 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                }
                Activation::Tanh => 1.0 - h * h,
            };
        }
        delta = d_input;
    }
    Ok((loss_value, grad))
}
