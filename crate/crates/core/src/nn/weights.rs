//! Conversion between structured per-layer parameters and the canonical
//! flat vector.
//!
//! Flat layout, stable across versions: for each layer in order (hidden
//! layers first, head last) the weight matrix in row-major order with shape
//! (fan_out, fan_in), then the fan_out biases.

use crate::error::{Error, Result};

use super::{layer_spans, ArchitectureDescriptor, FlatWeights};

/// One dense layer's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    /// Row-major (fan_out, fan_in): row `o` holds unit `o`'s incoming weights.
    pub weights: Vec<f32>,
    pub biases: Vec<f32>,
}

/// Per-layer view of a full parameter set, head included as the last layer.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredWeights {
    pub layers: Vec<LayerParams>,
}

/// Splits a flat vector into per-layer matrices and biases.
pub fn unflatten(
    arch: &ArchitectureDescriptor,
    flat: &FlatWeights,
) -> Result<StructuredWeights> {
    if flat.len() != arch.param_count() {
        return Err(Error::Shape(format!(
            "unflatten: {} values for a {}-parameter architecture",
            flat.len(),
            arch.param_count()
        )));
    }
    let values = flat.values();
    let layers = layer_spans(arch)
        .iter()
        .map(|s| LayerParams {
            weights: values[s.weight_start..s.bias_start].to_vec(),
            biases: values[s.bias_start..s.bias_start + s.fan_out].to_vec(),
        })
        .collect();
    Ok(StructuredWeights { layers })
}

/// Concatenates per-layer parameters back into canonical flat order.
pub fn flatten(
    arch: &ArchitectureDescriptor,
    structured: &StructuredWeights,
) -> Result<FlatWeights> {
    let dims = arch.layer_dims();
    if structured.layers.len() != dims.len() {
        return Err(Error::Shape(format!(
            "flatten: {} layers for a {}-layer architecture",
            structured.layers.len(),
            dims.len()
        )));
    }
    let mut values = Vec::with_capacity(arch.param_count());
    for (layer, &(fan_in, fan_out)) in structured.layers.iter().zip(&dims) {
        if layer.weights.len() != fan_in * fan_out || layer.biases.len() != fan_out {
            return Err(Error::Shape(format!(
                "flatten: layer shape ({}, {}) does not match expected ({}, {})",
                layer.weights.len(),
                layer.biases.len(),
                fan_in * fan_out,
                fan_out
            )));
        }
        values.extend_from_slice(&layer.weights);
        values.extend_from_slice(&layer.biases);
    }
    Ok(FlatWeights::new(values))
}
