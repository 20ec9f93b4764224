//! Minimal fully-connected binary classifier.
//!
//! The network is a stack of dense layers with relu or tanh activations and
//! a single-logit head. Weights live in a canonical flat `f32` vector (see
//! [`FlatWeights`]) so checkpoints can be averaged and interpolated
//! element-wise. All arithmetic inside the forward and backward passes is
//! performed in `f64` with fixed ascending-index reduction order, which makes
//! every operation bit-deterministic across runs and thread counts.

mod forward;
mod gradient;
mod weights;

pub use forward::{forward, forward_logits, loss_bce, loss_mse};
pub use gradient::{gradient, loss_and_gradient, LossKind};
pub use weights::{flatten, unflatten, LayerParams, StructuredWeights};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Element-wise activation used by every hidden layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
}

impl std::fmt::Display for Activation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Activation::Relu => write!(f, "relu"),
            Activation::Tanh => write!(f, "tanh"),
        }
    }
}

/// Shape of the classifier: input width, hidden widths, activation.
///
/// The output layer is always a single logit. Two checkpoints are
/// interpolation-compatible iff their descriptors compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchitectureDescriptor {
    input_dim: usize,
    hidden_dims: Vec<usize>,
    activation: Activation,
}

impl ArchitectureDescriptor {
    pub fn new(
        input_dim: usize,
        hidden_dims: Vec<usize>,
        activation: Activation,
    ) -> Result<Self> {
        let arch = Self {
            input_dim,
            hidden_dims,
            activation,
        };
        arch.validate()?;
        Ok(arch)
    }

    /// Re-checks invariants; used after deserialization.
    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::Config("architecture: input_dim must be >= 1".into()));
        }
        if self.hidden_dims.is_empty() {
            return Err(Error::Config(
                "architecture: at least one hidden layer is required".into(),
            ));
        }
        if self.hidden_dims.contains(&0) {
            return Err(Error::Config(
                "architecture: hidden layer widths must be >= 1".into(),
            ));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_dims(&self) -> &[usize] {
        &self.hidden_dims
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    /// (fan_in, fan_out) of every dense layer, head included.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden_dims.len() + 1);
        let mut fan_in = self.input_dim;
        for &h in &self.hidden_dims {
            dims.push((fan_in, h));
            fan_in = h;
        }
        dims.push((fan_in, 1));
        dims
    }

    /// Total number of parameters: sum over layers of (fan_in + 1) * fan_out.
    pub fn param_count(&self) -> usize {
        self.layer_dims()
            .iter()
            .map(|(fan_in, fan_out)| (fan_in + 1) * fan_out)
            .sum()
    }
}

/// Offsets of one layer's parameters inside the flat vector.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LayerSpan {
    pub weight_start: usize,
    pub bias_start: usize,
    pub fan_in: usize,
    pub fan_out: usize,
}

/// Canonical layout: for each layer (hidden layers in order, then the head),
/// the weight matrix in row-major order with shape (fan_out, fan_in) —
/// row `o` holds the incoming weights of output unit `o` — followed by the
/// fan_out biases.
pub(crate) fn layer_spans(arch: &ArchitectureDescriptor) -> Vec<LayerSpan> {
    let mut spans = Vec::new();
    let mut offset = 0;
    for (fan_in, fan_out) in arch.layer_dims() {
        spans.push(LayerSpan {
            weight_start: offset,
            bias_start: offset + fan_in * fan_out,
            fan_in,
            fan_out,
        });
        offset += (fan_in + 1) * fan_out;
    }
    spans
}

/// Model parameters in canonical flat order (see [`layer_spans`] for the
/// layout). Stored as `f32`; promoted to `f64` inside numeric kernels.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatWeights(Vec<f32>);

impl FlatWeights {
    pub fn new(values: Vec<f32>) -> Self {
        Self(values)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn values(&self) -> &[f32] {
        &self.0
    }

    pub fn values_mut(&mut self) -> &mut [f32] {
        &mut self.0
    }

    pub fn into_values(self) -> Vec<f32> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Exact (bit-level) equality; `PartialEq` would treat -0.0 == 0.0.
    pub fn bits_eq(&self, other: &Self) -> bool {
        self.0.len() == other.0.len()
            && self
                .0
                .iter()
                .zip(&other.0)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// A batch of samples: row-major features, binary labels, and a continuous
/// auxiliary covariate used by the pretext task.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    features: Vec<f32>,
    labels: Vec<u8>,
    auxiliary: Vec<f32>,
    input_dim: usize,
}

impl Batch {
    pub fn new(
        features: Vec<f32>,
        input_dim: usize,
        labels: Vec<u8>,
        auxiliary: Vec<f32>,
    ) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::Shape("batch: input_dim must be >= 1".into()));
        }
        if features.len() != labels.len() * input_dim {
            return Err(Error::Shape(format!(
                "batch: {} feature values do not form {} rows of width {}",
                features.len(),
                labels.len(),
                input_dim
            )));
        }
        if auxiliary.len() != labels.len() {
            return Err(Error::Shape(format!(
                "batch: {} auxiliary values for {} labels",
                auxiliary.len(),
                labels.len()
            )));
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(Error::Shape("batch: labels must be 0 or 1".into()));
        }
        if features.iter().any(|v| !v.is_finite()) || auxiliary.iter().any(|v| !v.is_finite()) {
            return Err(Error::Shape("batch: non-finite feature or auxiliary value".into()));
        }
        Ok(Self {
            features,
            labels,
            auxiliary,
            input_dim,
        })
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn features(&self) -> &[f32] {
        &self.features
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.features[i * self.input_dim..(i + 1) * self.input_dim]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn auxiliary(&self) -> &[f32] {
        &self.auxiliary
    }

    /// New batch containing the given rows, in the given order.
    pub fn select(&self, rows: &[usize]) -> Batch {
        let mut features = Vec::with_capacity(rows.len() * self.input_dim);
        let mut labels = Vec::with_capacity(rows.len());
        let mut auxiliary = Vec::with_capacity(rows.len());
        for &r in rows {
            features.extend_from_slice(self.row(r));
            labels.push(self.labels[r]);
            auxiliary.push(self.auxiliary[r]);
        }
        Batch {
            features,
            labels,
            auxiliary,
            input_dim: self.input_dim,
        }
    }
}

/// Rejects weight/arch and batch/arch disagreements before a numeric kernel runs.
pub(crate) fn check_shapes(
    arch: &ArchitectureDescriptor,
    weights: &FlatWeights,
    batch: &Batch,
) -> Result<()> {
    if weights.len() != arch.param_count() {
        return Err(Error::Shape(format!(
            "weight vector has {} values, architecture needs {}",
            weights.len(),
            arch.param_count()
        )));
    }
    if batch.input_dim() != arch.input_dim() {
        return Err(Error::Shape(format!(
            "batch width {} does not match architecture input_dim {}",
            batch.input_dim(),
            arch.input_dim()
        )));
    }
    Ok(())
}
