//! Desk-scale toolkit for two analyses of classifier training variability:
//!
//! 1. **Deep-ensemble averaging** — bootstrap resampling of per-model test
//!    predictions to measure how the mean and spread of ensemble ROC-AUC
//!    change with the number of averaged models, and where the gain plateaus.
//! 2. **Weight-space interpolation** — ROC-AUC along the linear path between
//!    two checkpoints, summarized as a barrier height, to test whether pairs
//!    of trained models ended in the same loss basin.
//!
//! The model under study is a small fully-connected binary classifier with
//! exact analytic gradients and a canonical flat-weight layout, so checkpoint
//! weights are first-class vectors that can be averaged and interpolated.
//! Training pools compare fine-tuning from a shared pretrained encoder
//! against training from random initialization.
//!
//! Everything is seeded: datasets, initializations, shuffles, bootstrap
//! draws, and pair sampling are pure functions of their configuration, and
//! repeat runs produce bit-identical results.

pub mod checkpoint;
pub mod config;
pub mod data;
pub mod ensemble;
pub mod error;
pub mod landscape;
pub mod metrics;
pub mod nn;
pub mod rng;
pub mod train;

pub use error::{CheckpointError, Error, Result};
