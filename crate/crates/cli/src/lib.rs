//! Command implementations behind the `basinlab` binary.
//!
//! Each command is an ordinary function over an [`ExperimentConfig`] so the
//! pipeline can be driven (and tested) without spawning a process. All
//! emitted artifacts — CSVs, SVGs, checkpoints, manifests — are
//! deterministic functions of the config: reruns produce byte-identical
//! files.

pub mod commands;
pub mod manifest;
pub mod plot;
pub mod profile;

use basinlab::Error;

/// Process exit codes: 0 success, 2 config, 3 data, 4 training, 5 i/o and
/// checkpoint, 1 anything else.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => 2,
        Error::Data(_) => 3,
        Error::Training(_) => 4,
        Error::Io(_) | Error::Checkpoint(_) => 5,
        Error::Shape(_) | Error::Metric(_) => 1,
    }
}
