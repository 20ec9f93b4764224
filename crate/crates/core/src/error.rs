//! Error types shared across the toolkit.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Dimension or length disagreement between two inputs.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Invalid or inconsistent configuration.
    #[error("invalid config: {0}")]
    Config(String),

    /// Dataset generation, splitting, or ingestion failure.
    #[error("data error: {0}")]
    Data(String),

    /// Metric is undefined for the given input.
    #[error("metric error: {0}")]
    Metric(String),

    /// A training run aborted (e.g. non-finite loss) or a pool had too many failures.
    #[error("training error: {0}")]
    Training(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(#[from] CheckpointError),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Load failures of the binary checkpoint format, one variant per category
/// so callers can distinguish corruption modes.
#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("bad magic bytes (not a checkpoint file)")]
    BadMagic,

    #[error("unsupported format version {found} (supported: {supported})")]
    Version { found: u32, supported: u32 },

    #[error("checksum mismatch (file corrupted)")]
    Checksum,

    #[error("truncated or length-inconsistent file: {0}")]
    Truncated(String),

    #[error("malformed header: {0}")]
    Header(String),
}
