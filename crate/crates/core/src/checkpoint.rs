//! Binary checkpoint files.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic "BPCK" | version u32 | header_len u32 | header JSON (UTF-8)
//! | param_count f32 payload values | CRC-32 of header+payload, u32
//! ```
//!
//! The header carries the architecture, lineage, epoch, tag, validation
//! score, config digest, task id, and declared parameter count; the payload
//! is the flat weight vector in canonical order. Save followed by load
//! reproduces a checkpoint bit-for-bit.

use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

use crate::error::{CheckpointError, Error, Result};
use crate::nn::{ArchitectureDescriptor, FlatWeights};
use crate::train::{CheckpointTag, Lineage, ModelCheckpoint};

const MAGIC: &[u8; 4] = b"BPCK";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct HeaderV1 {
    arch: ArchitectureDescriptor,
    lineage: Lineage,
    epoch: usize,
    tag: CheckpointTag,
    val_auc_at_save: f64,
    train_config_digest: String,
    task_id: String,
    param_count: usize,
}

/// Serializes a checkpoint to its on-disk byte layout.
pub fn checkpoint_to_bytes(checkpoint: &ModelCheckpoint) -> Result<Vec<u8>> {
    let header = HeaderV1 {
        arch: checkpoint.arch.clone(),
        lineage: checkpoint.lineage.clone(),
        epoch: checkpoint.epoch,
        tag: checkpoint.tag,
        val_auc_at_save: checkpoint.val_auc_at_save,
        train_config_digest: checkpoint.train_config_digest.clone(),
        task_id: checkpoint.task_id.clone(),
        param_count: checkpoint.weights.len(),
    };
    let header_bytes = serde_json::to_vec(&header)
        .map_err(|e| Error::Checkpoint(CheckpointError::Header(e.to_string())))?;

    let mut bytes =
        Vec::with_capacity(16 + header_bytes.len() + 4 * checkpoint.weights.len());
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&VERSION.to_le_bytes());
    bytes.extend_from_slice(&(header_bytes.len() as u32).to_le_bytes());
    bytes.extend_from_slice(&header_bytes);
    for v in checkpoint.weights.values() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    let crc = crc32fast::hash(&bytes[12..]);
    bytes.extend_from_slice(&crc.to_le_bytes());
    Ok(bytes)
}

pub fn save_checkpoint(checkpoint: &ModelCheckpoint, path: &Path) -> Result<()> {
    let bytes = checkpoint_to_bytes(checkpoint)?;
    let mut file = std::fs::File::create(path)?;
    file.write_all(&bytes)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<ModelCheckpoint> {
    checkpoint_from_bytes(&std::fs::read(path)?)
}

pub fn checkpoint_from_bytes(bytes: &[u8]) -> Result<ModelCheckpoint> {
    if bytes.len() < 4 {
        return Err(CheckpointError::Truncated("file shorter than the magic".into()).into());
    }
    if &bytes[0..4] != MAGIC {
        return Err(CheckpointError::BadMagic.into());
    }
    if bytes.len() < 16 {
        return Err(CheckpointError::Truncated("file shorter than the fixed fields".into()).into());
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(CheckpointError::Version {
            found: version,
            supported: VERSION,
        }
        .into());
    }
    let header_len = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let body_end = bytes.len() - 4;
    if 12 + header_len > body_end {
        return Err(CheckpointError::Truncated(format!(
            "header of {header_len} bytes does not fit in the file"
        ))
        .into());
    }

    // checksum first, so any corruption is reported as such
    let stored_crc = u32::from_le_bytes(bytes[body_end..].try_into().unwrap());
    let actual_crc = crc32fast::hash(&bytes[12..body_end]);
    if stored_crc != actual_crc {
        return Err(CheckpointError::Checksum.into());
    }

    let header: HeaderV1 = serde_json::from_slice(&bytes[12..12 + header_len])
        .map_err(|e| CheckpointError::Header(e.to_string()))?;
    header
        .arch
        .validate()
        .map_err(|e| CheckpointError::Header(e.to_string()))?;
    if header.arch.param_count() != header.param_count {
        return Err(CheckpointError::Header(format!(
            "declared param_count {} does not match the architecture's {}",
            header.param_count,
            header.arch.param_count()
        ))
        .into());
    }

    let payload = &bytes[12 + header_len..body_end];
    if payload.len() != 4 * header.param_count {
        return Err(CheckpointError::Truncated(format!(
            "payload holds {} bytes, header declares {} parameters",
            payload.len(),
            header.param_count
        ))
        .into());
    }
    let values: Vec<f32> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();

    Ok(ModelCheckpoint {
        arch: header.arch,
        weights: FlatWeights::new(values),
        lineage: header.lineage,
        epoch: header.epoch,
        tag: header.tag,
        val_auc_at_save: header.val_auc_at_save,
        train_config_digest: header.train_config_digest,
        task_id: header.task_id,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Activation;
    use rand::Rng;

    fn sample_checkpoint(seed: u64) -> ModelCheckpoint {
        let arch = ArchitectureDescriptor::new(4, vec![5, 3], Activation::Relu).unwrap();
        let mut r = crate::rng::stream(seed);
        let mut values: Vec<f32> = (0..arch.param_count())
            .map(|_| r.gen_range(-2.0f32..2.0))
            .collect();
        // awkward bit patterns must survive the round trip
        values[0] = -0.0;
        values[1] = f32::MIN_POSITIVE / 2.0;
        ModelCheckpoint {
            arch,
            weights: FlatWeights::new(values),
            lineage: Lineage::Transfer {
                pretrain_id: "pt-0123456789ab".into(),
            },
            epoch: 59,
            tag: CheckpointTag::Best,
            val_auc_at_save: 0.87319,
            train_config_digest: "deadbeefdeadbeefdeadbeefdeadbeef".into(),
            task_id: "syn-7-d4".into(),
        }
    }

    #[test]
    fn round_trip_is_bitwise_lossless() {
        let dir = tempfile::tempdir().unwrap();
        for seed in 0..5 {
            let cp = sample_checkpoint(seed);
            let path = dir.path().join(format!("cp{seed}.bpck"));
            save_checkpoint(&cp, &path).unwrap();
            let back = load_checkpoint(&path).unwrap();
            assert!(cp.weights.bits_eq(&back.weights));
            assert_eq!(cp.arch, back.arch);
            assert_eq!(cp.lineage, back.lineage);
            assert_eq!(cp.epoch, back.epoch);
            assert_eq!(cp.tag, back.tag);
            assert_eq!(cp.val_auc_at_save.to_bits(), back.val_auc_at_save.to_bits());
            assert_eq!(cp.train_config_digest, back.train_config_digest);
            assert_eq!(cp.task_id, back.task_id);
        }
    }

    #[test]
    fn save_is_byte_stable() {
        let cp = sample_checkpoint(1);
        assert_eq!(
            checkpoint_to_bytes(&cp).unwrap(),
            checkpoint_to_bytes(&cp).unwrap()
        );
    }

    #[test]
    fn flipped_payload_byte_fails_the_checksum() {
        let cp = sample_checkpoint(2);
        let mut bytes = checkpoint_to_bytes(&cp).unwrap();
        let payload_start = bytes.len() - 4 - 4 * cp.weights.len();
        bytes[payload_start + 7] ^= 0x10;
        match checkpoint_from_bytes(&bytes) {
            Err(Error::Checkpoint(CheckpointError::Checksum)) => {}
            other => panic!("expected checksum error, got {other:?}"),
        }
    }

    #[test]
    fn flipped_header_byte_fails_the_checksum() {
        let cp = sample_checkpoint(2);
        let mut bytes = checkpoint_to_bytes(&cp).unwrap();
        bytes[20] ^= 0x01;
        assert!(matches!(
            checkpoint_from_bytes(&bytes),
            Err(Error::Checkpoint(CheckpointError::Checksum))
        ));
    }

    #[test]
    fn unsupported_version_is_named() {
        let cp = sample_checkpoint(3);
        let mut bytes = checkpoint_to_bytes(&cp).unwrap();
        bytes[4..8].copy_from_slice(&999u32.to_le_bytes());
        match checkpoint_from_bytes(&bytes) {
            Err(Error::Checkpoint(CheckpointError::Version { found, supported })) => {
                assert_eq!(found, 999);
                assert_eq!(supported, VERSION);
            }
            other => panic!("expected version error, got {other:?}"),
        }
    }

    #[test]
    fn bad_magic_is_rejected() {
        let cp = sample_checkpoint(4);
        let mut bytes = checkpoint_to_bytes(&cp).unwrap();
        bytes[0] = b'X';
        assert!(matches!(
            checkpoint_from_bytes(&bytes),
            Err(Error::Checkpoint(CheckpointError::BadMagic))
        ));
    }

    #[test]
    fn truncated_file_is_rejected() {
        let cp = sample_checkpoint(5);
        let bytes = checkpoint_to_bytes(&cp).unwrap();
        for cut in [2, 10, bytes.len() / 2] {
            assert!(matches!(
                checkpoint_from_bytes(&bytes[..cut]),
                Err(Error::Checkpoint(
                    CheckpointError::Truncated(_) | CheckpointError::Checksum
                ))
            ));
        }
    }
}
