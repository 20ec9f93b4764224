//! Pool manifest: one CSV row per emitted checkpoint.
//!
//! Paths are stored relative to the manifest's directory so a run directory
//! can be moved (and so reruns into different directories emit identical
//! bytes).

use std::path::{Path, PathBuf};

use basinlab::checkpoint::load_checkpoint;
use basinlab::error::{Error, Result};
use basinlab::train::{CheckpointTag, ModelCheckpoint, PoolMember};

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    pub model_id: String,
    /// Relative to the manifest's directory.
    pub path: PathBuf,
    /// "ri" or "tl".
    pub lineage: String,
    /// "last" or "best".
    pub tag: String,
    pub model_index: usize,
    pub val_auc: f64,
    /// Empty for random-init models.
    pub pretrain_id: String,
    pub task_id: String,
}

pub fn write_manifest(path: &Path, rows: &[ManifestRow]) -> Result<()> {
    let mut out =
        String::from("model_id,path,lineage,tag,model_index,val_auc,pretrain_id,task_id\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.model_id,
            r.path.display(),
            r.lineage,
            r.tag,
            r.model_index,
            r.val_auc,
            r.pretrain_id,
            r.task_id
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        let field = |i: usize| -> Result<&str> {
            record
                .get(i)
                .ok_or_else(|| Error::Data(format!("{}: short manifest row", path.display())))
        };
        rows.push(ManifestRow {
            model_id: field(0)?.to_string(),
            path: PathBuf::from(field(1)?),
            lineage: field(2)?.to_string(),
            tag: field(3)?.to_string(),
            model_index: field(4)?
                .parse()
                .map_err(|_| Error::Data("bad model_index in manifest".into()))?,
            val_auc: field(5)?
                .parse()
                .map_err(|_| Error::Data("bad val_auc in manifest".into()))?,
            pretrain_id: field(6)?.to_string(),
            task_id: field(7)?.to_string(),
        });
    }
    if rows.is_empty() {
        return Err(Error::Data(format!("{}: empty manifest", path.display())));
    }
    Ok(rows)
}

/// Checks a loaded checkpoint against its manifest row.
fn check_row(row: &ManifestRow, cp: &ModelCheckpoint) -> Result<()> {
    let tag = match cp.tag {
        CheckpointTag::Last => "last",
        CheckpointTag::Best => "best",
    };
    let mismatch = |what: &str| {
        Error::Data(format!(
            "manifest/checkpoint mismatch for {}: {what}",
            row.model_id
        ))
    };
    if tag != row.tag {
        return Err(mismatch("tag differs"));
    }
    if cp.lineage.short_tag() != row.lineage {
        return Err(mismatch("lineage differs"));
    }
    if cp.task_id != row.task_id {
        return Err(mismatch("task differs"));
    }
    if cp.lineage.pretrain_id().unwrap_or("") != row.pretrain_id {
        return Err(mismatch("pretrain id differs"));
    }
    Ok(())
}

/// The RI and TL pools reconstructed from a manifest, ordered by model index.
pub struct LoadedPools {
    pub ri: Vec<PoolMember>,
    pub tl: Vec<PoolMember>,
}

pub fn load_pools(manifest_path: &Path, rows: &[ManifestRow]) -> Result<LoadedPools> {
    let dir = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let mut by_key: std::collections::BTreeMap<(String, usize), (Option<ModelCheckpoint>, Option<ModelCheckpoint>)> =
        Default::default();
    for row in rows {
        let cp = load_checkpoint(&dir.join(&row.path))?;
        check_row(row, &cp)?;
        let slot = by_key
            .entry((row.lineage.clone(), row.model_index))
            .or_default();
        match row.tag.as_str() {
            "last" => slot.0 = Some(cp),
            "best" => slot.1 = Some(cp),
            other => return Err(Error::Data(format!("unknown manifest tag \"{other}\""))),
        }
    }
    let mut pools = LoadedPools {
        ri: Vec::new(),
        tl: Vec::new(),
    };
    for ((lineage, index), (last, best)) in by_key {
        let (Some(last), Some(best)) = (last, best) else {
            return Err(Error::Data(format!(
                "manifest is missing the last or best checkpoint of {lineage}-{index:02}"
            )));
        };
        let member = PoolMember { index, last, best };
        match lineage.as_str() {
            "ri" => pools.ri.push(member),
            "tl" => pools.tl.push(member),
            other => return Err(Error::Data(format!("unknown lineage \"{other}\""))),
        }
    }
    Ok(pools)
}
