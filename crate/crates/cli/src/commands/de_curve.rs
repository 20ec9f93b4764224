//! `de-curve`: bootstrap ensemble curves per lineage from a pool manifest.

use std::path::{Path, PathBuf};

use basinlab::checkpoint::load_checkpoint;
use basinlab::config::ExperimentConfig;
use basinlab::ensemble::{
    bootstrap_de_curve, plateau_t, write_ensemble_curve_csv, write_prediction_matrix_csv,
    EnsembleCurve, PlateauResult, PredictionMatrix,
};
use basinlab::error::{Error, Result};
use basinlab::train::ModelCheckpoint;

use crate::manifest::{read_manifest, ManifestRow};
use crate::plot::{de_curve_svg, DeCurveEntry};

use super::{eval_partition, load_dataset};

/// Plateau criterion: T* captures at least 80% of the total ensemble gain.
pub const PLATEAU_DELTA: f64 = 0.2;

#[derive(Debug)]
pub struct DeCurveArtifacts {
    /// Per lineage ("ri", "tl"): curve and plateau.
    pub curves: Vec<(String, EnsembleCurve, PlateauResult)>,
    pub svg_path: PathBuf,
}

pub fn cmd_de_curve(cfg: &ExperimentConfig, manifest_path: &Path) -> Result<DeCurveArtifacts> {
    let rows = read_manifest(manifest_path)?;
    let data = load_dataset(cfg)?;
    let eval = eval_partition(cfg, &data);
    let dir = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(&cfg.output_dir)?;

    let mut curves = Vec::new();
    let mut loaded: Vec<(String, Vec<(String, ModelCheckpoint)>)> = Vec::new();
    for lineage in ["ri", "tl"] {
        let mut last_rows: Vec<&ManifestRow> = rows
            .iter()
            .filter(|r| r.lineage == lineage && r.tag == "last")
            .collect();
        last_rows.sort_by_key(|r| r.model_index);
        if last_rows.len() < 2 {
            return Err(Error::Data(format!(
                "lineage {lineage}: need >=2 models for an ensemble curve, found {}",
                last_rows.len()
            )));
        }
        let mut models = Vec::with_capacity(last_rows.len());
        for row in last_rows {
            let cp = load_checkpoint(&dir.join(&row.path))?;
            if cp.task_id != data.metadata.task_id {
                return Err(Error::Data(format!(
                    "manifest/checkpoint mismatch: {} was trained on task \"{}\" but the config describes \"{}\"",
                    row.model_id, cp.task_id, data.metadata.task_id
                )));
            }
            models.push((row.model_id.clone(), cp));
        }
        loaded.push((lineage.to_string(), models));
    }

    for (lineage, models) in &loaded {
        let refs: Vec<(String, &ModelCheckpoint)> =
            models.iter().map(|(id, cp)| (id.clone(), cp)).collect();
        let pm = PredictionMatrix::from_checkpoints(&refs, &eval.batch, &eval.subject_ids)?;
        write_prediction_matrix_csv(
            &cfg.output_dir.join(format!("de_predictions_{lineage}.csv")),
            &cfg.output_dir.join(format!("de_labels_{lineage}.csv")),
            &pm,
        )?;
        let curve = bootstrap_de_curve(
            &pm,
            &cfg.ensemble.t_grid,
            cfg.ensemble.resamples,
            cfg.ensemble.seed,
        )?;
        write_ensemble_curve_csv(
            &cfg.output_dir.join(format!("de_curve_{lineage}.csv")),
            &curve,
        )?;
        let plateau = plateau_t(&curve, PLATEAU_DELTA)?;
        curves.push((lineage.clone(), curve, plateau));
    }

    let entries: Vec<DeCurveEntry<'_>> = curves
        .iter()
        .map(|(lineage, curve, plateau)| DeCurveEntry {
            label: lineage,
            color: if lineage == "ri" { "#ff7f0e" } else { "#1f77b4" },
            curve,
            t_star: plateau.t_star,
        })
        .collect();
    let svg_path = cfg.output_dir.join("de_curve.svg");
    std::fs::write(&svg_path, de_curve_svg(&entries))?;

    Ok(DeCurveArtifacts { curves, svg_path })
}
