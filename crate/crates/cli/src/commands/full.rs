//! `full`: dataset → pretrain → gamma tuning → pools → ensemble curves →
//! interpolation → summary.
//!
//! Stage progress is recorded in `run_status.txt`; the first failing stage
//! aborts the run with its error while everything already written stays on
//! disk.

use std::path::PathBuf;

use basinlab::config::ExperimentConfig;
use basinlab::data::{write_split_csv, DatasetSplit};
use basinlab::error::Result;
use basinlab::train::{tune_gamma, GammaReport, InitMode};

use super::de_curve::{cmd_de_curve, DeCurveArtifacts};
use super::interpolate::{cmd_interpolate, InterpolateArtifacts};
use super::load_dataset;
use super::train_pool::{run_pool_stage, run_pretrain_stage};

#[derive(Debug)]
pub struct FullArtifacts {
    pub gamma_ri: f64,
    pub gamma_tl: f64,
    pub de: DeCurveArtifacts,
    pub interpolation: InterpolateArtifacts,
    pub summary_txt: PathBuf,
    pub summary_csv: PathBuf,
}

struct StatusLog {
    path: PathBuf,
    lines: Vec<String>,
}

impl StatusLog {
    fn record(&mut self, line: String) -> Result<()> {
        self.lines.push(line);
        std::fs::write(&self.path, self.lines.join("\n") + "\n")?;
        Ok(())
    }

    fn stage<T>(&mut self, name: &str, result: Result<T>) -> Result<T> {
        match result {
            Ok(v) => {
                self.record(format!("{name}: ok"))?;
                Ok(v)
            }
            Err(e) => {
                self.record(format!("{name}: failed: {e}"))?;
                Err(e)
            }
        }
    }
}

pub fn cmd_full(cfg: &ExperimentConfig) -> Result<FullArtifacts> {
    std::fs::create_dir_all(&cfg.output_dir)?;
    let mut status = StatusLog {
        path: cfg.output_dir.join("run_status.txt"),
        lines: Vec::new(),
    };

    let data = status.stage("dataset", load_dataset(cfg))?;
    status.stage(
        "dataset-export",
        write_split_csv(&cfg.output_dir.join("dataset"), &data),
    )?;
    let pre = status.stage("pretrain", run_pretrain_stage(cfg, &data))?;

    let arch = cfg.arch()?;
    let tuning = status.stage("gamma-tuning", {
        let template = cfg.train_config();
        let ri = tune_gamma(
            &template,
            &data,
            &arch,
            InitMode::Random {
                seed: template.seed,
            },
            &cfg.training.gamma_grid,
        );
        ri.and_then(|ri| {
            tune_gamma(
                &template,
                &data,
                &arch,
                InitMode::Pretrained(&pre.checkpoint),
                &cfg.training.gamma_grid,
            )
            .map(|tl| (ri, tl))
        })
    })?;
    let (tuning_ri, tuning_tl) = tuning;
    write_gamma_csv(cfg, &tuning_ri, &tuning_tl)?;

    let pool = status.stage(
        "train-pool",
        run_pool_stage(cfg, &data, &pre, tuning_ri.best_gamma, tuning_tl.best_gamma),
    )?;
    let de = status.stage("de-curve", cmd_de_curve(cfg, &pool.manifest_path))?;
    let interpolation = status.stage("interpolate", cmd_interpolate(cfg, &pool.manifest_path))?;

    let (summary_txt, summary_csv) = status.stage(
        "summary",
        write_summary(cfg, &data, &tuning_ri, &tuning_tl, &de, &interpolation),
    )?;

    Ok(FullArtifacts {
        gamma_ri: tuning_ri.best_gamma,
        gamma_tl: tuning_tl.best_gamma,
        de,
        interpolation,
        summary_txt,
        summary_csv,
    })
}

fn write_gamma_csv(
    cfg: &ExperimentConfig,
    ri: &GammaReport,
    tl: &GammaReport,
) -> Result<()> {
    let mut out = String::from("lineage,gamma,best_val_auc,best_epoch,selected\n");
    for (lineage, report) in [("ri", ri), ("tl", tl)] {
        for cell in &report.cells {
            let (auc, epoch) = match (cell.best_val_auc, cell.best_epoch) {
                (Some(a), Some(e)) => (a.to_string(), e.to_string()),
                _ => ("failed".into(), "failed".into()),
            };
            out.push_str(&format!(
                "{lineage},{},{auc},{epoch},{}\n",
                cell.gamma,
                (cell.gamma == report.best_gamma) as u8
            ));
        }
    }
    std::fs::write(cfg.output_dir.join("gamma_tuning.csv"), out)?;
    Ok(())
}

fn write_summary(
    cfg: &ExperimentConfig,
    data: &DatasetSplit,
    tuning_ri: &GammaReport,
    tuning_tl: &GammaReport,
    de: &DeCurveArtifacts,
    interpolation: &InterpolateArtifacts,
) -> Result<(PathBuf, PathBuf)> {
    let mut kv: Vec<(String, String)> = vec![
        ("task_id".into(), data.metadata.task_id.clone()),
        ("n_models_per_lineage".into(), cfg.training.n_models.to_string()),
        ("gamma_ri".into(), tuning_ri.best_gamma.to_string()),
        ("gamma_tl".into(), tuning_tl.best_gamma.to_string()),
    ];
    for (lineage, curve, plateau) in &de.curves {
        kv.push((format!("baseline_mean_{lineage}"), curve.baseline_mean.to_string()));
        kv.push((format!("baseline_std_{lineage}"), curve.baseline_std.to_string()));
        let last = curve.points.last().unwrap();
        kv.push((format!("mean_auc_at_max_t_{lineage}"), last.mean_auc.to_string()));
        kv.push((format!("t_star_{lineage}"), plateau.t_star.to_string()));
        kv.push((format!("t_star_no_gain_{lineage}"), plateau.no_gain.to_string()));
    }
    for sc in &interpolation.report.scenarios {
        kv.push((
            format!("median_barrier_{}", sc.scenario.name()),
            sc.median_barrier.to_string(),
        ));
    }

    let mut csv = String::from("key,value\n");
    for (k, v) in &kv {
        csv.push_str(&format!("{k},{v}\n"));
    }
    let summary_csv = cfg.output_dir.join("summary.csv");
    std::fs::write(&summary_csv, csv)?;

    let mut txt = String::new();
    txt.push_str(&format!("task: {}\n\n", data.metadata.task_id));
    txt.push_str("selected gamma per lineage\n");
    txt.push_str(&format!("  ri: {}\n", tuning_ri.best_gamma));
    txt.push_str(&format!("  tl: {}\n\n", tuning_tl.best_gamma));
    txt.push_str("ensemble curves (test ROC-AUC)\n");
    for (lineage, curve, plateau) in &de.curves {
        let last = curve.points.last().unwrap();
        txt.push_str(&format!(
            "  {lineage}: no-DE {:.4} ± {:.4}  →  T={} {:.4} ± {:.4}   plateau T* = {}{}\n",
            curve.baseline_mean,
            curve.baseline_std,
            last.t,
            last.mean_auc,
            last.std_auc,
            plateau.t_star,
            if plateau.no_gain { " (no gain)" } else { "" }
        ));
    }
    txt.push_str("\nmedian barrier height per scenario\n");
    for sc in &interpolation.report.scenarios {
        txt.push_str(&format!(
            "  {:<10} {:.4}\n",
            sc.scenario.name(),
            sc.median_barrier
        ));
    }
    let summary_txt = cfg.output_dir.join("summary.txt");
    std::fs::write(&summary_txt, txt)?;
    Ok((summary_txt, summary_csv))
}
