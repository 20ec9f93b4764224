//! `interpolate`: the four-scenario barrier experiment from a pool manifest.

use std::path::{Path, PathBuf};

use basinlab::config::ExperimentConfig;
use basinlab::error::Result;
use basinlab::landscape::{run_scenarios, write_scenario_report_csv, Scenario, ScenarioReport};

use crate::manifest::{load_pools, read_manifest};
use crate::plot::barrier_panel_svg;

use super::{eval_partition, load_dataset};

#[derive(Debug)]
pub struct InterpolateArtifacts {
    pub report: ScenarioReport,
    pub summary_csv: PathBuf,
    pub svg_path: PathBuf,
}

impl InterpolateArtifacts {
    pub fn median(&self, scenario: Scenario) -> f64 {
        self.report
            .result(scenario)
            .map(|r| r.median_barrier)
            .unwrap_or(f64::NAN)
    }
}

pub fn cmd_interpolate(
    cfg: &ExperimentConfig,
    manifest_path: &Path,
) -> Result<InterpolateArtifacts> {
    let rows = read_manifest(manifest_path)?;
    let pools = load_pools(manifest_path, &rows)?;
    let data = load_dataset(cfg)?;
    let eval = eval_partition(cfg, &data);

    let report = run_scenarios(
        &pools.tl,
        &pools.ri,
        &eval.batch,
        cfg.landscape.pairs_per_scenario,
        cfg.landscape.n_lambda,
        cfg.landscape.seed,
    )?;

    std::fs::create_dir_all(&cfg.output_dir)?;
    let summary_csv = write_scenario_report_csv(&cfg.output_dir, &report)?;
    let svg_path = cfg.output_dir.join("interpolate.svg");
    std::fs::write(&svg_path, barrier_panel_svg(&report))?;

    Ok(InterpolateArtifacts {
        report,
        summary_csv,
        svg_path,
    })
}
