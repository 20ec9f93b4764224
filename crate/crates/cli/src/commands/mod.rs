//! One module per subcommand plus shared stage helpers.

mod de_curve;
mod full;
mod inspect;
mod interpolate;
mod train_pool;

pub use de_curve::{cmd_de_curve, DeCurveArtifacts};
pub use full::{cmd_full, FullArtifacts};
pub use inspect::cmd_inspect;
pub use interpolate::{cmd_interpolate, InterpolateArtifacts};
pub use train_pool::{cmd_train_pool, TrainPoolArtifacts};

use basinlab::config::{EvalPartition, ExperimentConfig};
use basinlab::data::{
    generate, load_csv, stratified_split, DatasetSplit, Partition, SplitRatios,
};
use basinlab::error::Result;

/// Builds the dataset the config describes (synthetic generation or CSV
/// ingestion plus leave-site-out split).
pub fn load_dataset(cfg: &ExperimentConfig) -> Result<DatasetSplit> {
    if let Some(syn) = &cfg.dataset.synthetic {
        return generate(syn);
    }
    let csv = cfg
        .dataset
        .csv
        .as_ref()
        .expect("config validation guarantees a dataset kind");
    let samples = load_csv(&csv.path, &csv.schema)?;
    let ratios = SplitRatios {
        train: csv.ratios[0],
        validation: csv.ratios[1],
        test: csv.ratios[2],
    };
    stratified_split(&samples, ratios, csv.held_out_sites, csv.seed)
}

/// The partition barrier curves and prediction matrices are evaluated on.
pub fn eval_partition<'a>(cfg: &ExperimentConfig, data: &'a DatasetSplit) -> &'a Partition {
    match cfg.landscape.eval_partition {
        EvalPartition::Test => &data.test,
        EvalPartition::Validation => &data.validation,
    }
}
