//! `inspect`: print a checkpoint's header and weight statistics.

use std::path::Path;

use basinlab::checkpoint::load_checkpoint;
use basinlab::error::Result;
use basinlab::train::Lineage;

pub fn cmd_inspect(path: &Path) -> Result<String> {
    let cp = load_checkpoint(path)?;
    let values = cp.weights.values();
    let mut min = f32::INFINITY;
    let mut max = f32::NEG_INFINITY;
    let mut sumsq = 0.0f64;
    for &v in values {
        min = min.min(v);
        max = max.max(v);
        sumsq += v as f64 * v as f64;
    }
    let lineage = match &cp.lineage {
        Lineage::RandomInit { seed } => format!("random_init (seed {seed})"),
        Lineage::Transfer { pretrain_id } => format!("transfer ({pretrain_id})"),
    };
    let hidden: Vec<String> = cp.arch.hidden_dims().iter().map(|d| d.to_string()).collect();
    let mut out = String::new();
    out.push_str(&format!("task:        {}\n", cp.task_id));
    out.push_str(&format!("lineage:     {lineage}\n"));
    out.push_str(&format!("tag:         {} (epoch {})\n", cp.tag, cp.epoch));
    out.push_str(&format!("val score:   {}\n", cp.val_auc_at_save));
    out.push_str(&format!(
        "arch:        {} -> [{}] -> 1 ({}), {} parameters\n",
        cp.arch.input_dim(),
        hidden.join(", "),
        cp.arch.activation(),
        cp.arch.param_count()
    ));
    out.push_str(&format!("config:      {}\n", cp.train_config_digest));
    out.push_str(&format!(
        "weights:     min {min:.6} max {max:.6} l2 {:.6}\n",
        sumsq.sqrt()
    ));
    Ok(out)
}
