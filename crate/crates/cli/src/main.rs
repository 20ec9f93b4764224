use std::path::PathBuf;

use clap::{Parser, Subcommand};

use basinlab::config::ExperimentConfig;
use basinlab::error::{Error, Result};
use basinlab_cli::commands::{cmd_de_curve, cmd_full, cmd_inspect, cmd_interpolate, cmd_train_pool};
use basinlab_cli::profile::{apply_profile, Profile};

#[derive(Parser)]
#[command(name = "basinlab", version)]
#[command(about = "Deep-ensemble plateau and loss-basin interpolation experiments")]
struct Cli {
    /// Experiment config (TOML)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the config's output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Override every stage seed with one value
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// desk runs the config as written; full scales to 200 epochs,
    /// 90 models per lineage, 100000 bootstrap resamples
    #[arg(long, global = true, value_enum, default_value_t = Profile::Desk)]
    profile: Profile,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the RI and TL pools; write dataset CSVs, checkpoints, manifest
    TrainPool,
    /// Bootstrap ensemble curves per lineage from a pool manifest
    DeCurve {
        /// Pool manifest (default: <output_dir>/manifest.csv)
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Barrier curves for the four interpolation scenarios
    Interpolate {
        /// Pool manifest (default: <output_dir>/manifest.csv)
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Full pipeline: train-pool, de-curve, interpolate, summary
    Full,
    /// Print a checkpoint's header and weight statistics
    Inspect { checkpoint: PathBuf },
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config <path> is required for this command".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.override_seed(seed);
    }
    apply_profile(&mut cfg, cli.profile);
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::TrainPool => {
            let cfg = load_config(cli)?;
            let artifacts = cmd_train_pool(&cfg)?;
            println!(
                "trained {} checkpoints ({} failures), manifest at {}",
                artifacts.rows.len(),
                artifacts.n_failures,
                artifacts.manifest_path.display()
            );
        }
        Command::DeCurve { manifest } => {
            let cfg = load_config(cli)?;
            let manifest = manifest
                .clone()
                .unwrap_or_else(|| cfg.output_dir.join("manifest.csv"));
            let artifacts = cmd_de_curve(&cfg, &manifest)?;
            for (lineage, curve, plateau) in &artifacts.curves {
                println!(
                    "{lineage}: no-DE {:.4} -> max-T {:.4}, T* = {}",
                    curve.baseline_mean,
                    curve.points.last().unwrap().mean_auc,
                    plateau.t_star
                );
            }
        }
        Command::Interpolate { manifest } => {
            let cfg = load_config(cli)?;
            let manifest = manifest
                .clone()
                .unwrap_or_else(|| cfg.output_dir.join("manifest.csv"));
            let artifacts = cmd_interpolate(&cfg, &manifest)?;
            for sc in &artifacts.report.scenarios {
                println!(
                    "{}: median barrier {:.4}",
                    sc.scenario.name(),
                    sc.median_barrier
                );
            }
        }
        Command::Full => {
            let cfg = load_config(cli)?;
            let artifacts = cmd_full(&cfg)?;
            println!(
                "done; summary at {} (gamma ri {}, tl {})",
                artifacts.summary_txt.display(),
                artifacts.gamma_ri,
                artifacts.gamma_tl
            );
        }
        Command::Inspect { checkpoint } => {
            print!("{}", cmd_inspect(checkpoint)?);
        }
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(basinlab_cli::exit_code(&e));
    }
}
