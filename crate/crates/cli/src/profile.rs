//! Run profiles.

use basinlab::config::ExperimentConfig;

/// `Desk` leaves the config as written; `Full` scales it up to the
/// full-length protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Profile {
    Desk,
    Full,
}

/// The full profile trains 200 epochs, 90 models per lineage, and draws 1e5
/// bootstrap resamples.
pub fn apply_profile(cfg: &mut ExperimentConfig, profile: Profile) {
    match profile {
        Profile::Desk => {}
        Profile::Full => {
            cfg.training.epochs = 200;
            cfg.training.n_models = 90;
            cfg.ensemble.resamples = 100_000;
        }
    }
}
