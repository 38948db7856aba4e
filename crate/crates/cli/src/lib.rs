//! Experiment runner for the `regensim` simulation library.
//!
//! A run reads one TOML config, simulates the replicates on per-replicate
//! random streams, writes CSV/JSON artifacts and a `manifest.json` with the
//! outcome of each check.

pub mod config;
pub mod describe;
pub mod error;
pub mod run;

pub use config::{ExperimentConfig, Kind};
pub use describe::describe;
pub use error::CliError;
pub use run::{run, run_config, RunManifest, RunOptions};
