//! Configuration-driven experiment runner for `wicklab-core`.
//!
//! A run reads one JSON [`ExperimentConfig`], executes its subcommand and
//! writes JSON and CSV artifacts plus a [`RunManifest`] with SHA-256
//! checksums into a fresh output directory.

pub mod commands;
pub mod config;
pub mod error;
pub mod run;

pub use config::{ExperimentConfig, SubcommandId};
pub use error::{CliError, EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC, EXIT_OK};
pub use run::{run_batch, run_experiment, run_experiment_in, RunManifest, RunStatus};
