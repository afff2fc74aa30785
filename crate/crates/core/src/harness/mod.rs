//! Experiment orchestration: seeds, configuration, parallel replication and output.

pub mod checks;
pub mod config;
pub mod output;
pub mod par;
pub mod seed;
pub mod studies;

pub use config::{Backend, ConfigError, ExperimentConfig, Study, X0Spec};
pub use studies::{estimate_paths, run, simulate_paths, HarnessError, RunSummary};
