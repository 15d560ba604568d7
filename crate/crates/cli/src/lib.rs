//! Experiment runner for the localized-MCMC library: configuration,
//! per-cell execution, bound verification and report files.

pub mod bounds;
pub mod config;
pub mod error;
pub mod report;
pub mod runner;
pub mod setup;

pub use config::{ExampleId, ExperimentConfig, SamplerKind};
pub use error::{CliError, CliResult};
pub use runner::{run_experiment, ExperimentReport, ReportRow};
