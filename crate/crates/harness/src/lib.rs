//! Experiment harness for the `infdim` samplers: JSON configs, CSV
//! datasets, single-chain and LGCP Gibbs drivers, result writers and the
//! kernel comparison table behind the `infdim` command.

pub mod compare;
pub mod config;
pub mod dataset;
pub mod error;
pub mod model;
pub mod output;
pub mod run;

pub use compare::{compare_kernels, run_comparison, Comparison, ComparisonRow};
pub use config::{load_compare_config, load_config, CompareConfig, ExperimentConfig};
pub use dataset::{load_dataset, write_dataset, Dataset, DatasetKind};
pub use error::{HarnessError, Result};
pub use output::{write_results, OutputPaths};
pub use run::{run_experiment, run_lgcp_gibbs, RunResult};
