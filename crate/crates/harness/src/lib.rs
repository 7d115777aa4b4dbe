//! Experiment runner for the `onlinets` predictors: data loading, seeded
//! multi-run orchestration, and CSV traces ready for plotting.

pub mod config;
pub mod data;
pub mod error;
pub mod experiment;

pub use config::{Algorithm, DataSource, Dgp, ExperimentConfig, Schedule};
pub use data::{load_csv, Dataset, RunTrace};
pub use error::{HarnessError, Result};
pub use experiment::{make_switching_series, run_experiment, run_on_dataset, run_seed, simulate};
