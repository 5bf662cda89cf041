//! Experiment configuration, drivers, output files and the command line.

pub mod check;
pub mod cli;
pub mod config;
pub mod experiment;
pub mod forcing;
pub mod output;
pub mod sweep;

pub use config::ExperimentConfig;
pub use experiment::{run_experiment, RunRecord, RunStatus, Simulation};
