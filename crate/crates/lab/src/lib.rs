//! Experiment harness, file formats and command-line plumbing for
//! `hyperclimb-core`.

pub mod config;
pub mod formats;
pub mod harness;
pub mod stats;
pub mod symmetry;

pub use config::{ExperimentConfig, Problem, StaircaseSource, Track};
pub use harness::{run_experiment, stats_aggregate, Aggregate, Landscape, RunTrace};
