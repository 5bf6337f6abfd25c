//! Experiment runner for the critical viscous Hamilton-Jacobi laboratory.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod csv;
pub mod experiments;
pub mod manifest;
pub mod plot;
pub mod verify;

pub use config::{parse_config, parse_config_str, ExperimentConfig};
pub use experiments::{execute, run, RunStatus};
