//! Configuration and experiment commands behind the `forward-ec` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;

pub use commands::{cmd_bench, cmd_mixture, cmd_sample, cmd_scaling, CliError, CliResult};
pub use config::{ConfigError, ExperimentConfig, SamplerChoice, StartPoint, SyntheticScaling, TargetSpec};
