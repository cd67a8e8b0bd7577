//! Config parsing and the experiment runner behind the `plaplab` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod run;

pub use config::{parse_config, ConfigError, ExperimentConfig, ExperimentKind};
pub use run::{run, RunReport, CSV_HEADER, CSV_SCHEMA_VERSION};
