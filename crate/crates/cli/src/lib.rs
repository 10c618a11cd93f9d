//! Experiment orchestration for the `qssm` command-line tool.
//!
//! Parses JSON experiment documents, runs the Monte Carlo sweeps and writes
//! CSV tables, comparison reports and a run manifest.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
mod error;
pub mod experiment;
pub mod output;
pub mod report;

pub use config::{parse_config, Comparison, ExperimentSpec, Overrides, SnrGrid};
pub use error::{CliError, Result};
pub use experiment::{manifest_json, run_experiment, RunSummary};
pub use report::{compare_report, validate_analysis, ValidationReport};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "QSSM_OUTPUT_DIR";
/// Output directory when neither a flag, the document nor the environment sets one.
pub const DEFAULT_OUTPUT_DIR: &str = "qssm-out";
