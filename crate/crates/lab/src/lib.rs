//! Experiment runner for the `viscoplate` simulator: configuration files,
//! initial data, subcommands and their CSV/JSON artifacts.
//!
//! Every run writes into one output directory and finishes with a
//! `MANIFEST` listing the SHA-256, size and name of each file. Floats are
//! printed with 17 significant digits so that reruns are byte-identical.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod clouds;
pub mod commands;
pub mod config;
mod error;
pub mod format;
pub mod initial;
pub mod presets;

pub use crate::commands::{run, Outcome, RunOptions};
pub use crate::config::{parse_config, parse_str, Experiment, ExperimentConfig};
pub use crate::error::{LabError, Result};
