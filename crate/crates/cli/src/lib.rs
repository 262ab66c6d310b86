//! File formats and batch commands around `battbee_core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod formats;
pub mod report;

pub use commands::{exit, exit_code, run, Cli, Outcome};
