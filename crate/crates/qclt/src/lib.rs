//! Experiment driver for `qclt-core`: file formats, a thread-count
//! independent parallel harness, `key = value` configs, and the `qclt` CLI.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod formats;

pub use error::{CliError, Result};
