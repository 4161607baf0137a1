//! Command-line harness for the breakage solvers: configuration, runs and
//! deterministic CSV/JSON output.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod reproduce;
pub mod run;
pub mod validate;

pub use error::{CliError, CliResult};
