//! Scenario runner and comparison harness for `ed-core`: configuration
//! files, presets, runs with CSV/field output, and the side-by-side dynamics
//! used to check that the different routes agree.

pub mod commands;
pub mod compare;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod run;
pub mod scenario;

pub use error::{CliError, CliResult};
