//! Batch front end for `qsync-core`: scenario files, preset runs, trajectory
//! export, re-analysis and parameter sweeps.

pub mod config;
pub mod error;
pub mod io;
pub mod scenario;
pub mod sweep;

pub use config::Scenario;
pub use error::{CliError, Result};
