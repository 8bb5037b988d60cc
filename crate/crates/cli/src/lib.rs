//! Command-line front end of the debris removal planner: catalog and
//! configuration files in, mission report and plot tables out.

pub mod catalog;
pub mod commands;
pub mod config;
pub mod error;
pub mod report;

pub use commands::{check, run, CheckReport, RunOptions, RunOutcome};
pub use error::{CliError, ExitStatus};
