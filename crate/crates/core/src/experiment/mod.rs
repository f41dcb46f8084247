//! Configuration-driven experiment harness behind the command-line tool.

pub mod commands;
pub mod config;
pub mod io;

pub use commands::Overrides;
pub use config::{preset_names, ExperimentConfig};
pub use io::{ReferenceRecord, ReportRow, RmseRow, RunRecord};
