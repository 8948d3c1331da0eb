//! Configuration-driven runner for the mean-field descent solver.

pub mod config;
pub mod error;
pub mod output;
pub mod run;

pub use config::{Command, RunConfig};
pub use error::{CliError, ExitStatus};
