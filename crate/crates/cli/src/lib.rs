//! Batch driver for the Brinkman-Forchheimer simulator: config parsing,
//! experiment orchestration and artifact output.

pub mod config;
pub mod error;
pub mod output;
pub mod run;

pub use config::{parse_config, render_config, ExperimentKind, RunConfig};
pub use error::{CliError, Result};
pub use output::write_outputs;
pub use run::{run_command, Outcome};
