//! Configuration, orchestration and file formats for the `biolage` runner.

pub mod config;
pub mod error;
pub mod formats;
pub mod manifest;
pub mod run;

pub use config::{load_config, parse_config, Format, RunSpec, Scenario};
pub use error::{CliError, CliResult};
pub use manifest::{Manifest, OutputDir};
pub use run::{execute, RunOutcome};
