//! Configuration, presets, subcommand pipelines and run manifests for the
//! `bbt` command-line tool.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod output;

pub use commands::{run, Command, RunRequest};
pub use config::SimConfig;
pub use error::CliError;
pub use manifest::RunManifest;
