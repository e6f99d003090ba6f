//! Run manifests: everything needed to regenerate a run's artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::commands::Command;
use crate::config::{sha256_hex, SimConfig};
use crate::error::{io_context, CliError};
use crate::output::Artifact;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputFile {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    pub subcommand: Command,
    pub seed: u64,
    /// Worker-thread cap of the run; results do not depend on it.
    pub threads: Option<usize>,
    pub config_sha256: String,
    /// Fully expanded configuration.
    pub config_toml: String,
    pub input_volume: Option<InputFile>,
    pub started: String,
    pub finished: String,
    pub artifacts: Vec<Artifact>,
}

impl RunManifest {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(io_context(format!("reading {}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Manifest(format!("{}: {e}", path.display())))
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let path = dir.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(self).expect("manifest serialises");
        text.push('\n');
        fs::write(&path, text).map_err(io_context(format!("writing {}", path.display())))
    }

    /// The recorded configuration, checked against its hash.
    pub fn config(&self) -> Result<SimConfig, CliError> {
        if sha256_hex(self.config_toml.as_bytes()) != self.config_sha256 {
            return Err(CliError::Manifest("config text does not match its recorded hash".into()));
        }
        Ok(SimConfig::from_toml_str(&self.config_toml, None)?)
    }

    /// Compare the artifacts of a rerun against this manifest.
    pub fn verify(&self, rerun: &[Artifact]) -> Result<(), CliError> {
        if rerun.len() != self.artifacts.len() {
            return Err(CliError::NotReproduced(format!(
                "{} artifacts recorded, {} produced",
                self.artifacts.len(),
                rerun.len()
            )));
        }
        match self.artifacts.iter().zip(rerun).find(|(a, b)| a != b) {
            Some((a, _)) => Err(CliError::NotReproduced(format!("{} differs", a.path))),
            None => Ok(()),
        }
    }
}
