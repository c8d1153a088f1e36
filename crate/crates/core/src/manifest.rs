//! Provenance record written next to every output file.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::SystemTime;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::rng::RNG_ALGORITHM;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Full argument list after the program name; passing it back to the
    /// tool reproduces the output.
    pub args: Vec<String>,
    pub seed: Option<u64>,
    pub version: String,
    /// RFC 3339, UTC.
    pub timestamp: String,
    pub rng_algorithm: String,
}

impl RunManifest {
    pub fn new(command: &str, args: Vec<String>, seed: Option<u64>) -> Self {
        Self {
            command: command.to_string(),
            args,
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: humantime::format_rfc3339_seconds(SystemTime::now()).to_string(),
            rng_algorithm: RNG_ALGORITHM.to_string(),
        }
    }

    /// `<output>.manifest.json`.
    pub fn path_for(output: &Path) -> PathBuf {
        let mut name = output.as_os_str().to_owned();
        name.push(".manifest.json");
        PathBuf::from(name)
    }

    /// Writes the manifest beside `output` and returns its path.
    pub fn write_beside(&self, output: &Path) -> Result<PathBuf> {
        let path = Self::path_for(output);
        fs::write(&path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}
