//! Provenance written next to every artifact-producing command.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Serialize)]
pub struct InputHash {
    pub role: &'static str,
    pub path: PathBuf,
    pub sha256: String,
}

impl InputHash {
    pub fn of(role: &'static str, path: &Path, bytes: &[u8]) -> Self {
        Self {
            role,
            path: path.to_path_buf(),
            sha256: sha256_hex(bytes),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: &'static str,
    pub tool_version: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
    pub inputs: Vec<InputHash>,
    pub providers: Vec<String>,
    pub outputs: Vec<PathBuf>,
    pub elapsed_ms: u128,
}

impl Manifest {
    pub fn new(command: &'static str) -> Self {
        Self {
            command,
            tool_version: env!("CARGO_PKG_VERSION"),
            config: None,
            inputs: Vec::new(),
            providers: Vec::new(),
            outputs: Vec::new(),
            elapsed_ms: 0,
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        std::fs::write(path, text).map_err(CliError::io(path))
    }
}

/// `foo.snap` -> `foo.snap.manifest.json`
pub fn sidecar(path: &Path) -> PathBuf {
    let mut name = path
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(".manifest.json");
    path.with_file_name(name)
}
