//! `<artifact>.manifest.json` files written next to every output.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub artifact: String,
    pub command: String,
    pub tool: String,
    pub version: String,
    pub config_sha256: String,
    pub seed: Option<u64>,
}

pub fn manifest_path(artifact: &Path) -> PathBuf {
    let mut name = artifact.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    artifact.with_file_name(name)
}

/// Writes `bytes` to `path` and its manifest beside it.
pub fn write_artifact(
    path: &Path,
    bytes: &[u8],
    command: &str,
    config_sha256: &str,
    seed: Option<u64>,
) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))?;
    let manifest = Manifest {
        artifact: path.file_name().unwrap_or_default().to_string_lossy().into_owned(),
        command: command.to_string(),
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: config_sha256.to_string(),
        seed,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
    let mpath = manifest_path(path);
    std::fs::write(&mpath, text + "\n").map_err(|e| CliError::io(&mpath, e))
}
