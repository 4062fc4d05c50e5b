//! Run manifests: every command writes a JSON manifest next to its outputs
//! recording the resolved configuration, seeds, and SHA-256 digests of all
//! input files, so any run is reproducible from the manifest alone.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub config: serde_json::Value,
    pub input_digests: BTreeMap<String, String>,
    pub outputs: Vec<PathBuf>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut file = std::fs::File::open(path)
        .with_context(|| format!("hashing input {}", path.display()))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 65536];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

impl Manifest {
    pub fn new(command: &str, config: impl Serialize) -> Result<Self> {
        Ok(Self {
            command: command.to_string(),
            config: serde_json::to_value(config)?,
            input_digests: BTreeMap::new(),
            outputs: Vec::new(),
        })
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        self.input_digests
            .insert(path.display().to_string(), sha256_file(path)?);
        Ok(())
    }

    pub fn add_output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    /// Writes `<stem>.manifest.json` next to the primary output.
    pub fn write_next_to(&self, primary_output: &Path) -> Result<PathBuf> {
        let name = match primary_output.file_name() {
            Some(n) => format!("{}.manifest.json", n.to_string_lossy()),
            None => "manifest.json".to_string(),
        };
        let path = primary_output.with_file_name(name);
        std::fs::write(&path, serde_json::to_string_pretty(self)?)
            .with_context(|| format!("writing manifest {}", path.display()))?;
        Ok(path)
    }
}
