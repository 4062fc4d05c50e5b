//! Experiment presets: a TOML key-value file whose entries supply defaults
//! for command-line flags; every value is overridable on the command line.
//! Relative data paths resolve against `CLIRMATCH_DATA_DIR` when set.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

pub const DATA_DIR_ENV: &str = "CLIRMATCH_DATA_DIR";

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Preset {
    pub collection: Option<PathBuf>,
    pub queries: Option<PathBuf>,
    pub qrels: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub source_embeddings: Option<PathBuf>,
    pub target_embeddings: Option<PathBuf>,
    pub truncation_limit: Option<usize>,
    pub truncate_raw_tokens: Option<bool>,
    pub eta: Option<f64>,
    pub mu: Option<f64>,
    pub k1: Option<f64>,
    pub b: Option<f64>,
    pub seed: Option<u64>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub query_max_len: Option<usize>,
    pub folds: Option<usize>,
}

impl Preset {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing config {}", p.display()))
            }
        }
    }
}

/// Flag wins over preset; relative paths resolve against the data root.
pub fn resolve_path(flag: Option<PathBuf>, preset: Option<PathBuf>, what: &str) -> Result<PathBuf> {
    let path = flag
        .or(preset)
        .with_context(|| format!("missing required path: {what} (flag or config)"))?;
    Ok(apply_data_root(path))
}

pub fn apply_data_root(path: PathBuf) -> PathBuf {
    if path.is_absolute() {
        return path;
    }
    match std::env::var_os(DATA_DIR_ENV) {
        Some(root) if !root.is_empty() => PathBuf::from(root).join(path),
        _ => path,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_parses_partial_toml() {
        let p: Preset = toml::from_str("eta = 0.4\nseed = 7\n").unwrap();
        assert_eq!(p.eta, Some(0.4));
        assert_eq!(p.seed, Some(7));
        assert!(p.collection.is_none());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<Preset>("nope = 1\n").is_err());
    }
}
