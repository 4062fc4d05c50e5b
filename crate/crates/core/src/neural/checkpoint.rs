//! Versioned model checkpoints: named tensors plus the full model and
//! training configuration, serialized as JSON. f64 values round-trip
//! bit-exactly through the shortest-representation encoder.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::neural::tensor::{ModelParams, Tensor};
use crate::neural::{ModelConfig, TrainConfig};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported checkpoint version {0} (expected {CHECKPOINT_VERSION})")]
    Version(u32),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub model: ModelConfig,
    pub train: TrainConfig,
    tensors: Vec<(String, Tensor)>,
}

impl Checkpoint {
    pub fn new(model: &ModelConfig, train: &TrainConfig, params: &ModelParams) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            model: model.clone(),
            train: train.clone(),
            tensors: params
                .iter()
                .map(|(n, t)| (n.to_string(), t.clone()))
                .collect(),
        }
    }

    pub fn into_params(self) -> ModelParams {
        let mut params = ModelParams::new();
        for (name, mut tensor) in self.tensors {
            tensor.grad = vec![0.0; tensor.values.len()];
            params.insert(&name, tensor);
        }
        params
    }
}

pub fn save_checkpoint(
    path: &Path,
    model: &ModelConfig,
    train: &TrainConfig,
    params: &ModelParams,
) -> Result<(), CheckpointError> {
    let file = File::create(path).map_err(|source| CheckpointError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::to_writer(BufWriter::new(file), &Checkpoint::new(model, train, params))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, CheckpointError> {
    let file = File::open(path).map_err(|source| CheckpointError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let ckpt: Checkpoint = serde_json::from_reader(BufReader::new(file))?;
    if ckpt.version != CHECKPOINT_VERSION {
        return Err(CheckpointError::Version(ckpt.version));
    }
    Ok(ckpt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::models::init_params;
    use crate::neural::ModelKind;
    use tempfile::NamedTempFile;

    #[test]
    fn checkpoint_round_trips_bit_exactly() {
        let cfg = ModelConfig::new(ModelKind::MpHybrid);
        let tcfg = TrainConfig::default();
        let mut params = init_params(&cfg);
        // Exercise values with awkward decimal expansions.
        params.get_mut("fc2.b").values[0] = 0.1 + 0.2;
        params.get_mut("conv_cos.w").values[3] = f64::MIN_POSITIVE;
        let f = NamedTempFile::new().unwrap();
        save_checkpoint(f.path(), &cfg, &tcfg, &params).unwrap();
        let ckpt = load_checkpoint(f.path()).unwrap();
        assert_eq!(ckpt.model, cfg);
        assert_eq!(ckpt.train, tcfg);
        let restored = ckpt.into_params();
        assert_eq!(restored.names(), params.names());
        for ((_, a), (_, b)) in params.iter().zip(restored.iter()) {
            assert_eq!(a.shape, b.shape);
            for (x, y) in a.values.iter().zip(&b.values) {
                assert_eq!(x.to_bits(), y.to_bits(), "bit-exact round trip");
            }
            assert_eq!(b.grad.len(), b.values.len());
        }
    }

    #[test]
    fn unsupported_version_rejected() {
        let cfg = ModelConfig::new(ModelKind::Knrm);
        let tcfg = TrainConfig::default();
        let params = init_params(&cfg);
        let f = NamedTempFile::new().unwrap();
        save_checkpoint(f.path(), &cfg, &tcfg, &params).unwrap();
        let text = std::fs::read_to_string(f.path()).unwrap();
        let bumped = text.replace("\"version\":1", "\"version\":9");
        std::fs::write(f.path(), bumped).unwrap();
        assert!(matches!(
            load_checkpoint(f.path()),
            Err(CheckpointError::Version(9))
        ));
    }
}
