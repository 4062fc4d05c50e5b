//! Interaction-based neural matching models (MatchPyramid variants, DRMM,
//! KNRM) over a minimal reverse-mode differentiable core, plus the
//! pairwise-hinge training loop.
//!
//! All parameters and activations are f64. Scoring with frozen parameters
//! is pure; training mutates parameters and is single-threaded with a
//! fixed accumulation order, so a fixed seed gives bit-identical runs.

pub mod checkpoint;
pub mod features;
pub mod layers;
pub mod models;
pub mod tensor;
pub mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use features::{FeatureBuilder, ModelInput};
pub use models::{backward, forward, init_params, score, ScoreResult};
pub use tensor::{ModelParams, Tensor};
pub use train::{
    adam_step, hinge_loss, rerank, sample_triples, train, AdamState, EpochLog, TrainOutcome,
    Triple,
};

use serde::{Deserialize, Serialize};

/// Model family plus, for MatchPyramid, the interaction function feeding
/// its matrix. TbT-QT variants are the same scorers run on a translated
/// query, selected at the experiment layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    MpCosine,
    MpGaussian,
    MpExact,
    MpHybrid,
    Drmm,
    Knrm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::MpCosine,
        ModelKind::MpGaussian,
        ModelKind::MpExact,
        ModelKind::MpHybrid,
        ModelKind::Drmm,
        ModelKind::Knrm,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::MpCosine => "mp-cosine",
            ModelKind::MpGaussian => "mp-gaussian",
            ModelKind::MpExact => "mp-exact",
            ModelKind::MpHybrid => "mp-hybrid",
            ModelKind::Drmm => "drmm",
            ModelKind::Knrm => "knrm",
        }
    }

    pub fn parse(s: &str) -> Option<ModelKind> {
        Self::ALL.iter().copied().find(|k| k.name() == s)
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Architecture hyperparameters. Defaults: 3x3 conv kernels with 64
/// channels and 5x1 dynamic pooling for MP, 30 histogram bins for DRMM,
/// 20 kernels with sigma 0.1 for KNRM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub kind: ModelKind,
    /// TbT-QT variant: queries are translated term-by-term before scoring,
    /// so interactions are built in the mono-lingual target space.
    #[serde(default)]
    pub tbtqt: bool,
    /// Exact-match threshold for the indicator interaction.
    pub eta: f64,
    pub conv_channels: usize,
    pub conv_kernel: usize,
    pub pool_rows: usize,
    pub histogram_bins: usize,
    pub kernel_count: usize,
    pub kernel_sigma: f64,
    /// Hidden width of the MP scoring head (flatten -> hidden -> 1).
    pub mp_hidden: usize,
    /// Hidden width of the DRMM per-term feed-forward (bins -> hidden -> 1).
    pub drmm_hidden: usize,
    pub query_max_len: usize,
    pub seed: u64,
}

impl ModelConfig {
    pub fn new(kind: ModelKind) -> Self {
        Self {
            kind,
            tbtqt: false,
            eta: 0.3,
            conv_channels: 64,
            conv_kernel: 3,
            pool_rows: 5,
            histogram_bins: 30,
            kernel_count: 20,
            kernel_sigma: 0.1,
            mp_hidden: 32,
            drmm_hidden: 5,
            query_max_len: 8,
            seed: 42,
        }
    }

    /// Flattened feature width entering the MP scoring head.
    pub fn mp_flat_len(&self) -> usize {
        let per_tower = self.conv_channels * self.pool_rows;
        match self.kind {
            ModelKind::MpHybrid => 2 * per_tower,
            _ => per_tower,
        }
    }
}

/// Optimization hyperparameters: Adam at learning rate 1e-3, mini-batches
/// of 64, five negatives per positive, at most 20 epochs, margin 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub neg_per_pos: usize,
    pub max_epochs: usize,
    pub margin: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 64,
            neg_per_pos: 5,
            max_epochs: 20,
            margin: 1.0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 42,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_paper_values() {
        let cfg = ModelConfig::new(ModelKind::MpCosine);
        assert_eq!(cfg.conv_kernel, 3);
        assert_eq!(cfg.conv_channels, 64);
        assert_eq!(cfg.pool_rows, 5);
        assert_eq!(cfg.histogram_bins, 30);
        assert_eq!(cfg.kernel_count, 20);
        assert_eq!(cfg.kernel_sigma, 0.1);
        assert_eq!(cfg.eta, 0.3);
        assert_eq!(cfg.mp_flat_len(), 320);
        assert_eq!(ModelConfig::new(ModelKind::MpHybrid).mp_flat_len(), 640);

        let t = TrainConfig::default();
        assert_eq!(t.learning_rate, 1e-3);
        assert_eq!(t.batch_size, 64);
        assert_eq!(t.neg_per_pos, 5);
        assert_eq!(t.max_epochs, 20);
        assert_eq!(t.margin, 1.0);
        assert_eq!((t.beta1, t.beta2, t.epsilon), (0.9, 0.999, 1e-8));
    }

    #[test]
    fn model_kind_names_round_trip() {
        for kind in ModelKind::ALL {
            assert_eq!(ModelKind::parse(kind.name()), Some(kind));
        }
        assert_eq!(ModelKind::parse("nope"), None);
    }
}
