//! Model input construction: interaction matrices padded onto the fixed
//! query grid for MatchPyramid, matching histograms plus IDF gates for
//! DRMM, and kernel-pooling features for KNRM.
//!
//! Inputs depend only on frozen embeddings and corpus statistics, never on
//! model parameters, so they are cached per (query, document) pair.

use std::collections::HashMap;
use std::rc::Rc;

use crate::corpus::{CollectionStats, Document, Query, TermId, Vocabulary};
use crate::interact::{
    build_histogram, build_matrix, default_kernel_mus, kernel_pool, InteractionKind,
    InteractionMatrix, TermVectorBank,
};
use crate::neural::{ModelConfig, ModelKind};

/// One MatchPyramid channel: a `query_max_len x cols` value grid with the
/// number of pooled (query) rows.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixChannel {
    pub values: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
    /// Query rows participating in dynamic pooling (<= rows).
    pub valid_rows: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelInput {
    Mp {
        channel: MatrixChannel,
        degenerate: bool,
    },
    MpHybrid {
        cosine: MatrixChannel,
        indicator: MatrixChannel,
        degenerate: bool,
    },
    Drmm {
        /// rows x bins log-count features.
        features: Vec<f64>,
        rows: usize,
        bins: usize,
        /// IDF of each kept query term (gating input).
        idf: Vec<f64>,
        /// Which kept query rows are embeddable.
        valid: Vec<bool>,
        degenerate: bool,
    },
    Knrm {
        /// rows x kernels pooled features.
        features: Vec<f64>,
        rows: usize,
        kernels: usize,
        valid: Vec<bool>,
        degenerate: bool,
    },
}

impl ModelInput {
    pub fn is_degenerate(&self) -> bool {
        match self {
            ModelInput::Mp { degenerate, .. }
            | ModelInput::MpHybrid { degenerate, .. }
            | ModelInput::Drmm { degenerate, .. }
            | ModelInput::Knrm { degenerate, .. } => *degenerate,
        }
    }
}

fn pad_channel(matrix: &InteractionMatrix, query_max_len: usize) -> MatrixChannel {
    let cols = matrix.cols();
    let kept = matrix.rows().min(query_max_len);
    let mut values = vec![0.0; query_max_len * cols.max(1)];
    if cols > 0 {
        for i in 0..kept {
            values[i * cols..(i + 1) * cols].copy_from_slice(matrix.row(i));
        }
    }
    MatrixChannel {
        values,
        rows: query_max_len,
        cols: cols.max(1),
        valid_rows: kept.max(1),
    }
}

/// Builds model inputs and caches them per (query id, doc id). For TbT-QT
/// variants, install each query's translated token ids first; scoring then
/// happens in the mono-lingual target space.
pub struct FeatureBuilder<'a> {
    pub cfg: &'a ModelConfig,
    bank: &'a TermVectorBank,
    stats: &'a CollectionStats,
    mus: Vec<f64>,
    query_tokens: HashMap<String, Vec<TermId>>,
    cache: HashMap<(String, String), Rc<ModelInput>>,
}

impl<'a> FeatureBuilder<'a> {
    pub fn new(cfg: &'a ModelConfig, bank: &'a TermVectorBank, stats: &'a CollectionStats) -> Self {
        Self {
            cfg,
            bank,
            stats,
            mus: default_kernel_mus(cfg.kernel_count),
            query_tokens: HashMap::new(),
            cache: HashMap::new(),
        }
    }

    /// Overrides the tokens used for a query (TbT-QT translation).
    pub fn set_query_tokens(&mut self, query_id: &str, tokens: Vec<TermId>) {
        self.query_tokens.insert(query_id.to_string(), tokens);
        self.cache.retain(|(q, _), _| q != query_id);
    }

    fn effective_tokens<'q>(&'q self, query: &'q Query) -> &'q [TermId] {
        self.query_tokens
            .get(&query.id)
            .map(Vec::as_slice)
            .unwrap_or(&query.tokens)
    }

    pub fn input(&mut self, query: &Query, doc: &Document) -> Rc<ModelInput> {
        let key = (query.id.clone(), doc.id.clone());
        if let Some(cached) = self.cache.get(&key) {
            return Rc::clone(cached);
        }
        let built = Rc::new(self.build(query, doc));
        self.cache.insert(key, Rc::clone(&built));
        built
    }

    fn build(&self, query: &Query, doc: &Document) -> ModelInput {
        let tokens = self.effective_tokens(query);
        let kept = tokens.len().min(self.cfg.query_max_len);
        let q_tokens = &tokens[..kept];
        let matrix = |kind: InteractionKind| {
            build_matrix(&query.id, &doc.id, q_tokens, &doc.tokens, self.bank, kind)
                .expect("validated interaction kind")
        };
        match self.cfg.kind {
            ModelKind::MpCosine | ModelKind::MpGaussian | ModelKind::MpExact => {
                let kind = match self.cfg.kind {
                    ModelKind::MpCosine => InteractionKind::Cosine,
                    ModelKind::MpGaussian => InteractionKind::Gaussian,
                    _ => InteractionKind::Indicator(self.cfg.eta),
                };
                let m = matrix(kind);
                ModelInput::Mp {
                    degenerate: m.is_degenerate(),
                    channel: pad_channel(&m, self.cfg.query_max_len),
                }
            }
            ModelKind::MpHybrid => {
                let mc = matrix(InteractionKind::Cosine);
                let mi = matrix(InteractionKind::Indicator(self.cfg.eta));
                ModelInput::MpHybrid {
                    degenerate: mc.is_degenerate(),
                    cosine: pad_channel(&mc, self.cfg.query_max_len),
                    indicator: pad_channel(&mi, self.cfg.query_max_len),
                }
            }
            ModelKind::Drmm => {
                let m = matrix(InteractionKind::Cosine);
                let h = build_histogram(&m, self.cfg.histogram_bins)
                    .expect("cosine matrix with validated bin count");
                let rows = kept;
                let mut features = Vec::with_capacity(rows * self.cfg.histogram_bins);
                for i in 0..rows {
                    features.extend_from_slice(h.row(i));
                }
                ModelInput::Drmm {
                    degenerate: m.is_degenerate(),
                    features,
                    rows,
                    bins: self.cfg.histogram_bins,
                    idf: q_tokens.iter().map(|&t| self.stats.idf(t)).collect(),
                    valid: m.valid_rows().to_vec(),
                }
            }
            ModelKind::Knrm => {
                let m = matrix(InteractionKind::Cosine);
                let k = kernel_pool(&m, &self.mus, self.cfg.kernel_sigma)
                    .expect("cosine matrix with validated sigma");
                let rows = kept;
                let mut features = Vec::with_capacity(rows * self.cfg.kernel_count);
                for i in 0..rows {
                    features.extend_from_slice(k.row(i));
                }
                ModelInput::Knrm {
                    degenerate: m.is_degenerate(),
                    features,
                    rows,
                    kernels: self.cfg.kernel_count,
                    valid: m.valid_rows().to_vec(),
                }
            }
        }
    }
}

/// Maps a term-by-term translation onto vocabulary ids: translated terms
/// resolve against the shared vocabulary, untranslatable terms keep their
/// original id (they simply will not match).
pub fn translated_token_ids(
    query: &Query,
    translated: &[String],
    vocab: &Vocabulary,
) -> Vec<TermId> {
    query
        .tokens
        .iter()
        .zip(translated)
        .map(|(&orig, term)| vocab.id(term).unwrap_or(orig))
        .collect()
}
