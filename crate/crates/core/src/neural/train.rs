//! Pairwise hinge-loss training: per-epoch negative resampling, mini-batch
//! Adam, epoch selection by validation MAP, and judged-pool reranking.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::corpus::{Collection, Qrels, Query};
use crate::eval::average_precision;
use crate::neural::features::FeatureBuilder;
use crate::neural::models::{backward, forward, init_params, score};
use crate::neural::tensor::ModelParams;
use crate::neural::{ModelConfig, TrainConfig};
use crate::unsup::ScoredList;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("train and validation query sets overlap on {0:?}")]
    OverlappingSplits(String),
    #[error("validation set is empty")]
    EmptyValidation,
    #[error("no valid training triples (every query lacks positives or judged negatives)")]
    NoTriples,
    #[error("query {0:?} not found")]
    UnknownQuery(String),
    #[error("document {0:?} not found in the collection")]
    UnknownDocument(String),
}

/// `max(0, margin - s_pos + s_neg)`; the boundary counts as inactive.
pub fn hinge_loss(s_pos: f64, s_neg: f64, margin: f64) -> f64 {
    (margin - s_pos + s_neg).max(0.0)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Triple {
    pub query_id: String,
    pub pos_doc_id: String,
    pub neg_doc_id: String,
}

/// Samples `neg_per_pos` negatives for every relevant document of every
/// train query, uniformly from that query's judged non-relevant documents:
/// distinct when the pool is large enough, with replacement otherwise.
/// Queries lacking positives or judged negatives are skipped and reported.
pub fn sample_triples(
    qrels: &Qrels,
    train_queries: &[String],
    neg_per_pos: usize,
    rng: &mut ChaCha8Rng,
) -> (Vec<Triple>, Vec<String>) {
    let mut triples = Vec::new();
    let mut skipped = Vec::new();
    for q in train_queries {
        let positives = qrels.relevant(q);
        let negatives = qrels.judged_nonrelevant(q);
        if positives.is_empty() || negatives.is_empty() {
            skipped.push(q.clone());
            continue;
        }
        for pos in &positives {
            let chosen: Vec<&str> = if negatives.len() >= neg_per_pos {
                rand::seq::index::sample(rng, negatives.len(), neg_per_pos)
                    .into_iter()
                    .map(|i| negatives[i])
                    .collect()
            } else {
                (0..neg_per_pos)
                    .map(|_| negatives[rng.gen_range(0..negatives.len())])
                    .collect()
            };
            for neg in chosen {
                triples.push(Triple {
                    query_id: q.clone(),
                    pos_doc_id: pos.to_string(),
                    neg_doc_id: neg.to_string(),
                });
            }
        }
    }
    (triples, skipped)
}

/// First and second moment buffers aligned with the parameter order.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    pub t: usize,
}

impl AdamState {
    pub fn new(params: &ModelParams) -> Self {
        Self {
            m: params.iter().map(|(_, t)| vec![0.0; t.len()]).collect(),
            v: params.iter().map(|(_, t)| vec![0.0; t.len()]).collect(),
            t: 0,
        }
    }
}

/// One Adam update with bias correction from the gradients currently
/// accumulated in `params`.
pub fn adam_step(params: &mut ModelParams, state: &mut AdamState, cfg: &TrainConfig) {
    state.t += 1;
    let t = state.t as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);
    for (slot, (_, tensor)) in params.iter_mut().enumerate() {
        let m = &mut state.m[slot];
        let v = &mut state.v[slot];
        for i in 0..tensor.values.len() {
            let g = tensor.grad[i];
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            tensor.values[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub mean_loss: f64,
    pub val_map: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the best-validation-MAP epoch.
    pub params: ModelParams,
    pub best_epoch: usize,
    pub log: Vec<EpochLog>,
    /// Queries skipped during sampling (no positives or no negatives).
    pub skipped_queries: Vec<String>,
}

/// Corpus handles used by training and reranking.
pub struct TrainData<'a> {
    pub collection: &'a Collection,
    pub qrels: &'a Qrels,
    pub queries: &'a [Query],
}

impl TrainData<'_> {
    pub fn query(&self, id: &str) -> Option<&Query> {
        self.queries.iter().find(|q| q.id == id)
    }
}

/// Scores every candidate with the model and sorts descending (doc-id
/// tie-break). Candidates missing from the collection are skipped.
pub fn rerank(
    params: &ModelParams,
    cfg: &ModelConfig,
    query: &Query,
    candidates: &[&str],
    collection: &Collection,
    features: &mut FeatureBuilder,
) -> ScoredList {
    let entries = candidates
        .iter()
        .filter_map(|doc_id| {
            let doc = collection.doc(doc_id)?;
            let input = features.input(query, doc);
            Some((doc_id.to_string(), score(params, cfg, &input).value))
        })
        .collect();
    ScoredList::from_unsorted(&query.id, entries)
}

/// MAP over the judged candidate pool of each listed query; queries with
/// no relevant judged documents are excluded.
pub fn judged_pool_map(
    params: &ModelParams,
    cfg: &ModelConfig,
    data: &TrainData,
    query_ids: &[String],
    features: &mut FeatureBuilder,
) -> Result<f64, TrainError> {
    let mut aps = Vec::new();
    for qid in query_ids {
        let query = data
            .query(qid)
            .ok_or_else(|| TrainError::UnknownQuery(qid.clone()))?;
        let judged: Vec<&str> = data.qrels.judged(qid).into_iter().map(|(d, _)| d).collect();
        let ranked = rerank(params, cfg, query, &judged, data.collection, features);
        let relevant: std::collections::HashSet<&str> =
            data.qrels.relevant(qid).into_iter().collect();
        let ids: Vec<&str> = ranked.doc_ids().collect();
        if let Some(ap) = average_precision(&ids, &relevant) {
            aps.push(ap);
        }
    }
    Ok(if aps.is_empty() {
        0.0
    } else {
        aps.iter().sum::<f64>() / aps.len() as f64
    })
}

/// Trains with pairwise hinge loss: negatives resampled every epoch,
/// mini-batch gradient means, Adam updates, and parameter selection by
/// validation MAP (earliest epoch wins ties). Deterministic under the
/// config seeds.
pub fn train(
    cfg: &ModelConfig,
    tcfg: &TrainConfig,
    data: &TrainData,
    train_ids: &[String],
    val_ids: &[String],
    features: &mut FeatureBuilder,
) -> Result<TrainOutcome, TrainError> {
    if val_ids.is_empty() {
        return Err(TrainError::EmptyValidation);
    }
    if let Some(overlap) = train_ids.iter().find(|q| val_ids.contains(q)) {
        return Err(TrainError::OverlappingSplits(overlap.clone()));
    }
    let mut params = init_params(cfg);
    let mut state = AdamState::new(&params);
    let mut rng = ChaCha8Rng::seed_from_u64(tcfg.seed);
    let mut log = Vec::new();
    let mut best: Option<(f64, usize, ModelParams)> = None;
    let mut skipped_queries = Vec::new();

    for epoch in 1..=tcfg.max_epochs {
        let (mut triples, skipped) = sample_triples(data.qrels, train_ids, tcfg.neg_per_pos, &mut rng);
        if epoch == 1 {
            skipped_queries = skipped;
            if triples.is_empty() {
                return Err(TrainError::NoTriples);
            }
        }
        triples.shuffle(&mut rng);

        let mut loss_sum = 0.0;
        for batch in triples.chunks(tcfg.batch_size) {
            params.zero_grads();
            let scale = 1.0 / batch.len() as f64;
            for triple in batch {
                let query = data
                    .query(&triple.query_id)
                    .ok_or_else(|| TrainError::UnknownQuery(triple.query_id.clone()))?;
                let pos = data
                    .collection
                    .doc(&triple.pos_doc_id)
                    .ok_or_else(|| TrainError::UnknownDocument(triple.pos_doc_id.clone()))?;
                let neg = data
                    .collection
                    .doc(&triple.neg_doc_id)
                    .ok_or_else(|| TrainError::UnknownDocument(triple.neg_doc_id.clone()))?;
                let input_pos = features.input(query, pos);
                let input_neg = features.input(query, neg);
                let (s_pos, cache_pos) = forward(&params, cfg, &input_pos);
                let (s_neg, cache_neg) = forward(&params, cfg, &input_neg);
                let loss = hinge_loss(s_pos.value, s_neg.value, tcfg.margin);
                loss_sum += loss;
                if loss > 0.0 {
                    backward(&mut params, cfg, &input_pos, &cache_pos, -scale);
                    backward(&mut params, cfg, &input_neg, &cache_neg, scale);
                }
            }
            adam_step(&mut params, &mut state, tcfg);
        }

        let val_map = judged_pool_map(&params, cfg, data, val_ids, features)?;
        log.push(EpochLog {
            epoch,
            mean_loss: loss_sum / triples.len() as f64,
            val_map,
        });
        let improved = best.as_ref().map_or(true, |(b, _, _)| val_map > *b);
        if improved {
            best = Some((val_map, epoch, params.clone()));
        }
    }

    let (_, best_epoch, best_params) = best.expect("at least one epoch ran");
    Ok(TrainOutcome {
        params: best_params,
        best_epoch,
        log,
        skipped_queries,
    })
}
