//! Unsupervised CLIR baselines: BWE-Agg-Add / BWE-Agg-IDF (cosine of
//! aggregated embeddings) and term-by-term query translation (TbT-QT)
//! paired with Dirichlet-smoothed query likelihood or BM25.

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::clwe::{nearest_neighbors, EmbeddingTable, NeighborResult};
use crate::corpus::{Collection, CollectionStats, Document, Query, TermId, Vocabulary};

#[derive(Debug, Error)]
pub enum UnsupError {
    #[error("query {0:?} has no embeddable tokens")]
    QueryNotEmbeddable(String),
}

/// Aggregation weighting for BWE-Agg.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weighting {
    Uniform,
    Idf,
}

/// A per-query ranking: entries sorted by score descending, doc id
/// ascending on ties. Construction enforces the ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredList {
    pub query_id: String,
    entries: Vec<(String, f64)>,
}

impl ScoredList {
    pub fn from_unsorted(query_id: &str, mut entries: Vec<(String, f64)>) -> Self {
        entries.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.0.cmp(&b.0))
        });
        Self {
            query_id: query_id.to_string(),
            entries,
        }
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(d, _)| d.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Aggregates token embeddings into one vector: plain mean under
/// [`Weighting::Uniform`], IDF-weighted mean under [`Weighting::Idf`].
/// Tokens without embeddings are skipped; `None` when every token is OOV.
pub fn bwe_agg_embed(
    tokens: &[TermId],
    vocab: &Vocabulary,
    table: &EmbeddingTable,
    weighting: Weighting,
    stats: &CollectionStats,
) -> Option<Vec<f64>> {
    bwe_agg_embed_weighted(tokens, vocab, table, |t| match weighting {
        Weighting::Uniform => 1.0,
        Weighting::Idf => stats.idf(t),
    })
}

/// Weighted-mean core: `sum w(t) * vec(t) / sum w(t)` over embeddable tokens.
pub fn bwe_agg_embed_weighted(
    tokens: &[TermId],
    vocab: &Vocabulary,
    table: &EmbeddingTable,
    weight: impl Fn(TermId) -> f64,
) -> Option<Vec<f64>> {
    let mut acc = vec![0.0f64; table.dimension()];
    let mut weight_sum = 0.0f64;
    for &t in tokens {
        let Some(vec) = table.raw_vector(vocab.term(t)) else {
            continue;
        };
        let w = weight(t);
        for (a, v) in acc.iter_mut().zip(vec) {
            *a += w * v;
        }
        weight_sum += w;
    }
    if weight_sum == 0.0 {
        return None;
    }
    for a in &mut acc {
        *a /= weight_sum;
    }
    Some(acc)
}

/// Ranks the whole collection by cosine of aggregated query and document
/// embeddings. Documents whose tokens are all OOV rank last.
pub fn bwe_agg_rank(
    query: &Query,
    collection: &Collection,
    vocab: &Vocabulary,
    table: &EmbeddingTable,
    weighting: Weighting,
    stats: &CollectionStats,
) -> Result<ScoredList, UnsupError> {
    let q_emb = bwe_agg_embed(&query.tokens, vocab, table, weighting, stats)
        .ok_or_else(|| UnsupError::QueryNotEmbeddable(query.id.clone()))?;
    let entries = collection
        .docs()
        .iter()
        .map(|doc| {
            let score = bwe_agg_embed(&doc.tokens, vocab, table, weighting, stats)
                .and_then(|d_emb| crate::clwe::cosine(&q_emb, &d_emb).ok())
                .unwrap_or(f64::NEG_INFINITY);
            (doc.id.clone(), score)
        })
        .collect();
    Ok(ScoredList::from_unsorted(&query.id, entries))
}

/// A query translated term-by-term into the target language. OOV source
/// terms are carried through verbatim and flagged.
#[derive(Debug, Clone, PartialEq)]
pub struct TranslatedQuery {
    pub query_id: String,
    pub original: Vec<String>,
    pub translated: Vec<String>,
    pub per_term_similarity: Vec<f64>,
    pub oov: Vec<bool>,
}

impl TranslatedQuery {
    /// Maps translated terms onto a collection vocabulary, dropping terms
    /// the collection never saw (they cannot match any document).
    pub fn resolve(&self, vocab: &Vocabulary) -> Vec<TermId> {
        self.translated.iter().filter_map(|t| vocab.id(t)).collect()
    }
}

/// Replaces each query term with its nearest neighbor among
/// `target_vocab` ∩ table (top-1 translation).
pub fn tbtqt_translate(
    query: &Query,
    vocab: &Vocabulary,
    table: &EmbeddingTable,
    target_vocab: &HashSet<String>,
) -> TranslatedQuery {
    let mut out = TranslatedQuery {
        query_id: query.id.clone(),
        original: Vec::with_capacity(query.tokens.len()),
        translated: Vec::with_capacity(query.tokens.len()),
        per_term_similarity: Vec::with_capacity(query.tokens.len()),
        oov: Vec::with_capacity(query.tokens.len()),
    };
    for &t in &query.tokens {
        let term = vocab.term(t);
        out.original.push(term.to_string());
        match nearest_neighbors(term, 1, table, Some(target_vocab)) {
            NeighborResult::Found(n) if !n.is_empty() => {
                out.translated.push(n[0].0.clone());
                out.per_term_similarity.push(n[0].1);
                out.oov.push(false);
            }
            _ => {
                out.translated.push(term.to_string());
                out.per_term_similarity.push(0.0);
                out.oov.push(true);
            }
        }
    }
    out
}

fn term_frequencies(doc: &Document) -> HashMap<TermId, u32> {
    let mut tf = HashMap::with_capacity(doc.tokens.len());
    for &t in &doc.tokens {
        *tf.entry(t).or_insert(0) += 1;
    }
    tf
}

/// Dirichlet-smoothed query-likelihood log score:
/// `sum_t ln((tf(t,d) + mu * p(t|C)) / (|d| + mu))` over query tokens with
/// nonzero collection probability. Tokens the collection never saw are
/// skipped.
pub fn ql_score(query_tokens: &[TermId], doc: &Document, stats: &CollectionStats, mu: f64) -> f64 {
    assert!(mu > 0.0, "Dirichlet mu must be positive");
    let tf = term_frequencies(doc);
    let dl = doc.tokens.len() as f64;
    query_tokens
        .iter()
        .filter_map(|&t| {
            let p = stats.collection_prob(t);
            if p == 0.0 {
                return None;
            }
            let f = f64::from(tf.get(&t).copied().unwrap_or(0));
            Some(((f + mu * p) / (dl + mu)).ln())
        })
        .sum()
}

/// Robertson BM25:
/// `sum_t idf(t) * tf*(k1+1) / (tf + k1*(1 - b + b*|d|/avgdl))`.
pub fn bm25_score(
    query_tokens: &[TermId],
    doc: &Document,
    stats: &CollectionStats,
    k1: f64,
    b: f64,
) -> f64 {
    assert!(k1 > 0.0, "k1 must be positive");
    assert!((0.0..=1.0).contains(&b), "b must be in [0, 1]");
    let tf = term_frequencies(doc);
    let dl = doc.tokens.len() as f64;
    let len_norm = k1 * (1.0 - b + b * dl / stats.avg_doc_len);
    query_tokens
        .iter()
        .filter_map(|&t| {
            let f = f64::from(tf.get(&t).copied().unwrap_or(0));
            if f == 0.0 {
                return None;
            }
            Some(stats.idf(t) * f * (k1 + 1.0) / (f + len_norm))
        })
        .sum()
}

/// Ranks every document in the collection by `ql_score`.
pub fn ql_rank(
    query_id: &str,
    query_tokens: &[TermId],
    collection: &Collection,
    stats: &CollectionStats,
    mu: f64,
) -> ScoredList {
    let entries = collection
        .docs()
        .iter()
        .map(|d| (d.id.clone(), ql_score(query_tokens, d, stats, mu)))
        .collect();
    ScoredList::from_unsorted(query_id, entries)
}

/// Ranks every document in the collection by `bm25_score`.
pub fn bm25_rank(
    query_id: &str,
    query_tokens: &[TermId],
    collection: &Collection,
    stats: &CollectionStats,
    k1: f64,
    b: f64,
) -> ScoredList {
    let entries = collection
        .docs()
        .iter()
        .map(|d| (d.id.clone(), bm25_score(query_tokens, d, stats, k1, b)))
        .collect();
    ScoredList::from_unsorted(query_id, entries)
}

/// Ranks a candidate subset (for judged-pool evaluation); candidates
/// missing from the collection are skipped.
pub fn ql_rank_candidates(
    query_id: &str,
    query_tokens: &[TermId],
    candidates: &[&str],
    collection: &Collection,
    stats: &CollectionStats,
    mu: f64,
) -> ScoredList {
    let entries = candidates
        .iter()
        .filter_map(|id| {
            collection
                .doc(id)
                .map(|d| (id.to_string(), ql_score(query_tokens, d, stats, mu)))
        })
        .collect();
    ScoredList::from_unsorted(query_id, entries)
}

/// Candidate-subset variant of [`bm25_rank`].
pub fn bm25_rank_candidates(
    query_id: &str,
    query_tokens: &[TermId],
    candidates: &[&str],
    collection: &Collection,
    stats: &CollectionStats,
    k1: f64,
    b: f64,
) -> ScoredList {
    let entries = candidates
        .iter()
        .filter_map(|id| {
            collection
                .doc(id)
                .map(|d| (id.to_string(), bm25_score(query_tokens, d, stats, k1, b)))
        })
        .collect();
    ScoredList::from_unsorted(query_id, entries)
}

/// Candidate-subset variant of [`bwe_agg_rank`].
pub fn bwe_agg_rank_candidates(
    query: &Query,
    candidates: &[&str],
    collection: &Collection,
    vocab: &Vocabulary,
    table: &EmbeddingTable,
    weighting: Weighting,
    stats: &CollectionStats,
) -> Result<ScoredList, UnsupError> {
    let q_emb = bwe_agg_embed(&query.tokens, vocab, table, weighting, stats)
        .ok_or_else(|| UnsupError::QueryNotEmbeddable(query.id.clone()))?;
    let entries = candidates
        .iter()
        .filter_map(|id| collection.doc(id))
        .map(|doc| {
            let score = bwe_agg_embed(&doc.tokens, vocab, table, weighting, stats)
                .and_then(|d_emb| crate::clwe::cosine(&q_emb, &d_emb).ok())
                .unwrap_or(f64::NEG_INFINITY);
            (doc.id.clone(), score)
        })
        .collect();
    Ok(ScoredList::from_unsorted(&query.id, entries))
}

/// Default Dirichlet smoothing parameter for title-length queries.
pub const DEFAULT_QL_MU: f64 = 1000.0;
/// Default BM25 parameters.
pub const DEFAULT_BM25_K1: f64 = 1.2;
pub const DEFAULT_BM25_B: f64 = 0.75;
