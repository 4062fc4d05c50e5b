//! Shared experiment plumbing: the preprocessed-index artifact, aligned
//! embedding loading with vocabulary filtering, and term-by-term query
//! translation setup.

use std::collections::HashSet;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use clirmatch_core::clwe::{load_embeddings, EmbeddingTable};
use clirmatch_core::corpus::{
    compute_stats, load_collection_into, load_queries, load_stopwords, Collection,
    CollectionStats, PreprocessOptions, Query, Vocabulary,
};
use clirmatch_core::neural::features::{translated_token_ids, FeatureBuilder};
use clirmatch_core::unsup::{tbtqt_translate, TranslatedQuery};

/// Preprocessed corpus bundle produced by `index` and consumed by every
/// ranking command.
#[derive(Debug, Serialize, Deserialize)]
pub struct IndexArtifact {
    pub options: PreprocessOptions,
    pub vocab: Vocabulary,
    pub collection: Collection,
    pub queries: Vec<Query>,
    /// Queries that preprocessed to zero tokens.
    pub flagged_empty_queries: Vec<String>,
    pub stats: CollectionStats,
}

pub fn build_index(
    collection_path: &Path,
    queries_path: &Path,
    stopwords_path: Option<&Path>,
    options: PreprocessOptions,
) -> Result<IndexArtifact> {
    let stopwords = match stopwords_path {
        Some(p) => load_stopwords(p).context("loading stopwords")?,
        None => HashSet::new(),
    };
    let mut vocab = Vocabulary::new();
    let collection = load_collection_into(collection_path, &stopwords, &options, &mut vocab)
        .context("loading collection")?;
    let (queries, flagged) =
        load_queries(queries_path, &stopwords, &mut vocab).context("loading queries")?;
    let stats = compute_stats(&collection).context("computing collection statistics")?;
    Ok(IndexArtifact {
        options,
        vocab,
        collection,
        queries,
        flagged_empty_queries: flagged,
        stats,
    })
}

pub fn save_index(index: &IndexArtifact, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)
        .with_context(|| format!("creating index file {}", path.display()))?;
    serde_json::to_writer(std::io::BufWriter::new(file), index)?;
    Ok(())
}

pub fn load_index(path: &Path) -> Result<IndexArtifact> {
    let file = std::fs::File::open(path)
        .with_context(|| format!("opening index file {}", path.display()))?;
    serde_json::from_reader(std::io::BufReader::new(file))
        .with_context(|| format!("parsing index file {}", path.display()))
}

impl IndexArtifact {
    pub fn query(&self, id: &str) -> Option<&Query> {
        self.queries.iter().find(|q| q.id == id)
    }

    /// Unique terms appearing in documents (the target-language vocabulary
    /// for translation candidates).
    pub fn collection_terms(&self) -> HashSet<String> {
        let mut ids: HashSet<u32> = HashSet::new();
        for doc in self.collection.docs() {
            ids.extend(doc.tokens.iter().map(|t| t.0));
        }
        ids.into_iter()
            .map(|i| self.vocab.term(clirmatch_core::corpus::TermId(i)).to_string())
            .collect()
    }
}

/// Loads the aligned source/target embedding files filtered to the corpus
/// vocabulary and merges them (source side wins collisions). A single file
/// serves both sides in the mono-lingual degenerate case.
pub fn load_embedding_pair(
    src: &Path,
    tgt: Option<&Path>,
    vocab: &Vocabulary,
) -> Result<EmbeddingTable> {
    let filter: HashSet<String> = vocab.terms().iter().cloned().collect();
    let (src_table, src_warn) = load_embeddings(src, Some(&filter), "src", "src")
        .with_context(|| format!("loading embeddings {}", src.display()))?;
    let table = match tgt {
        None => src_table,
        Some(tgt_path) => {
            let (tgt_table, tgt_warn) = load_embeddings(tgt_path, Some(&filter), "tgt", "tgt")
                .with_context(|| format!("loading embeddings {}", tgt_path.display()))?;
            if tgt_warn.duplicate_terms + tgt_warn.zero_vectors > 0 {
                eprintln!(
                    "warning: {} duplicate terms, {} zero vectors skipped in {}",
                    tgt_warn.duplicate_terms,
                    tgt_warn.zero_vectors,
                    tgt_path.display()
                );
            }
            let (merged, collisions) = src_table.merge(&tgt_table)?;
            if collisions > 0 {
                eprintln!("warning: {collisions} terms present on both sides; source vectors kept");
            }
            merged
        }
    };
    if src_warn.duplicate_terms + src_warn.zero_vectors > 0 {
        eprintln!(
            "warning: {} duplicate terms, {} zero vectors skipped in {}",
            src_warn.duplicate_terms,
            src_warn.zero_vectors,
            src.display()
        );
    }
    Ok(table)
}

/// Translates every query term-by-term against the collection vocabulary.
pub fn translate_queries(
    index: &IndexArtifact,
    table: &EmbeddingTable,
) -> Vec<TranslatedQuery> {
    let candidates = index.collection_terms();
    index
        .queries
        .iter()
        .map(|q| tbtqt_translate(q, &index.vocab, table, &candidates))
        .collect()
}

/// Installs term-by-term translations into a feature builder so neural
/// scoring happens in the mono-lingual target space.
pub fn install_translations(
    features: &mut FeatureBuilder,
    index: &IndexArtifact,
    translations: &[TranslatedQuery],
) {
    for (query, tr) in index.queries.iter().zip(translations) {
        debug_assert_eq!(query.id, tr.query_id);
        let ids = translated_token_ids(query, &tr.translated, &index.vocab);
        features.set_query_tokens(&query.id, ids);
    }
}
