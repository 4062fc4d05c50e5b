//! Corpus ingestion: documents, queries, stopwords, relevance judgments,
//! and the collection statistics (IDF, lengths) used by retrievers and
//! attention gating.
//!
//! File formats:
//! - collection / queries: UTF-8, one record per line, `id<TAB>raw text`
//! - qrels: TREC format, whitespace-separated `queryId iter docId grade`
//! - stopwords: one token per line

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_general_category::{get_general_category, GeneralCategory};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed line: {reason}")]
    MalformedLine {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("{path}:{line}: duplicate document id {id:?}")]
    DuplicateDocId {
        path: String,
        line: usize,
        id: String,
    },
    #[error("{path}:{line}: duplicate qrels pair ({query_id:?}, {doc_id:?})")]
    DuplicateQrelsPair {
        path: String,
        line: usize,
        query_id: String,
        doc_id: String,
    },
    #[error("collection is empty")]
    EmptyCollection,
}

/// Dense identifier into a [`Vocabulary`].
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct TermId(pub u32);

impl TermId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Bijective term <-> id map with ids dense in `[0, len)`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Vocabulary {
    by_term: HashMap<String, TermId>,
    terms: Vec<String>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the id for `term`, inserting it if unseen.
    pub fn intern(&mut self, term: &str) -> TermId {
        if let Some(&id) = self.by_term.get(term) {
            return id;
        }
        let id = TermId(self.terms.len() as u32);
        self.terms.push(term.to_string());
        self.by_term.insert(term.to_string(), id);
        id
    }

    pub fn id(&self, term: &str) -> Option<TermId> {
        self.by_term.get(term).copied()
    }

    pub fn term(&self, id: TermId) -> &str {
        &self.terms[id.index()]
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in id order.
    pub fn terms(&self) -> &[String] {
        &self.terms
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub tokens: Vec<TermId>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Query {
    pub id: String,
    pub tokens: Vec<TermId>,
}

/// Immutable set of preprocessed documents, addressable by position or id.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Collection {
    docs: Vec<Document>,
    index: HashMap<String, usize>,
}

impl Collection {
    pub fn from_documents(docs: Vec<Document>) -> Self {
        let index = docs
            .iter()
            .enumerate()
            .map(|(i, d)| (d.id.clone(), i))
            .collect();
        Self { docs, index }
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn docs(&self) -> &[Document] {
        &self.docs
    }

    pub fn doc(&self, doc_id: &str) -> Option<&Document> {
        self.index.get(doc_id).map(|&i| &self.docs[i])
    }

    pub fn contains(&self, doc_id: &str) -> bool {
        self.index.contains_key(doc_id)
    }
}

fn is_punctuation(c: char) -> bool {
    matches!(
        get_general_category(c),
        GeneralCategory::ConnectorPunctuation
            | GeneralCategory::DashPunctuation
            | GeneralCategory::OpenPunctuation
            | GeneralCategory::ClosePunctuation
            | GeneralCategory::InitialPunctuation
            | GeneralCategory::FinalPunctuation
            | GeneralCategory::OtherPunctuation
    )
}

/// Lowercases, splits on Unicode whitespace, strips punctuation from token
/// boundaries (interior hyphens and apostrophes survive), and drops
/// stopwords and tokens shorter than two characters. Order is preserved.
pub fn preprocess_text(raw: &str, stopwords: &HashSet<String>) -> Vec<String> {
    raw.to_lowercase()
        .split_whitespace()
        .filter_map(|tok| {
            let stripped = tok.trim_matches(is_punctuation);
            if stripped.chars().count() < 2 || stopwords.contains(stripped) {
                None
            } else {
                Some(stripped.to_string())
            }
        })
        .collect()
}

/// One token per line; blank lines ignored. Tokens are lowercased so the
/// list matches post-preprocessing tokens regardless of source casing.
pub fn load_stopwords(path: &Path) -> Result<HashSet<String>, CorpusError> {
    let reader = open(path)?;
    let mut out = HashSet::new();
    for line in reader.lines() {
        let line = line.map_err(|e| io_err(path, e))?;
        let tok = line.trim();
        if !tok.is_empty() {
            out.insert(tok.to_lowercase());
        }
    }
    Ok(out)
}

/// Controls document-side preprocessing.
///
/// By default the truncation limit applies to content tokens (after
/// stopword and punctuation removal). Set `truncate_raw_tokens` to count
/// the first `truncation_limit` whitespace tokens of the raw text instead.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PreprocessOptions {
    pub truncation_limit: usize,
    pub truncate_raw_tokens: bool,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        Self {
            truncation_limit: 500,
            truncate_raw_tokens: false,
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>, CorpusError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| io_err(path, e))
}

fn io_err(path: &Path, e: std::io::Error) -> CorpusError {
    CorpusError::Io {
        path: path.display().to_string(),
        source: e,
    }
}

fn split_tsv(line: &str) -> Option<(&str, &str)> {
    let (id, text) = line.split_once('\t')?;
    if id.trim().is_empty() {
        return None;
    }
    Some((id.trim(), text))
}

/// Loads `docId<TAB>raw text` lines, preprocesses and truncates each
/// document, and interns surviving tokens into a fresh vocabulary.
pub fn load_collection(
    path: &Path,
    stopwords: &HashSet<String>,
    opts: &PreprocessOptions,
) -> Result<(Collection, Vocabulary), CorpusError> {
    let mut vocab = Vocabulary::new();
    let collection = load_collection_into(path, stopwords, opts, &mut vocab)?;
    Ok((collection, vocab))
}

/// Same as [`load_collection`] but interning into an existing vocabulary,
/// so queries and documents can share one id space.
pub fn load_collection_into(
    path: &Path,
    stopwords: &HashSet<String>,
    opts: &PreprocessOptions,
    vocab: &mut Vocabulary,
) -> Result<Collection, CorpusError> {
    let reader = open(path)?;
    let mut docs: Vec<Document> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = lineno + 1;
        let (id, text) = split_tsv(&line).ok_or_else(|| CorpusError::MalformedLine {
            path: path.display().to_string(),
            line: lineno,
            reason: "expected `docId<TAB>text`".into(),
        })?;
        if index.contains_key(id) {
            return Err(CorpusError::DuplicateDocId {
                path: path.display().to_string(),
                line: lineno,
                id: id.to_string(),
            });
        }
        let tokens = preprocess_and_truncate(text, stopwords, opts, vocab);
        index.insert(id.to_string(), docs.len());
        docs.push(Document {
            id: id.to_string(),
            tokens,
        });
    }
    Ok(Collection { docs, index })
}

fn preprocess_and_truncate(
    text: &str,
    stopwords: &HashSet<String>,
    opts: &PreprocessOptions,
    vocab: &mut Vocabulary,
) -> Vec<TermId> {
    let tokens = if opts.truncate_raw_tokens {
        let prefix: Vec<&str> = text
            .split_whitespace()
            .take(opts.truncation_limit)
            .collect();
        preprocess_text(&prefix.join(" "), stopwords)
    } else {
        let mut t = preprocess_text(text, stopwords);
        t.truncate(opts.truncation_limit);
        t
    };
    tokens.iter().map(|t| vocab.intern(t)).collect()
}

/// Loads `queryId<TAB>title text` lines. Queries that end up empty after
/// preprocessing are kept but their ids are returned separately so callers
/// can warn or drop them.
pub fn load_queries(
    path: &Path,
    stopwords: &HashSet<String>,
    vocab: &mut Vocabulary,
) -> Result<(Vec<Query>, Vec<String>), CorpusError> {
    let reader = open(path)?;
    let mut queries = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    let mut empty_ids = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = lineno + 1;
        let (id, text) = split_tsv(&line).ok_or_else(|| CorpusError::MalformedLine {
            path: path.display().to_string(),
            line: lineno,
            reason: "expected `queryId<TAB>text`".into(),
        })?;
        if !seen.insert(id.to_string()) {
            return Err(CorpusError::DuplicateDocId {
                path: path.display().to_string(),
                line: lineno,
                id: id.to_string(),
            });
        }
        let tokens: Vec<TermId> = preprocess_text(text, stopwords)
            .iter()
            .map(|t| vocab.intern(t))
            .collect();
        if tokens.is_empty() {
            empty_ids.push(id.to_string());
        }
        queries.push(Query {
            id: id.to_string(),
            tokens,
        });
    }
    Ok((queries, empty_ids))
}

/// Collection-level statistics. Document frequency, collection term
/// frequency, and IDF are total over all term ids: terms absent from the
/// collection have `df = 0` and the maximal IDF.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CollectionStats {
    pub doc_count: usize,
    doc_freq: Vec<u32>,
    coll_tf: Vec<u64>,
    pub avg_doc_len: f64,
    pub total_tokens: u64,
    doc_len: HashMap<String, usize>,
}

impl CollectionStats {
    pub fn doc_freq(&self, t: TermId) -> u32 {
        self.doc_freq.get(t.index()).copied().unwrap_or(0)
    }

    pub fn coll_tf(&self, t: TermId) -> u64 {
        self.coll_tf.get(t.index()).copied().unwrap_or(0)
    }

    /// BM25-style IDF: `ln((N - df + 0.5) / (df + 0.5) + 1)`, nonnegative
    /// for any `df <= N`.
    pub fn idf(&self, t: TermId) -> f64 {
        let n = self.doc_count as f64;
        let df = f64::from(self.doc_freq(t));
        ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
    }

    /// Collection language-model probability `cf(t) / total_tokens`.
    pub fn collection_prob(&self, t: TermId) -> f64 {
        if self.total_tokens == 0 {
            return 0.0;
        }
        self.coll_tf(t) as f64 / self.total_tokens as f64
    }

    pub fn doc_len(&self, doc_id: &str) -> Option<usize> {
        self.doc_len.get(doc_id).copied()
    }
}

/// Computes document frequency, collection term frequency, IDF inputs, and
/// length statistics over a non-empty collection.
pub fn compute_stats(collection: &Collection) -> Result<CollectionStats, CorpusError> {
    if collection.is_empty() {
        return Err(CorpusError::EmptyCollection);
    }
    let max_id = collection
        .docs()
        .iter()
        .flat_map(|d| d.tokens.iter())
        .map(|t| t.index() + 1)
        .max()
        .unwrap_or(0);
    let mut doc_freq = vec![0u32; max_id];
    let mut coll_tf = vec![0u64; max_id];
    let mut doc_len = HashMap::with_capacity(collection.len());
    let mut total_tokens = 0u64;
    let mut seen_in_doc: HashSet<TermId> = HashSet::new();
    for doc in collection.docs() {
        doc_len.insert(doc.id.clone(), doc.tokens.len());
        total_tokens += doc.tokens.len() as u64;
        seen_in_doc.clear();
        for &t in &doc.tokens {
            coll_tf[t.index()] += 1;
            if seen_in_doc.insert(t) {
                doc_freq[t.index()] += 1;
            }
        }
    }
    let avg_doc_len = total_tokens as f64 / collection.len() as f64;
    Ok(CollectionStats {
        doc_count: collection.len(),
        doc_freq,
        coll_tf,
        avg_doc_len,
        total_tokens,
        doc_len,
    })
}

/// Binary relevance judgments. File grades `-1` and `0` both map to grade
/// 0 (judged non-relevant); grades `>= 1` map to 1.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Qrels {
    by_query: BTreeMap<String, BTreeMap<String, u8>>,
}

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a judgment; `false` when the pair was already present.
    pub fn insert(&mut self, query_id: &str, doc_id: &str, grade: u8) -> bool {
        self.by_query
            .entry(query_id.to_string())
            .or_default()
            .insert(doc_id.to_string(), grade.min(1))
            .is_none()
    }

    pub fn grade(&self, query_id: &str, doc_id: &str) -> Option<u8> {
        self.by_query.get(query_id)?.get(doc_id).copied()
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.by_query.keys().map(String::as_str)
    }

    /// Judged documents of a query in doc-id order, with grades.
    pub fn judged(&self, query_id: &str) -> Vec<(&str, u8)> {
        self.by_query
            .get(query_id)
            .map(|m| m.iter().map(|(d, &g)| (d.as_str(), g)).collect())
            .unwrap_or_default()
    }

    pub fn relevant(&self, query_id: &str) -> Vec<&str> {
        self.judged(query_id)
            .into_iter()
            .filter_map(|(d, g)| (g == 1).then_some(d))
            .collect()
    }

    pub fn judged_nonrelevant(&self, query_id: &str) -> Vec<&str> {
        self.judged(query_id)
            .into_iter()
            .filter_map(|(d, g)| (g == 0).then_some(d))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.by_query.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.by_query.is_empty()
    }

    /// Judged doc ids that do not resolve against the collection.
    pub fn unresolved<'a>(&'a self, collection: &Collection) -> Vec<(&'a str, &'a str)> {
        let mut out = Vec::new();
        for (q, docs) in &self.by_query {
            for d in docs.keys() {
                if !collection.contains(d) {
                    out.push((q.as_str(), d.as_str()));
                }
            }
        }
        out
    }
}

/// Parses TREC qrels: whitespace-separated `queryId iter docId grade`.
pub fn load_qrels(path: &Path) -> Result<Qrels, CorpusError> {
    let reader = open(path)?;
    let mut qrels = Qrels::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = lineno + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(CorpusError::MalformedLine {
                path: path.display().to_string(),
                line: lineno,
                reason: format!("expected 4 whitespace-separated fields, got {}", fields.len()),
            });
        }
        let grade: i32 = fields[3].parse().map_err(|_| CorpusError::MalformedLine {
            path: path.display().to_string(),
            line: lineno,
            reason: format!("grade {:?} is not an integer", fields[3]),
        })?;
        let grade = if grade >= 1 { 1 } else { 0 };
        if !qrels.insert(fields[0], fields[2], grade) {
            return Err(CorpusError::DuplicateQrelsPair {
                path: path.display().to_string(),
                line: lineno,
                query_id: fields[0].to_string(),
                doc_id: fields[2].to_string(),
            });
        }
    }
    Ok(qrels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;
    use tempfile::NamedTempFile;

    fn stopset(words: &[&str]) -> HashSet<String> {
        words.iter().map(|s| s.to_string()).collect()
    }

    fn temp_file(contents: &str) -> NamedTempFile {
        let mut f = NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn preprocess_strips_punctuation_and_stopwords() {
        let stops = stopset(&["the", "a"]);
        assert_eq!(
            preprocess_text("The Telephone, a device!", &stops),
            vec!["telephone", "device"]
        );
    }

    #[test]
    fn preprocess_empty_input() {
        assert_eq!(preprocess_text("", &stopset(&[])), Vec::<String>::new());
    }

    #[test]
    fn preprocess_drops_one_char_keeps_hyphen() {
        // "x" is a single character; "y-z" keeps its interior hyphen.
        assert_eq!(preprocess_text("X y-z", &stopset(&[])), vec!["y-z"]);
    }

    #[test]
    fn preprocess_drops_punctuation_only_tokens() {
        assert_eq!(
            preprocess_text("-- rotary-dial ... !!", &stopset(&[])),
            vec!["rotary-dial"]
        );
    }

    #[test]
    fn preprocess_handles_unicode_punctuation() {
        assert_eq!(
            preprocess_text("«teléfono» — ‘fijo’", &stopset(&[])),
            vec!["teléfono", "fijo"]
        );
    }

    #[test]
    fn preprocess_is_idempotent() {
        let stops = stopset(&["the", "of"]);
        let cases = [
            "The Quick, brown FOX-like thing; of it's own!",
            "¿dónde está? ... a-b c «x»",
            "",
            "don't stop-me now!!",
        ];
        for raw in cases {
            let once = preprocess_text(raw, &stops);
            let twice = preprocess_text(&once.join(" "), &stops);
            assert_eq!(once, twice, "not idempotent for {raw:?}");
        }
    }

    #[test]
    fn vocabulary_is_bijective_and_dense() {
        let mut v = Vocabulary::new();
        let a = v.intern("alpha");
        let b = v.intern("beta");
        assert_eq!(v.intern("alpha"), a);
        assert_eq!(v.len(), 2);
        assert_eq!(v.term(a), "alpha");
        assert_eq!(v.id("beta"), Some(b));
        assert_eq!((a.0, b.0), (0, 1));
    }

    #[test]
    fn load_collection_two_docs() {
        let f = temp_file("d1\thello world hello\nd2\tanother document line\n");
        let (coll, vocab) =
            load_collection(f.path(), &stopset(&[]), &PreprocessOptions::default()).unwrap();
        assert_eq!(coll.len(), 2);
        assert_eq!(coll.doc("d1").unwrap().tokens.len(), 3);
        assert!(vocab.id("hello").is_some());
    }

    #[test]
    fn load_collection_truncates_to_limit() {
        let body = vec!["tok"; 600].join(" ");
        let f = temp_file(&format!("d1\t{body}\n"));
        let opts = PreprocessOptions {
            truncation_limit: 500,
            truncate_raw_tokens: false,
        };
        let (coll, _) = load_collection(f.path(), &stopset(&[]), &opts).unwrap();
        assert_eq!(coll.doc("d1").unwrap().tokens.len(), 500);
    }

    #[test]
    fn truncation_keeps_strict_prefix() {
        let f = temp_file("d1\talpha beta gamma delta epsilon\n");
        let opts = PreprocessOptions {
            truncation_limit: 3,
            truncate_raw_tokens: false,
        };
        let (coll, vocab) = load_collection(f.path(), &stopset(&[]), &opts).unwrap();
        let toks: Vec<&str> = coll.doc("d1").unwrap().tokens.iter().map(|&t| vocab.term(t)).collect();
        assert_eq!(toks, vec!["alpha", "beta", "gamma"]);
    }

    #[test]
    fn raw_truncation_counts_pre_preprocessing_tokens() {
        // Raw prefix of 3 whitespace tokens is "the alpha beta"; stopword
        // removal then leaves two tokens.
        let f = temp_file("d1\tthe alpha beta gamma\n");
        let opts = PreprocessOptions {
            truncation_limit: 3,
            truncate_raw_tokens: true,
        };
        let (coll, vocab) = load_collection(f.path(), &stopset(&["the"]), &opts).unwrap();
        let toks: Vec<&str> = coll.doc("d1").unwrap().tokens.iter().map(|&t| vocab.term(t)).collect();
        assert_eq!(toks, vec!["alpha", "beta"]);
    }

    #[test]
    fn load_collection_rejects_duplicate_id() {
        let f = temp_file("d1\tone\nd1\ttwo\n");
        let err = load_collection(f.path(), &stopset(&[]), &PreprocessOptions::default())
            .unwrap_err();
        assert!(matches!(err, CorpusError::DuplicateDocId { line: 2, .. }));
    }

    #[test]
    fn load_collection_rejects_malformed_line() {
        let f = temp_file("d1\tgood line\nno tab here\n");
        let err = load_collection(f.path(), &stopset(&[]), &PreprocessOptions::default())
            .unwrap_err();
        match err {
            CorpusError::MalformedLine { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn load_queries_flags_empty_after_preprocessing() {
        let f = temp_file("q1\tgood query\nq2\tthe a\n");
        let mut vocab = Vocabulary::new();
        let (queries, empty) = load_queries(f.path(), &stopset(&["the", "a"]), &mut vocab).unwrap();
        assert_eq!(queries.len(), 2);
        assert_eq!(empty, vec!["q2"]);
    }

    #[test]
    fn stats_doc_freq_and_idf() {
        let f = temp_file("d1\tshared unique1\nd2\tshared unique2 extra\n");
        let (coll, vocab) =
            load_collection(f.path(), &stopset(&[]), &PreprocessOptions::default()).unwrap();
        let stats = compute_stats(&coll).unwrap();
        let shared = vocab.id("shared").unwrap();
        let unique = vocab.id("unique1").unwrap();
        assert_eq!(stats.doc_freq(shared), 2);
        assert_eq!(stats.doc_freq(unique), 1);
        // docCount=2, df=1: idf = ln((2-1+0.5)/(1+0.5)+1) = ln 2
        assert!((stats.idf(unique) - 2.0f64.ln()).abs() < 1e-12);
        assert!((stats.idf(unique) - 0.6931).abs() < 1e-4);
    }

    #[test]
    fn stats_avg_doc_len() {
        let f = temp_file("d1\ta1 a2 a3\nd2\tb1 b2 b3 b4 b5\n");
        let (coll, _) =
            load_collection(f.path(), &stopset(&[]), &PreprocessOptions::default()).unwrap();
        let stats = compute_stats(&coll).unwrap();
        assert_eq!(stats.avg_doc_len, 4.0);
        assert_eq!(stats.doc_len("d1"), Some(3));
    }

    #[test]
    fn stats_rejects_empty_collection() {
        let err = compute_stats(&Collection::default()).unwrap_err();
        assert!(matches!(err, CorpusError::EmptyCollection));
    }

    #[test]
    fn idf_strictly_decreasing_in_df() {
        let docs: Vec<Document> = (0..10)
            .map(|i| Document {
                id: format!("d{i}"),
                tokens: vec![TermId(0)],
            })
            .collect();
        let coll = Collection::from_documents(docs);
        let stats = compute_stats(&coll).unwrap();
        let n = stats.doc_count as f64;
        let idf = |df: f64| ((n - df + 0.5) / (df + 0.5) + 1.0).ln();
        for df in 0..10 {
            let (a, b) = (idf(df as f64), idf(df as f64 + 1.0));
            assert!(a > b, "idf not decreasing at df={df}");
            assert!(b >= 0.0);
        }
    }

    #[test]
    fn qrels_grade_mapping() {
        let f = temp_file("q1 0 d7 1\nq1 0 d8 -1\nq1 0 d9 0\nq2 0 d7 2\n");
        let qrels = load_qrels(f.path()).unwrap();
        assert_eq!(qrels.grade("q1", "d7"), Some(1));
        assert_eq!(qrels.grade("q1", "d8"), Some(0));
        assert_eq!(qrels.grade("q1", "d9"), Some(0));
        assert_eq!(qrels.grade("q2", "d7"), Some(1));
        assert_eq!(qrels.relevant("q1"), vec!["d7"]);
        assert_eq!(qrels.judged_nonrelevant("q1"), vec!["d8", "d9"]);
    }

    #[test]
    fn qrels_duplicate_pair_is_error() {
        let f = temp_file("q1 0 d7 1\nq1 0 d7 0\n");
        let err = load_qrels(f.path()).unwrap_err();
        assert!(matches!(err, CorpusError::DuplicateQrelsPair { line: 2, .. }));
    }

    #[test]
    fn qrels_malformed_line_reports_number() {
        let f = temp_file("q1 0 d7 1\nq1 0 d8\n");
        match load_qrels(f.path()).unwrap_err() {
            CorpusError::MalformedLine { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn qrels_every_judged_pair_retrievable() {
        let f = temp_file("q1 0 d1 1\nq1 0 d2 -1\nq2 0 d1 0\nq2 0 d3 3\n");
        let qrels = load_qrels(f.path()).unwrap();
        assert_eq!(qrels.len(), 4);
        for (q, d, g) in [("q1", "d1", 1), ("q1", "d2", 0), ("q2", "d1", 0), ("q2", "d3", 1)] {
            assert_eq!(qrels.grade(q, d), Some(g), "pair ({q},{d})");
        }
    }
}
