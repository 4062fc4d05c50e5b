//! Cross-lingual word embeddings: loading pre-aligned vectors in word2vec
//! text format, cosine similarity, and exact nearest-neighbor translation.
//!
//! Tables are immutable after load. Similarities accumulate in 64-bit
//! precision; neighbor scans are brute-force and deterministic (ties broken
//! by lexicographic term order).

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use thiserror::Error;

use crate::corpus::Vocabulary;

#[derive(Debug, Error)]
pub enum ClweError {
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed header: {reason}")]
    MalformedHeader {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("{path}:{line}: term {term:?} has {got} values, expected {expected}")]
    DimensionMismatch {
        path: String,
        line: usize,
        term: String,
        got: usize,
        expected: usize,
    },
    #[error("{path}:{line}: unparseable vector component for term {term:?}")]
    BadComponent {
        path: String,
        line: usize,
        term: String,
    },
    #[error("vectors have different dimensions: {0} vs {1}")]
    MixedDimensions(usize, usize),
    #[error("zero vector has no direction")]
    ZeroVector,
}

/// Per-load diagnostics: duplicate rows keep the first occurrence, zero
/// vectors are rejected, and both are counted rather than failing the load.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadWarnings {
    pub duplicate_terms: usize,
    pub zero_vectors: usize,
}

/// Term -> dense vector table in a shared cross-lingual space, with a raw
/// view and a unit-normalized view. `source_lang`/`target_lang` record
/// which alignment pair the vectors came from.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    dimension: usize,
    index: HashMap<String, usize>,
    terms: Vec<String>,
    raw: Vec<f64>,
    normalized: Vec<f64>,
    pub source_lang: String,
    pub target_lang: String,
}

impl EmbeddingTable {
    pub fn new(dimension: usize, source_lang: &str, target_lang: &str) -> Self {
        Self {
            dimension,
            index: HashMap::new(),
            terms: Vec::new(),
            raw: Vec::new(),
            normalized: Vec::new(),
            source_lang: source_lang.to_string(),
            target_lang: target_lang.to_string(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn contains(&self, term: &str) -> bool {
        self.index.contains_key(term)
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().map(String::as_str)
    }

    /// Inserts a vector; `false` if the term already exists (first
    /// occurrence wins) or the vector is zero.
    pub fn insert(&mut self, term: &str, vector: &[f64]) -> Result<bool, ClweError> {
        if vector.len() != self.dimension {
            return Err(ClweError::MixedDimensions(self.dimension, vector.len()));
        }
        if self.index.contains_key(term) {
            return Ok(false);
        }
        let norm = l2_norm(vector);
        if norm == 0.0 {
            return Ok(false);
        }
        self.index.insert(term.to_string(), self.terms.len());
        self.terms.push(term.to_string());
        self.raw.extend_from_slice(vector);
        self.normalized.extend(vector.iter().map(|v| v / norm));
        Ok(true)
    }

    pub fn raw_vector(&self, term: &str) -> Option<&[f64]> {
        let i = *self.index.get(term)?;
        Some(&self.raw[i * self.dimension..(i + 1) * self.dimension])
    }

    pub fn unit_vector(&self, term: &str) -> Option<&[f64]> {
        let i = *self.index.get(term)?;
        Some(&self.normalized[i * self.dimension..(i + 1) * self.dimension])
    }

    fn unit_at(&self, i: usize) -> &[f64] {
        &self.normalized[i * self.dimension..(i + 1) * self.dimension]
    }

    /// Cosine similarity between two stored terms.
    pub fn cosine_terms(&self, a: &str, b: &str) -> Option<f64> {
        let (u, v) = (self.unit_vector(a)?, self.unit_vector(b)?);
        Some(dot(u, v))
    }

    /// Merges `other` into a copy of `self`. Colliding terms keep this
    /// table's vector; the collision count is returned. Useful when query-
    /// and document-side files of one aligned space must share a table.
    pub fn merge(&self, other: &EmbeddingTable) -> Result<(EmbeddingTable, usize), ClweError> {
        if self.dimension != other.dimension {
            return Err(ClweError::MixedDimensions(self.dimension, other.dimension));
        }
        let mut merged = self.clone();
        merged.target_lang = other.target_lang.clone();
        let mut collisions = 0;
        for (i, term) in other.terms.iter().enumerate() {
            let row = &other.raw[i * other.dimension..(i + 1) * other.dimension];
            if !merged.insert(term, row)? {
                collisions += 1;
            }
        }
        Ok((merged, collisions))
    }
}

fn l2_norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Cosine similarity of two free vectors, accumulated in f64.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64, ClweError> {
    if u.len() != v.len() {
        return Err(ClweError::MixedDimensions(u.len(), v.len()));
    }
    let (nu, nv) = (l2_norm(u), l2_norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(ClweError::ZeroVector);
    }
    Ok(dot(u, v) / (nu * nv))
}

/// Loads word2vec text format: a `count dimension` header line followed by
/// `term v1 .. vd` rows. When `vocab_filter` is given, only those terms are
/// kept (memory control for large aligned vocabularies).
pub fn load_embeddings(
    path: &Path,
    vocab_filter: Option<&HashSet<String>>,
    source_lang: &str,
    target_lang: &str,
) -> Result<(EmbeddingTable, LoadWarnings), ClweError> {
    let io_err = |e: std::io::Error| ClweError::Io {
        path: path.display().to_string(),
        source: e,
    };
    let reader = BufReader::new(File::open(path).map_err(io_err)?);
    let mut lines = reader.lines();
    let header = lines.next().ok_or_else(|| ClweError::MalformedHeader {
        path: path.display().to_string(),
        line: 1,
        reason: "empty file".into(),
    })?;
    let header = header.map_err(io_err)?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    let dimension = match parts.as_slice() {
        [_count, dim] => dim.parse::<usize>().ok(),
        _ => None,
    }
    .filter(|&d| d > 0)
    .ok_or_else(|| ClweError::MalformedHeader {
        path: path.display().to_string(),
        line: 1,
        reason: format!("expected `count dimension`, got {header:?}"),
    })?;

    let mut table = EmbeddingTable::new(dimension, source_lang, target_lang);
    let mut warnings = LoadWarnings::default();
    let mut row = vec![0.0f64; dimension];
    for (lineno, line) in lines.enumerate() {
        let line = line.map_err(io_err)?;
        if line.is_empty() {
            continue;
        }
        let lineno = lineno + 2;
        let mut fields = line.split_whitespace();
        let term = match fields.next() {
            Some(t) => t,
            None => continue,
        };
        if let Some(filter) = vocab_filter {
            if !filter.contains(term) {
                continue;
            }
        }
        let mut got = 0;
        for (slot, field) in row.iter_mut().zip(&mut fields) {
            *slot = field.parse().map_err(|_| ClweError::BadComponent {
                path: path.display().to_string(),
                line: lineno,
                term: term.to_string(),
            })?;
            got += 1;
        }
        let rest = fields.count();
        if got != dimension || rest != 0 {
            return Err(ClweError::DimensionMismatch {
                path: path.display().to_string(),
                line: lineno,
                term: term.to_string(),
                got: got + rest,
                expected: dimension,
            });
        }
        if l2_norm(&row) == 0.0 {
            warnings.zero_vectors += 1;
            continue;
        }
        if !table.insert(term, &row)? {
            warnings.duplicate_terms += 1;
        }
    }
    Ok((table, warnings))
}

/// A neighbor-scan result distinguishing out-of-vocabulary probes.
#[derive(Debug, Clone, PartialEq)]
pub enum NeighborResult {
    Oov,
    Found(Vec<(String, f64)>),
}

impl NeighborResult {
    pub fn neighbors(&self) -> Option<&[(String, f64)]> {
        match self {
            NeighborResult::Oov => None,
            NeighborResult::Found(v) => Some(v),
        }
    }
}

/// Exact brute-force top-k by cosine over `candidate_vocab` ∩ table (full
/// table when `None`). Descending similarity, ties by term order.
pub fn nearest_neighbors(
    term: &str,
    k: usize,
    table: &EmbeddingTable,
    candidate_vocab: Option<&HashSet<String>>,
) -> NeighborResult {
    let probe = match table.unit_vector(term) {
        Some(v) => v,
        None => return NeighborResult::Oov,
    };
    let mut scored: Vec<(usize, f64)> = Vec::new();
    for (i, cand) in table.terms.iter().enumerate() {
        if let Some(filter) = candidate_vocab {
            if !filter.contains(cand) {
                continue;
            }
        }
        scored.push((i, dot(probe, table.unit_at(i))));
    }
    scored.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| table.terms[a.0].cmp(&table.terms[b.0]))
    });
    scored.truncate(k);
    NeighborResult::Found(
        scored
            .into_iter()
            .map(|(i, s)| (table.terms[i].clone(), s))
            .collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageReport {
    pub covered: usize,
    pub oov: usize,
    pub oov_rate: f64,
}

/// Counts how many vocabulary terms have embeddings.
pub fn coverage_report(table: &EmbeddingTable, vocabulary: &Vocabulary) -> CoverageReport {
    let covered = vocabulary
        .terms()
        .iter()
        .filter(|t| table.contains(t))
        .count();
    let oov = vocabulary.len() - covered;
    let total = covered + oov;
    CoverageReport {
        covered,
        oov,
        oov_rate: if total == 0 { 0.0 } else { oov as f64 / total as f64 },
    }
}
