//! Query-document interaction representations: interaction matrices
//! (cosine / gaussian / indicator), matching histograms, and Gaussian
//! kernel-pooling features.
//!
//! Rows and columns for terms without embeddings are masked to the neutral
//! value 0 and excluded from histogram and kernel sums, so OOV density
//! cannot masquerade as mid-range similarity mass.

use std::io::Write;

use thiserror::Error;

use crate::clwe::EmbeddingTable;
use crate::corpus::{TermId, Vocabulary};

#[derive(Debug, Error)]
pub enum InteractError {
    #[error("operation requires a cosine interaction matrix, got {0}")]
    NotCosine(String),
    #[error("bin count must be at least 2, got {0}")]
    TooFewBins(usize),
    #[error("eta must lie in [-1, 1], got {0}")]
    EtaOutOfRange(f64),
    #[error("sigma must be positive, got {0}")]
    BadSigma(f64),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Interaction function applied to each (query term, document term) pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InteractionKind {
    /// cos(q_i, d_j)
    Cosine,
    /// exp(-||q_i - d_j||^2) over the raw vectors
    Gaussian,
    /// 1 if cos(q_i, d_j) >= eta else 0
    Indicator(f64),
}

impl std::fmt::Display for InteractionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InteractionKind::Cosine => write!(f, "cosine"),
            InteractionKind::Gaussian => write!(f, "gaussian"),
            InteractionKind::Indicator(eta) => write!(f, "indicator:{eta}"),
        }
    }
}

/// Exact-match rule: inclusive at the threshold.
#[inline]
pub fn indicator_value(cos: f64, eta: f64) -> f64 {
    if cos >= eta {
        1.0
    } else {
        0.0
    }
}

/// Term vectors resolved against a vocabulary for fast id-indexed access.
/// Owns f64 copies of the raw and unit-normalized views.
#[derive(Debug, Clone)]
pub struct TermVectorBank {
    dim: usize,
    slot: Vec<i32>,
    raw: Vec<f64>,
    unit: Vec<f64>,
}

impl TermVectorBank {
    pub fn build(vocab: &Vocabulary, table: &EmbeddingTable) -> Self {
        let dim = table.dimension();
        let mut slot = vec![-1i32; vocab.len()];
        let mut raw = Vec::new();
        let mut unit = Vec::new();
        let mut next = 0i32;
        for (i, term) in vocab.terms().iter().enumerate() {
            if let (Some(r), Some(u)) = (table.raw_vector(term), table.unit_vector(term)) {
                slot[i] = next;
                raw.extend_from_slice(r);
                unit.extend_from_slice(u);
                next += 1;
            }
        }
        Self { dim, slot, raw, unit }
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn has(&self, t: TermId) -> bool {
        self.slot.get(t.index()).map_or(false, |&s| s >= 0)
    }

    pub fn raw(&self, t: TermId) -> Option<&[f64]> {
        let s = *self.slot.get(t.index())? ;
        (s >= 0).then(|| &self.raw[s as usize * self.dim..(s as usize + 1) * self.dim])
    }

    pub fn unit(&self, t: TermId) -> Option<&[f64]> {
        let s = *self.slot.get(t.index())?;
        (s >= 0).then(|| &self.unit[s as usize * self.dim..(s as usize + 1) * self.dim])
    }
}

/// |q| x |d| matrix of interaction values with OOV masks.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionMatrix {
    pub query_id: String,
    pub doc_id: String,
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    pub kind: InteractionKind,
    valid_rows: Vec<bool>,
    valid_cols: Vec<bool>,
}

impl InteractionMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn valid_rows(&self) -> &[bool] {
        &self.valid_rows
    }

    pub fn valid_cols(&self) -> &[bool] {
        &self.valid_cols
    }

    pub fn valid_col_count(&self) -> usize {
        self.valid_cols.iter().filter(|&&v| v).count()
    }

    /// True when no valid row or no valid column remains after masking.
    pub fn is_degenerate(&self) -> bool {
        !self.valid_rows.iter().any(|&v| v) || !self.valid_cols.iter().any(|&v| v)
    }
}

/// Builds the interaction matrix for one query-document pair. Entries for
/// pairs where either side is OOV are masked to 0.
pub fn build_matrix(
    query_id: &str,
    doc_id: &str,
    query_tokens: &[TermId],
    doc_tokens: &[TermId],
    bank: &TermVectorBank,
    kind: InteractionKind,
) -> Result<InteractionMatrix, InteractError> {
    if let InteractionKind::Indicator(eta) = kind {
        if !(-1.0..=1.0).contains(&eta) {
            return Err(InteractError::EtaOutOfRange(eta));
        }
    }
    let rows = query_tokens.len();
    let cols = doc_tokens.len();
    let valid_rows: Vec<bool> = query_tokens.iter().map(|&t| bank.has(t)).collect();
    let valid_cols: Vec<bool> = doc_tokens.iter().map(|&t| bank.has(t)).collect();
    let mut values = vec![0.0f64; rows * cols];
    for (i, &q) in query_tokens.iter().enumerate() {
        if !valid_rows[i] {
            continue;
        }
        for (j, &d) in doc_tokens.iter().enumerate() {
            if !valid_cols[j] {
                continue;
            }
            values[i * cols + j] = match kind {
                InteractionKind::Cosine => {
                    dot(bank.unit(q).unwrap(), bank.unit(d).unwrap())
                }
                InteractionKind::Gaussian => {
                    let (u, v) = (bank.raw(q).unwrap(), bank.raw(d).unwrap());
                    let dist2: f64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
                    (-dist2).exp()
                }
                InteractionKind::Indicator(eta) => {
                    indicator_value(dot(bank.unit(q).unwrap(), bank.unit(d).unwrap()), eta)
                }
            };
        }
    }
    Ok(InteractionMatrix {
        query_id: query_id.to_string(),
        doc_id: doc_id.to_string(),
        rows,
        cols,
        values,
        kind,
        valid_rows,
        valid_cols,
    })
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Bin index over `bin_count` equal-width bins of [-1, 1], right-open
/// except the last bin which closes at 1. Edges are evaluated as
/// `(2k - B) / B` so decimal edge values land in the mathematically
/// correct bin. The input is clamped to [-1, 1] first.
pub fn bin_index(value: f64, bin_count: usize) -> usize {
    let b = bin_count as f64;
    let v = value.clamp(-1.0, 1.0);
    let edge = |k: usize| (2.0 * k as f64 - b) / b;
    let mut idx = (((v + 1.0) / 2.0 * b).floor() as isize).clamp(0, bin_count as isize - 1)
        as usize;
    while idx > 0 && v < edge(idx) {
        idx -= 1;
    }
    while idx + 1 < bin_count && v >= edge(idx + 1) {
        idx += 1;
    }
    idx
}

/// Per-query-term matching histogram: raw counts and ln(1 + count)
/// features over equal-width cosine bins.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramFeatures {
    rows: usize,
    bins: usize,
    counts: Vec<u32>,
    features: Vec<f64>,
}

impl HistogramFeatures {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn counts_row(&self, i: usize) -> &[u32] {
        &self.counts[i * self.bins..(i + 1) * self.bins]
    }

    /// Log-count features for one query term.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.bins..(i + 1) * self.bins]
    }
}

/// Builds the log-count matching histogram from a cosine interaction
/// matrix. Masked rows are all-zero; masked columns are excluded from
/// every row, so valid-row counts sum to the embeddable document length.
/// A degenerate matrix yields all-zero features.
pub fn build_histogram(
    matrix: &InteractionMatrix,
    bin_count: usize,
) -> Result<HistogramFeatures, InteractError> {
    if !matches!(matrix.kind, InteractionKind::Cosine) {
        return Err(InteractError::NotCosine(matrix.kind.to_string()));
    }
    if bin_count < 2 {
        return Err(InteractError::TooFewBins(bin_count));
    }
    let rows = matrix.rows();
    let mut counts = vec![0u32; rows * bin_count];
    if !matrix.is_degenerate() {
        for i in 0..rows {
            if !matrix.valid_rows()[i] {
                continue;
            }
            for j in 0..matrix.cols() {
                if !matrix.valid_cols()[j] {
                    continue;
                }
                counts[i * bin_count + bin_index(matrix.at(i, j), bin_count)] += 1;
            }
        }
    }
    let features = counts.iter().map(|&c| (1.0 + f64::from(c)).ln()).collect();
    Ok(HistogramFeatures {
        rows,
        bins: bin_count,
        counts,
        features,
    })
}

/// Per-query-term Gaussian kernel-pooling features.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelFeatures {
    rows: usize,
    pub mus: Vec<f64>,
    pub sigma: f64,
    values: Vec<f64>,
}

impl KernelFeatures {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn kernels(&self) -> usize {
        self.mus.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.mus.len()..(i + 1) * self.mus.len()]
    }
}

/// Evenly spaced kernel centers over the full cosine range:
/// `mu_k = -1 + (2k - 1)/K` for k = 1..K, with no dedicated exact-match
/// kernel (cross-lingual term pairs never match exactly).
pub fn default_kernel_mus(kernel_count: usize) -> Vec<f64> {
    (1..=kernel_count)
        .map(|k| -1.0 + (2.0 * k as f64 - 1.0) / kernel_count as f64)
        .collect()
}

/// Soft-histogram pooling: `feature(i,k) = sum_j exp(-(M_ij - mu_k)^2 /
/// (2 sigma^2))` over valid columns. Masked rows are all-zero; a
/// degenerate matrix yields all-zero features.
pub fn kernel_pool(
    matrix: &InteractionMatrix,
    mus: &[f64],
    sigma: f64,
) -> Result<KernelFeatures, InteractError> {
    if !matches!(matrix.kind, InteractionKind::Cosine) {
        return Err(InteractError::NotCosine(matrix.kind.to_string()));
    }
    if sigma <= 0.0 {
        return Err(InteractError::BadSigma(sigma));
    }
    let rows = matrix.rows();
    let k = mus.len();
    let mut values = vec![0.0f64; rows * k];
    if !matrix.is_degenerate() {
        let denom = 2.0 * sigma * sigma;
        let mut addends: Vec<f64> = Vec::with_capacity(matrix.cols());
        for i in 0..rows {
            if !matrix.valid_rows()[i] {
                continue;
            }
            for (ki, &mu) in mus.iter().enumerate() {
                // Summed in sorted order so the result is exactly
                // invariant under document-term permutation.
                addends.clear();
                for j in 0..matrix.cols() {
                    if !matrix.valid_cols()[j] {
                        continue;
                    }
                    let m = matrix.at(i, j);
                    addends.push((-(m - mu) * (m - mu) / denom).exp());
                }
                addends.sort_unstable_by(f64::total_cmp);
                values[i * k + ki] = addends.iter().sum();
            }
        }
    }
    Ok(KernelFeatures {
        rows,
        mus: mus.to_vec(),
        sigma,
        values,
    })
}

/// Debug dump: header `queryId docId rows cols kind`, then one line per
/// row with space-separated values.
pub fn dump_matrix(matrix: &InteractionMatrix, out: &mut impl Write) -> Result<(), InteractError> {
    writeln!(
        out,
        "{} {} {} {} {}",
        matrix.query_id,
        matrix.doc_id,
        matrix.rows(),
        matrix.cols(),
        matrix.kind
    )?;
    for i in 0..matrix.rows() {
        let row: Vec<String> = matrix.row(i).iter().map(|v| format!("{v}")).collect();
        writeln!(out, "{}", row.join(" "))?;
    }
    Ok(())
}
