//! Word-pair similarity-distribution analysis: pairwise cosine histograms
//! between query-side and document-side vocabularies, threshold sweeps
//! (complementary CDF over the unbinned similarities), and top-k neighbor
//! tables.

use std::collections::HashSet;
use std::io::Write;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::clwe::{nearest_neighbors, EmbeddingTable, NeighborResult};
use crate::interact::bin_index;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("no embeddable term pairs between the two vocabularies")]
    NoEmbeddablePairs,
    #[error("eta grid must be sorted ascending")]
    UnsortedEtas,
    #[error("bin count must be at least 2, got {0}")]
    TooFewBins(usize),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Histogram of cross-vocabulary cosine similarities plus the underlying
/// (possibly sampled) similarity multiset, kept unbinned for exact
/// complementary-CDF queries.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityDistribution {
    /// `bin_count + 1` edges spanning [-1, 1].
    pub bin_edges: Vec<f64>,
    /// Normalized so that `sum(density * bin_width) = 1`.
    pub density: Vec<f64>,
    pub total_pairs: u64,
    sims: Vec<f64>,
}

impl SimilarityDistribution {
    /// Fraction of pair mass with similarity `>= eta`, computed from the
    /// raw similarities rather than the binned histogram.
    pub fn fraction_above(&self, eta: f64) -> f64 {
        let below = self.sims.partition_point(|&s| s < eta);
        (self.sims.len() - below) as f64 / self.sims.len() as f64
    }

    /// Sorted raw similarities.
    pub fn sims(&self) -> &[f64] {
        &self.sims
    }
}

/// Pairwise cosine similarities between the embeddable terms of the two
/// vocabularies. When `sampling_cap` is given and the cross product is
/// larger, that many pairs are drawn uniformly (seeded, with replacement).
/// Output is independent of vocabulary iteration order.
pub fn pair_similarity_distribution(
    query_vocab: &HashSet<String>,
    doc_vocab: &HashSet<String>,
    table: &EmbeddingTable,
    bin_count: usize,
    sampling_cap: Option<u64>,
    seed: u64,
) -> Result<SimilarityDistribution, AnalysisError> {
    if bin_count < 2 {
        return Err(AnalysisError::TooFewBins(bin_count));
    }
    let mut q_terms: Vec<&str> = query_vocab
        .iter()
        .filter(|t| table.contains(t))
        .map(String::as_str)
        .collect();
    let mut d_terms: Vec<&str> = doc_vocab
        .iter()
        .filter(|t| table.contains(t))
        .map(String::as_str)
        .collect();
    q_terms.sort_unstable();
    d_terms.sort_unstable();
    if q_terms.is_empty() || d_terms.is_empty() {
        return Err(AnalysisError::NoEmbeddablePairs);
    }

    let full = q_terms.len() as u64 * d_terms.len() as u64;
    let mut sims: Vec<f64>;
    match sampling_cap {
        Some(cap) if full > cap => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            sims = Vec::with_capacity(cap as usize);
            for _ in 0..cap {
                let q = q_terms[rng.gen_range(0..q_terms.len())];
                let d = d_terms[rng.gen_range(0..d_terms.len())];
                sims.push(table.cosine_terms(q, d).expect("filtered to embedded terms"));
            }
        }
        _ => {
            sims = Vec::with_capacity(full as usize);
            for q in &q_terms {
                for d in &d_terms {
                    sims.push(table.cosine_terms(q, d).expect("filtered to embedded terms"));
                }
            }
        }
    }
    sims.sort_unstable_by(|a, b| a.partial_cmp(b).expect("cosines are never NaN"));

    let mut counts = vec![0u64; bin_count];
    for &s in &sims {
        counts[bin_index(s, bin_count)] += 1;
    }
    let b = bin_count as f64;
    let bin_width = 2.0 / b;
    let total = sims.len() as f64;
    let density = counts
        .iter()
        .map(|&c| c as f64 / (total * bin_width))
        .collect();
    let bin_edges = (0..=bin_count)
        .map(|k| (2.0 * k as f64 - b) / b)
        .collect();
    Ok(SimilarityDistribution {
        bin_edges,
        density,
        total_pairs: sims.len() as u64,
        sims,
    })
}

/// Fraction of pairs at or above each threshold, optionally paired with
/// retrieval MAP per threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSweep {
    pub etas: Vec<f64>,
    pub fraction_above: Vec<f64>,
    pub map_at_eta: Option<Vec<f64>>,
}

/// Complementary CDF over an ascending eta grid.
pub fn threshold_sweep(
    distribution: &SimilarityDistribution,
    etas: &[f64],
) -> Result<ThresholdSweep, AnalysisError> {
    if etas.windows(2).any(|w| w[0] > w[1]) {
        return Err(AnalysisError::UnsortedEtas);
    }
    Ok(ThresholdSweep {
        etas: etas.to_vec(),
        fraction_above: etas.iter().map(|&e| distribution.fraction_above(e)).collect(),
        map_at_eta: None,
    })
}

/// One row of a neighbor table; OOV probes are flagged rather than failed.
#[derive(Debug, Clone, PartialEq)]
pub enum NeighborRow {
    Oov { term: String },
    Found { term: String, neighbors: Vec<(String, f64)> },
}

pub fn neighbor_table(
    terms: &[String],
    k: usize,
    table: &EmbeddingTable,
    target_vocab: Option<&HashSet<String>>,
) -> Vec<NeighborRow> {
    terms
        .iter()
        .map(|term| match nearest_neighbors(term, k, table, target_vocab) {
            NeighborResult::Oov => NeighborRow::Oov { term: term.clone() },
            NeighborResult::Found(neighbors) => NeighborRow::Found {
                term: term.clone(),
                neighbors,
            },
        })
        .collect()
}

/// Plain-text table with similarities at 3 decimals.
pub fn format_neighbor_table(rows: &[NeighborRow]) -> String {
    let mut out = String::new();
    for row in rows {
        match row {
            NeighborRow::Oov { term } => out.push_str(&format!("{term}\tOOV\n")),
            NeighborRow::Found { term, neighbors } => {
                let cells: Vec<String> = neighbors
                    .iter()
                    .map(|(t, s)| format!("{t} ({s:.3})"))
                    .collect();
                out.push_str(&format!("{term}\t{}\n", cells.join("  ")));
            }
        }
    }
    out
}

/// `bin_lo,bin_hi,density` rows.
pub fn write_distribution_csv(
    dist: &SimilarityDistribution,
    out: &mut impl Write,
) -> Result<(), AnalysisError> {
    writeln!(out, "bin_lo,bin_hi,density")?;
    for (i, d) in dist.density.iter().enumerate() {
        writeln!(out, "{},{},{}", dist.bin_edges[i], dist.bin_edges[i + 1], d)?;
    }
    Ok(())
}

/// `eta,fraction_above[,map]` rows.
pub fn write_sweep_csv(sweep: &ThresholdSweep, out: &mut impl Write) -> Result<(), AnalysisError> {
    match &sweep.map_at_eta {
        Some(maps) => {
            writeln!(out, "eta,fraction_above,map")?;
            for i in 0..sweep.etas.len() {
                writeln!(out, "{},{},{}", sweep.etas[i], sweep.fraction_above[i], maps[i])?;
            }
        }
        None => {
            writeln!(out, "eta,fraction_above")?;
            for i in 0..sweep.etas.len() {
                writeln!(out, "{},{}", sweep.etas[i], sweep.fraction_above[i])?;
            }
        }
    }
    Ok(())
}
