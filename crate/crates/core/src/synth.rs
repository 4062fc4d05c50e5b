//! Synthetic two-pseudo-language benchmark generator.
//!
//! Both languages share latent unit vectors; the target side is rotated by
//! a random orthogonal matrix with additive noise, giving an aligned
//! cross-lingual space with imperfect translations. A fraction of topical
//! source terms additionally get a target-side "distractor" that sits
//! closer to the source term than its true translation but is sprinkled
//! uniformly through documents: term-by-term translation picks the
//! distractor and loses the relevance signal, while similarity-matrix
//! models still see the true translation at high cosine.
//!
//! Documents belong to one topic each and contain that topic's translated
//! terms with multiplicity, plus background terms and distractor noise.
//! Queries are the source-side topic terms; qrels mark each topic's
//! documents relevant and a sample of other topics' documents as judged
//! non-relevant.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    BadConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    pub dim: usize,
    /// One query per topic.
    pub topics: usize,
    pub terms_per_topic: usize,
    pub background_terms: usize,
    pub docs: usize,
    pub relevant_per_query: usize,
    pub judged_nonrelevant_per_query: usize,
    /// Component noise added to rotated target vectors.
    pub noise_sigma: f64,
    /// Probability that a topical term gets a translation distractor.
    pub distractor_prob: f64,
    pub doc_len_min: usize,
    pub doc_len_max: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            dim: 64,
            topics: 40,
            terms_per_topic: 4,
            background_terms: 100,
            docs: 200,
            relevant_per_query: 5,
            judged_nonrelevant_per_query: 25,
            noise_sigma: 0.05,
            distractor_prob: 0.75,
            doc_len_min: 30,
            doc_len_max: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthPaths {
    pub collection: PathBuf,
    pub queries: PathBuf,
    pub qrels: PathBuf,
    pub source_embeddings: PathBuf,
    pub target_embeddings: PathBuf,
    pub stopwords: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSummary {
    pub paths: SynthPaths,
    pub docs: usize,
    pub queries: usize,
    pub judged_pairs: usize,
    pub source_terms: usize,
    pub target_terms: usize,
    pub distractor_terms: usize,
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

fn random_unit(rng: &mut ChaCha8Rng, normal: &Normal<f64>, dim: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..dim).map(|_| normal.sample(rng)).collect();
    normalize(&mut v);
    v
}

/// Random orthogonal matrix via Gram-Schmidt on Gaussian rows.
fn random_rotation(rng: &mut ChaCha8Rng, dim: usize) -> Vec<Vec<f64>> {
    let normal = Normal::new(0.0, 1.0).expect("valid normal");
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(dim);
    while rows.len() < dim {
        let mut v: Vec<f64> = (0..dim).map(|_| normal.sample(rng)).collect();
        for prev in &rows {
            let proj: f64 = v.iter().zip(prev).map(|(a, b)| a * b).sum();
            for (x, p) in v.iter_mut().zip(prev) {
                *x -= proj * p;
            }
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n < 1e-8 {
            continue; // degenerate draw, retry
        }
        v.iter_mut().for_each(|x| *x /= n);
        rows.push(v);
    }
    rows
}

fn rotate(rotation: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    rotation
        .iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

/// Orthogonal inverse (transpose) application.
fn rotate_back(rotation: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    let dim = v.len();
    (0..dim)
        .map(|j| (0..dim).map(|i| rotation[i][j] * v[i]).sum())
        .collect()
}

struct VecWriter {
    path: PathBuf,
    rows: Vec<(String, Vec<f64>)>,
}

impl VecWriter {
    fn write(&self, dim: usize) -> Result<(), SynthError> {
        let io_err = |source| SynthError::Io {
            path: self.path.display().to_string(),
            source,
        };
        let mut out = BufWriter::new(fs::File::create(&self.path).map_err(io_err)?);
        writeln!(out, "{} {}", self.rows.len(), dim).map_err(io_err)?;
        for (term, v) in &self.rows {
            let comps: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
            writeln!(out, "{} {}", term, comps.join(" ")).map_err(io_err)?;
        }
        out.flush().map_err(io_err)
    }
}

/// Generates the collection, queries, qrels, stopword list, and the two
/// aligned embedding files under `dir`. Deterministic under the seed.
pub fn generate(cfg: &SynthConfig, dir: &Path) -> Result<SynthSummary, SynthError> {
    if cfg.docs < cfg.topics * cfg.relevant_per_query {
        return Err(SynthError::BadConfig(format!(
            "{} docs cannot give {} topics x {} relevant each",
            cfg.docs, cfg.topics, cfg.relevant_per_query
        )));
    }
    if cfg.doc_len_min < cfg.terms_per_topic * 4 || cfg.doc_len_max < cfg.doc_len_min {
        return Err(SynthError::BadConfig("document length range too small".into()));
    }
    fs::create_dir_all(dir).map_err(|source| SynthError::Io {
        path: dir.display().to_string(),
        source,
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let unit_normal = Normal::new(0.0, 1.0).expect("valid normal");
    let noise = Normal::new(0.0, cfg.noise_sigma).expect("valid normal");
    let distractor_noise = Normal::new(0.0, 0.02).expect("valid normal");

    let topical = cfg.topics * cfg.terms_per_topic;
    let n_concepts = topical + cfg.background_terms;
    let latent: Vec<Vec<f64>> = (0..n_concepts)
        .map(|_| random_unit(&mut rng, &unit_normal, cfg.dim))
        .collect();
    let rotation = random_rotation(&mut rng, cfg.dim);

    let src_term = |i: usize| format!("s{i:04}");
    let tgt_term = |i: usize| format!("t{i:04}");
    let distractor_term = |i: usize| format!("x{i:04}");

    // The target side is a separately "trained" space: the latent vector
    // rotated plus noise. The emitted files are the aligned pair, so the
    // known rotation is inverted afterwards (alignment itself is an input
    // to the retrieval pipeline, not part of it).
    let target_vector = |v: &[f64], n: &Normal<f64>, rng: &mut ChaCha8Rng| -> Vec<f64> {
        let mut rotated = rotate(&rotation, v);
        for x in rotated.iter_mut() {
            *x += n.sample(rng);
        }
        let mut aligned = rotate_back(&rotation, &rotated);
        normalize(&mut aligned);
        aligned
    };
    let mut src_rows: Vec<(String, Vec<f64>)> = Vec::with_capacity(n_concepts);
    let mut tgt_rows: Vec<(String, Vec<f64>)> = Vec::with_capacity(n_concepts);
    for (i, v) in latent.iter().enumerate() {
        src_rows.push((src_term(i), v.clone()));
        tgt_rows.push((tgt_term(i), target_vector(v, &noise, &mut rng)));
    }
    // Translation traps: closer to the source term than its true
    // translation, but distributed through documents as pure noise.
    let mut distractors: Vec<usize> = Vec::new();
    for (i, v) in latent.iter().enumerate().take(topical) {
        if rng.gen_bool(cfg.distractor_prob) {
            tgt_rows.push((distractor_term(i), target_vector(v, &distractor_noise, &mut rng)));
            distractors.push(i);
        }
    }

    // Documents: doc k belongs to topic k % topics.
    let mut collection_lines = Vec::with_capacity(cfg.docs);
    for k in 0..cfg.docs {
        let topic = k % cfg.topics;
        let mut tokens: Vec<String> = Vec::new();
        for j in 0..cfg.terms_per_topic {
            let concept = topic * cfg.terms_per_topic + j;
            let reps = rng.gen_range(2..=4);
            for _ in 0..reps {
                tokens.push(tgt_term(concept));
            }
        }
        let target_len = rng.gen_range(cfg.doc_len_min..=cfg.doc_len_max);
        let noise_terms = rng.gen_range(0..=2.min(distractors.len()));
        while tokens.len() < target_len.saturating_sub(noise_terms) {
            let bg = topical + rng.gen_range(0..cfg.background_terms);
            tokens.push(tgt_term(bg));
        }
        for _ in 0..noise_terms {
            tokens.push(distractor_term(distractors[rng.gen_range(0..distractors.len())]));
        }
        tokens.shuffle(&mut rng);
        collection_lines.push(format!("doc{k:04}\t{}", tokens.join(" ")));
    }

    // Queries: the source terms of each topic.
    let mut query_lines = Vec::with_capacity(cfg.topics);
    for topic in 0..cfg.topics {
        let terms: Vec<String> = (0..cfg.terms_per_topic)
            .map(|j| src_term(topic * cfg.terms_per_topic + j))
            .collect();
        query_lines.push(format!("q{topic:03}\t{}", terms.join(" ")));
    }

    // Qrels: each topic's docs are relevant to its query; judged
    // non-relevant docs are sampled from the other topics.
    let mut qrels_lines = Vec::new();
    for topic in 0..cfg.topics {
        let qid = format!("q{topic:03}");
        let mut relevant = 0;
        for k in (topic..cfg.docs).step_by(cfg.topics) {
            if relevant >= cfg.relevant_per_query {
                break;
            }
            qrels_lines.push(format!("{qid} 0 doc{k:04} 1"));
            relevant += 1;
        }
        let others: Vec<usize> = (0..cfg.docs).filter(|k| k % cfg.topics != topic).collect();
        let chosen = rand::seq::index::sample(
            &mut rng,
            others.len(),
            cfg.judged_nonrelevant_per_query.min(others.len()),
        );
        let mut nonrel: Vec<usize> = chosen.into_iter().map(|i| others[i]).collect();
        nonrel.sort_unstable();
        for k in nonrel {
            qrels_lines.push(format!("{qid} 0 doc{k:04} -1"));
        }
    }

    let paths = SynthPaths {
        collection: dir.join("collection.tsv"),
        queries: dir.join("queries.tsv"),
        qrels: dir.join("qrels.txt"),
        source_embeddings: dir.join("embeddings.src.vec"),
        target_embeddings: dir.join("embeddings.tgt.vec"),
        stopwords: dir.join("stopwords.txt"),
    };
    let write_lines = |path: &Path, lines: &[String]| -> Result<(), SynthError> {
        fs::write(path, lines.join("\n") + "\n").map_err(|source| SynthError::Io {
            path: path.display().to_string(),
            source,
        })
    };
    write_lines(&paths.collection, &collection_lines)?;
    write_lines(&paths.queries, &query_lines)?;
    write_lines(&paths.qrels, &qrels_lines)?;
    fs::write(&paths.stopwords, "").map_err(|source| SynthError::Io {
        path: paths.stopwords.display().to_string(),
        source,
    })?;
    let src_count = src_rows.len();
    let tgt_count = tgt_rows.len();
    VecWriter {
        path: paths.source_embeddings.clone(),
        rows: src_rows,
    }
    .write(cfg.dim)?;
    VecWriter {
        path: paths.target_embeddings.clone(),
        rows: tgt_rows,
    }
    .write(cfg.dim)?;

    Ok(SynthSummary {
        paths,
        docs: cfg.docs,
        queries: cfg.topics,
        judged_pairs: qrels_lines.len(),
        source_terms: src_count,
        target_terms: tgt_count,
        distractor_terms: distractors.len(),
    })
}
