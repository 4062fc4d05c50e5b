//! Evaluation: average precision / MAP, TREC run-file I/O, 5-fold
//! cross-validation planning, and two-tailed paired t-tests (p-values via
//! the regularized incomplete beta function, no lookup tables).

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Qrels;
use crate::unsup::ScoredList;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed run line: {reason}")]
    MalformedRun {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("need at least {k} queries for {k}-fold cross-validation, got {n}")]
    TooFewQueries { n: usize, k: usize },
    #[error("paired t-test needs two equal-length samples of at least 2, got {0} and {1}")]
    BadSamples(usize, usize),
    #[error("system failed: {0}")]
    System(String),
}

/// Average precision of a ranking against a set of relevant documents:
/// `(1/|rel|) * sum over hit ranks k of (hits in top k)/k`. Relevant
/// documents absent from the ranking count as misses. `None` marks a query
/// with no relevant documents (excluded from MAP).
pub fn average_precision(ranked: &[&str], relevant: &HashSet<&str>) -> Option<f64> {
    if relevant.is_empty() {
        return None;
    }
    let mut hits = 0u32;
    let mut sum = 0.0;
    for (i, doc) in ranked.iter().enumerate() {
        if relevant.contains(doc) {
            hits += 1;
            sum += f64::from(hits) / (i + 1) as f64;
        }
    }
    Some(sum / relevant.len() as f64)
}

/// Per-system evaluation: per-query AP, their mean, and queries excluded
/// for lack of relevant documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub system: String,
    pub per_query_ap: BTreeMap<String, f64>,
    pub map: f64,
    pub excluded_queries: Vec<String>,
}

impl EvalReport {
    /// Scores ranked lists against qrels. AP uses each query's full
    /// relevant set; documents judged relevant but missing from the
    /// ranking count as misses.
    pub fn from_runs(system: &str, runs: &[ScoredList], qrels: &Qrels) -> Self {
        let mut per_query_ap = BTreeMap::new();
        let mut excluded = Vec::new();
        for run in runs {
            let relevant: HashSet<&str> = qrels.relevant(&run.query_id).into_iter().collect();
            let ranked: Vec<&str> = run.doc_ids().collect();
            match average_precision(&ranked, &relevant) {
                Some(ap) => {
                    per_query_ap.insert(run.query_id.clone(), ap);
                }
                None => excluded.push(run.query_id.clone()),
            }
        }
        let map = if per_query_ap.is_empty() {
            0.0
        } else {
            per_query_ap.values().sum::<f64>() / per_query_ap.len() as f64
        };
        Self {
            system: system.to_string(),
            per_query_ap,
            map,
            excluded_queries: excluded,
        }
    }

    /// `system,query,ap` rows followed by a `system,ALL,map` summary row.
    pub fn write_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "system,query,ap")?;
        for (q, ap) in &self.per_query_ap {
            writeln!(out, "{},{},{}", self.system, q, ap)?;
        }
        writeln!(out, "{},ALL,{}", self.system, self.map)
    }
}

impl std::fmt::Display for EvalReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "{}: MAP {:.4} over {} queries ({} excluded)",
            self.system,
            self.map,
            self.per_query_ap.len(),
            self.excluded_queries.len()
        )?;
        for (q, ap) in &self.per_query_ap {
            writeln!(f, "  {q}\t{ap:.4}")?;
        }
        Ok(())
    }
}

/// 5-fold plan: folds partition the query set; round `r` tests fold `r`,
/// validates fold `(r+1) mod k`, trains on the rest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    folds: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundPlan {
    pub round: usize,
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub test: Vec<String>,
}

impl FoldPlan {
    pub fn k(&self) -> usize {
        self.folds.len()
    }

    pub fn folds(&self) -> &[Vec<String>] {
        &self.folds
    }

    pub fn round(&self, r: usize) -> RoundPlan {
        let k = self.k();
        let test = self.folds[r].clone();
        let validation = self.folds[(r + 1) % k].clone();
        let train = (0..k)
            .filter(|&i| i != r && i != (r + 1) % k)
            .flat_map(|i| self.folds[i].iter().cloned())
            .collect();
        RoundPlan {
            round: r,
            train,
            validation,
            test,
        }
    }

    pub fn rounds(&self) -> impl Iterator<Item = RoundPlan> + '_ {
        (0..self.k()).map(|r| self.round(r))
    }
}

/// Seeded shuffle then round-robin fold assignment.
pub fn kfold_split(query_ids: &[String], k: usize, seed: u64) -> Result<FoldPlan, EvalError> {
    if query_ids.len() < k || k < 2 {
        return Err(EvalError::TooFewQueries {
            n: query_ids.len(),
            k,
        });
    }
    let mut ids = query_ids.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);
    let mut folds = vec![Vec::new(); k];
    for (i, id) in ids.into_iter().enumerate() {
        folds[i % k].push(id);
    }
    Ok(FoldPlan { folds })
}

/// Two-tailed paired t-test result at the 0.05 level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub p: f64,
    pub significant: bool,
}

/// Paired Student's t-test on per-query scores. Zero-variance conventions:
/// all-zero differences give `t = 0, p = 1`; a nonzero constant difference
/// gives an infinite statistic with `p = 0`.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTest, EvalError> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(EvalError::BadSamples(a.len(), b.len()));
    }
    let n = a.len() as f64;
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n - 1.0);
    if var == 0.0 {
        return Ok(if mean == 0.0 {
            TTest {
                t: 0.0,
                p: 1.0,
                significant: false,
            }
        } else {
            TTest {
                t: if mean > 0.0 { f64::INFINITY } else { f64::NEG_INFINITY },
                p: 0.0,
                significant: true,
            }
        });
    }
    let t = mean / (var / n).sqrt();
    let df = n - 1.0;
    let p = students_t_two_tailed_p(t, df);
    Ok(TTest {
        t,
        p,
        significant: p < 0.05,
    })
}

/// `P(|T_df| >= |t|) = I_{df/(df+t^2)}(df/2, 1/2)`.
pub fn students_t_two_tailed_p(t: f64, df: f64) -> f64 {
    regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))
}

/// Lanczos approximation (g = 7, 9 coefficients).
fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 8] = [
        676.5203681218851,
        -1259.1392167224028,
        771.323_428_777_653_1,
        -176.613_029_756_029_3,
        12.507343278686905,
        -0.13857109526572012,
        9.984_369_578_019_572e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        // Reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = 0.99999999999980993;
    for (i, c) in COEFFS.iter().enumerate() {
        acc += c / (x + (i + 1) as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Continued fraction for the incomplete beta (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const FPMIN: f64 = 1e-300;
    const EPS: f64 = 3e-16;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < FPMIN {
        d = FPMIN;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=300 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_bt = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let bt = ln_bt.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        bt * beta_cf(a, b, x) / a
    } else {
        1.0 - bt * beta_cf(b, a, 1.0 - x) / b
    }
}

/// Named system comparison entry for reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub system_a: String,
    pub system_b: String,
    pub t: f64,
    pub p: f64,
    pub significant: bool,
}

/// Pairs per-query APs by query id (intersection, sorted) and runs the
/// paired t-test.
pub fn compare_systems(a: &EvalReport, b: &EvalReport) -> Result<Comparison, EvalError> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (q, ap) in &a.per_query_ap {
        if let Some(bp) = b.per_query_ap.get(q) {
            xs.push(*ap);
            ys.push(*bp);
        }
    }
    let tt = paired_t_test(&xs, &ys)?;
    Ok(Comparison {
        system_a: a.system.clone(),
        system_b: b.system.clone(),
        t: tt.t,
        p: tt.p,
        significant: tt.significant,
    })
}

/// Runs every round of the fold plan through `run_round` and scores the
/// concatenated test rankings: each query is tested exactly once.
pub fn cross_validate<F>(
    system: &str,
    plan: &FoldPlan,
    qrels: &Qrels,
    mut run_round: F,
) -> Result<EvalReport, EvalError>
where
    F: FnMut(&RoundPlan) -> Result<Vec<ScoredList>, EvalError>,
{
    let mut all_runs = Vec::new();
    for round in plan.rounds() {
        let mut runs = run_round(&round)?;
        for run in &runs {
            debug_assert!(
                round.test.contains(&run.query_id),
                "round {} produced a ranking for non-test query {}",
                round.round,
                run.query_id
            );
        }
        all_runs.append(&mut runs);
    }
    Ok(EvalReport::from_runs(system, &all_runs, qrels))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunEntry {
    pub query_id: String,
    pub doc_id: String,
    pub rank: usize,
    pub score: f64,
    pub tag: String,
}

/// Writes rankings in TREC run format: `queryId Q0 docId rank score tag`.
pub fn write_run(path: &Path, lists: &[ScoredList], tag: &str) -> Result<(), EvalError> {
    let io_err = |source| EvalError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
    for list in lists {
        for (rank, (doc, score)) in list.entries().iter().enumerate() {
            writeln!(out, "{} Q0 {} {} {} {}", list.query_id, doc, rank + 1, score, tag)
                .map_err(io_err)?;
        }
    }
    out.flush().map_err(io_err)
}

/// Reads and validates a TREC run file: per query, ranks must be dense
/// from 1 in file order and scores nonincreasing with rank.
pub fn read_run(path: &Path) -> Result<Vec<RunEntry>, EvalError> {
    let reader = BufReader::new(File::open(path).map_err(|source| EvalError::Io {
        path: path.display().to_string(),
        source,
    })?);
    let mut entries: Vec<RunEntry> = Vec::new();
    let mut last: BTreeMap<String, (usize, f64)> = BTreeMap::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| EvalError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = lineno + 1;
        let malformed = |reason: String| EvalError::MalformedRun {
            path: path.display().to_string(),
            line: lineno,
            reason,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(malformed(format!("expected 6 fields, got {}", fields.len())));
        }
        let rank: usize = fields[3]
            .parse()
            .map_err(|_| malformed(format!("bad rank {:?}", fields[3])))?;
        let score: f64 = fields[4]
            .parse()
            .map_err(|_| malformed(format!("bad score {:?}", fields[4])))?;
        match last.get(fields[0]) {
            None if rank != 1 => {
                return Err(malformed(format!("first rank for query must be 1, got {rank}")))
            }
            Some(&(prev_rank, _)) if rank != prev_rank + 1 => {
                return Err(malformed(format!(
                    "ranks not dense: {rank} after {prev_rank}"
                )))
            }
            Some(&(_, prev_score)) if score > prev_score => {
                return Err(malformed(format!(
                    "score {score} increases over {prev_score} at rank {rank}"
                )))
            }
            _ => {}
        }
        last.insert(fields[0].to_string(), (rank, score));
        entries.push(RunEntry {
            query_id: fields[0].to_string(),
            doc_id: fields[2].to_string(),
            rank,
            score,
            tag: fields[5].to_string(),
        });
    }
    Ok(entries)
}
