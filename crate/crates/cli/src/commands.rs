//! Subcommand implementations. Every command writes a manifest (resolved
//! config + seeds + input digests) next to its primary output.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use clirmatch_core::analysis::{
    neighbor_table, pair_similarity_distribution, threshold_sweep, format_neighbor_table,
    write_distribution_csv, write_sweep_csv, NeighborRow, ThresholdSweep,
};
use clirmatch_core::clwe::{coverage_report, load_embeddings, EmbeddingTable};
use clirmatch_core::corpus::{load_qrels, PreprocessOptions, Qrels};
use clirmatch_core::eval::{
    average_precision, compare_systems, cross_validate, kfold_split, read_run, write_run,
    Comparison, EvalError, EvalReport, RunEntry,
};
use clirmatch_core::interact::TermVectorBank;
use clirmatch_core::neural::{
    load_checkpoint, rerank, save_checkpoint, train, FeatureBuilder, ModelConfig, ModelKind,
    TrainConfig,
};
use clirmatch_core::neural::train::TrainData;
use clirmatch_core::synth::{generate, SynthConfig};
use clirmatch_core::unsup::{
    bm25_rank, bm25_rank_candidates, bwe_agg_rank, bwe_agg_rank_candidates, ql_rank,
    ql_rank_candidates, ScoredList, TranslatedQuery, Weighting,
};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::cli::*;
use crate::config::{resolve_path, Preset};
use crate::manifest::Manifest;
use crate::pipeline::{
    build_index, install_translations, load_embedding_pair, load_index, save_index,
    translate_queries, IndexArtifact,
};

pub fn cmd_synth(args: SynthArgs) -> Result<()> {
    let cfg = SynthConfig {
        seed: args.seed,
        topics: args.topics,
        terms_per_topic: args.terms_per_topic,
        background_terms: args.background_terms,
        docs: args.docs,
        relevant_per_query: args.relevant,
        judged_nonrelevant_per_query: args.nonrelevant,
        noise_sigma: args.noise_sigma,
        distractor_prob: args.distractor_prob,
        dim: args.dim,
        ..SynthConfig::default()
    };
    let summary = generate(&cfg, &args.out)?;
    let mut manifest = Manifest::new("synth", &cfg)?;
    for p in [
        &summary.paths.collection,
        &summary.paths.queries,
        &summary.paths.qrels,
        &summary.paths.source_embeddings,
        &summary.paths.target_embeddings,
        &summary.paths.stopwords,
    ] {
        manifest.add_output(p);
    }
    manifest.write_next_to(&args.out.join("synth"))?;
    println!(
        "generated {} docs, {} queries, {} judged pairs, {} source / {} target terms ({} distractors) in {}",
        summary.docs,
        summary.queries,
        summary.judged_pairs,
        summary.source_terms,
        summary.target_terms,
        summary.distractor_terms,
        args.out.display()
    );
    Ok(())
}

pub fn cmd_index(args: IndexArgs, preset: &Preset) -> Result<()> {
    let collection = resolve_path(args.collection, preset.collection.clone(), "collection")?;
    let queries = resolve_path(args.queries, preset.queries.clone(), "queries")?;
    let stopwords = match (args.stopwords, preset.stopwords.clone()) {
        (None, None) => None,
        (flag, preset) => Some(resolve_path(flag, preset, "stopwords")?),
    };
    let options = PreprocessOptions {
        truncation_limit: args
            .truncation_limit
            .or(preset.truncation_limit)
            .unwrap_or(500),
        truncate_raw_tokens: args.truncate_raw || preset.truncate_raw_tokens.unwrap_or(false),
    };
    let index = build_index(&collection, &queries, stopwords.as_deref(), options.clone())?;
    if !index.flagged_empty_queries.is_empty() {
        eprintln!(
            "warning: {} queries empty after preprocessing: {:?}",
            index.flagged_empty_queries.len(),
            index.flagged_empty_queries
        );
    }
    save_index(&index, &args.out)?;

    #[derive(Serialize)]
    struct IndexRunConfig {
        options: PreprocessOptions,
        docs: usize,
        queries: usize,
        vocab: usize,
        avg_doc_len: f64,
    }
    let mut manifest = Manifest::new(
        "index",
        IndexRunConfig {
            options,
            docs: index.collection.len(),
            queries: index.queries.len(),
            vocab: index.vocab.len(),
            avg_doc_len: index.stats.avg_doc_len,
        },
    )?;
    manifest.add_input(&collection)?;
    manifest.add_input(&queries)?;
    if let Some(s) = &stopwords {
        manifest.add_input(s)?;
    }
    manifest.add_output(&args.out);
    manifest.write_next_to(&args.out)?;
    println!(
        "indexed {} docs ({} vocab terms, avg len {:.1}), {} queries -> {}",
        index.collection.len(),
        index.vocab.len(),
        index.stats.avg_doc_len,
        index.queries.len(),
        args.out.display()
    );
    Ok(())
}

struct RankingContext {
    index: IndexArtifact,
    table: EmbeddingTable,
    qrels: Option<Qrels>,
    translations: Option<Vec<TranslatedQuery>>,
}

fn load_ranking_context(
    index_path: &Path,
    embeddings: &Path,
    target_embeddings: Option<&Path>,
    qrels_path: Option<&Path>,
    need_translations: bool,
) -> Result<RankingContext> {
    let index = load_index(index_path)?;
    let table = load_embedding_pair(embeddings, target_embeddings, &index.vocab)?;
    let cov = coverage_report(&table, &index.vocab);
    eprintln!(
        "embedding coverage: {}/{} vocab terms ({:.1}% OOV)",
        cov.covered,
        cov.covered + cov.oov,
        cov.oov_rate * 100.0
    );
    let qrels = qrels_path.map(load_qrels).transpose()?;
    if let (Some(q), index_ref) = (&qrels, &index) {
        let unresolved = q.unresolved(&index_ref.collection);
        if !unresolved.is_empty() {
            eprintln!(
                "warning: {} judged documents not in the collection (first: {:?})",
                unresolved.len(),
                unresolved.first()
            );
        }
    }
    let translations = need_translations.then(|| translate_queries(&index, &table));
    Ok(RankingContext {
        index,
        table,
        qrels,
        translations,
    })
}

fn judged_pool<'a>(qrels: &'a Qrels, query_id: &str) -> Vec<&'a str> {
    qrels.judged(query_id).into_iter().map(|(d, _)| d).collect()
}

/// Runs one unsupervised method for the given queries over the chosen pool.
fn unsup_runs(
    ctx: &RankingContext,
    method: UnsupMethod,
    pool: PoolKind,
    query_ids: &[String],
    mu: f64,
    k1: f64,
    b: f64,
) -> Result<Vec<ScoredList>> {
    let index = &ctx.index;
    let mut runs = Vec::new();
    for qid in query_ids {
        let query = index
            .query(qid)
            .with_context(|| format!("query {qid} not in index"))?;
        let candidates: Option<Vec<&str>> = match pool {
            PoolKind::Full => None,
            PoolKind::Judged => {
                let qrels = ctx
                    .qrels
                    .as_ref()
                    .context("--pool judged requires --qrels")?;
                Some(judged_pool(qrels, qid))
            }
        };
        let list = match method {
            UnsupMethod::BweAdd | UnsupMethod::BweIdf => {
                let weighting = if matches!(method, UnsupMethod::BweAdd) {
                    Weighting::Uniform
                } else {
                    Weighting::Idf
                };
                let result = match &candidates {
                    None => bwe_agg_rank(
                        query,
                        &index.collection,
                        &index.vocab,
                        &ctx.table,
                        weighting,
                        &index.stats,
                    ),
                    Some(c) => bwe_agg_rank_candidates(
                        query,
                        c,
                        &index.collection,
                        &index.vocab,
                        &ctx.table,
                        weighting,
                        &index.stats,
                    ),
                };
                match result {
                    Ok(list) => list,
                    Err(e) => {
                        eprintln!("warning: skipping {qid}: {e}");
                        continue;
                    }
                }
            }
            UnsupMethod::TbtqtQl | UnsupMethod::TbtqtBm25 => {
                let translations = ctx
                    .translations
                    .as_ref()
                    .expect("translations prepared for tbtqt methods");
                let tr = translations
                    .iter()
                    .find(|t| t.query_id == *qid)
                    .expect("translation for every query");
                let tokens = tr.resolve(&index.vocab);
                match (&method, &candidates) {
                    (UnsupMethod::TbtqtQl, None) => {
                        ql_rank(qid, &tokens, &index.collection, &index.stats, mu)
                    }
                    (UnsupMethod::TbtqtQl, Some(c)) => {
                        ql_rank_candidates(qid, &tokens, c, &index.collection, &index.stats, mu)
                    }
                    (UnsupMethod::TbtqtBm25, None) => {
                        bm25_rank(qid, &tokens, &index.collection, &index.stats, k1, b)
                    }
                    (UnsupMethod::TbtqtBm25, Some(c)) => bm25_rank_candidates(
                        qid,
                        &tokens,
                        c,
                        &index.collection,
                        &index.stats,
                        k1,
                        b,
                    ),
                    _ => unreachable!(),
                }
            }
        };
        runs.push(list);
    }
    Ok(runs)
}

pub fn cmd_rank_unsup(args: RankUnsupArgs, preset: &Preset) -> Result<()> {
    let index_path = args.index;
    let embeddings = resolve_path(
        args.embeddings,
        preset.source_embeddings.clone(),
        "embeddings",
    )?;
    let target = match (args.target_embeddings, preset.target_embeddings.clone()) {
        (None, None) => None,
        (flag, p) => Some(resolve_path(flag, p, "target embeddings")?),
    };
    let qrels_path = match (args.qrels, preset.qrels.clone()) {
        (None, None) => None,
        (flag, p) => Some(resolve_path(flag, p, "qrels")?),
    };
    let mu = args.mu.or(preset.mu).unwrap_or(1000.0);
    let k1 = args.k1.or(preset.k1).unwrap_or(1.2);
    let b = args.b.or(preset.b).unwrap_or(0.75);
    let needs_translation = matches!(args.method, UnsupMethod::TbtqtQl | UnsupMethod::TbtqtBm25);
    let ctx = load_ranking_context(
        &index_path,
        &embeddings,
        target.as_deref(),
        qrels_path.as_deref(),
        needs_translation,
    )?;
    let query_ids: Vec<String> = ctx.index.queries.iter().map(|q| q.id.clone()).collect();
    let runs = unsup_runs(&ctx, args.method, args.pool, &query_ids, mu, k1, b)?;
    let tag = args.tag.unwrap_or_else(|| args.method.tag().to_string());
    write_run(&args.out, &runs, &tag)?;

    #[derive(Serialize)]
    struct RankConfig {
        method: String,
        pool: String,
        mu: f64,
        k1: f64,
        b: f64,
        tag: String,
    }
    let mut manifest = Manifest::new(
        "rank-unsup",
        RankConfig {
            method: args.method.tag().to_string(),
            pool: format!("{:?}", args.pool).to_lowercase(),
            mu,
            k1,
            b,
            tag: tag.clone(),
        },
    )?;
    manifest.add_input(&index_path)?;
    manifest.add_input(&embeddings)?;
    if let Some(t) = &target {
        manifest.add_input(t)?;
    }
    if let Some(q) = &qrels_path {
        manifest.add_input(q)?;
    }
    manifest.add_output(&args.out);
    manifest.write_next_to(&args.out)?;
    println!("wrote {} rankings to {}", runs.len(), args.out.display());
    Ok(())
}

fn model_config(
    kind: ModelKind,
    tbtqt: bool,
    args_eta: Option<f64>,
    args_qml: Option<usize>,
    seed: u64,
    preset: &Preset,
) -> ModelConfig {
    let mut cfg = ModelConfig::new(kind);
    cfg.tbtqt = tbtqt;
    cfg.eta = args_eta.or(preset.eta).unwrap_or(cfg.eta);
    cfg.query_max_len = args_qml.or(preset.query_max_len).unwrap_or(cfg.query_max_len);
    cfg.seed = seed;
    cfg
}

fn train_config(args: &TrainOpts, preset: &Preset, seed: u64) -> TrainConfig {
    let mut t = TrainConfig::default();
    t.max_epochs = args.epochs.or(preset.epochs).unwrap_or(t.max_epochs);
    t.batch_size = args.batch_size.or(preset.batch_size).unwrap_or(t.batch_size);
    t.learning_rate = args
        .learning_rate
        .or(preset.learning_rate)
        .unwrap_or(t.learning_rate);
    t.seed = seed;
    t
}

/// Sorted ids of queries that have at least one judgment.
fn judged_query_ids(index: &IndexArtifact, qrels: &Qrels) -> Vec<String> {
    let mut ids: Vec<String> = index
        .queries
        .iter()
        .filter(|q| !qrels.judged(&q.id).is_empty())
        .map(|q| q.id.clone())
        .collect();
    ids.sort();
    ids
}

pub fn cmd_train(args: TrainArgs, preset: &Preset) -> Result<()> {
    let embeddings = resolve_path(
        args.embeddings,
        preset.source_embeddings.clone(),
        "embeddings",
    )?;
    let target = match (args.target_embeddings, preset.target_embeddings.clone()) {
        (None, None) => None,
        (flag, p) => Some(resolve_path(flag, p, "target embeddings")?),
    };
    let qrels_path = resolve_path(Some(args.qrels), preset.qrels.clone(), "qrels")?;
    let seed = args.opts.seed.or(preset.seed).unwrap_or(42);
    let ctx = load_ranking_context(
        &args.index,
        &embeddings,
        target.as_deref(),
        Some(&qrels_path),
        args.tbtqt,
    )?;
    let qrels = ctx.qrels.as_ref().expect("qrels loaded");
    let cfg = model_config(
        args.model,
        args.tbtqt,
        args.opts.eta,
        args.opts.query_max_len,
        seed,
        preset,
    );
    let tcfg = train_config(&args.opts, preset, seed);

    let ids = judged_query_ids(&ctx.index, qrels);
    if ids.len() < 2 {
        bail!("need at least 2 judged queries to split train/validation");
    }
    let mut shuffled = ids.clone();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_val = ((shuffled.len() as f64 * args.val_fraction).round() as usize)
        .clamp(1, shuffled.len() - 1);
    let (val_ids, train_ids) = shuffled.split_at(n_val);

    let bank = TermVectorBank::build(&ctx.index.vocab, &ctx.table);
    let mut features = FeatureBuilder::new(&cfg, &bank, &ctx.index.stats);
    if let Some(tr) = &ctx.translations {
        install_translations(&mut features, &ctx.index, tr);
    }
    let data = TrainData {
        collection: &ctx.index.collection,
        qrels,
        queries: &ctx.index.queries,
    };
    let outcome = train(&cfg, &tcfg, &data, train_ids, val_ids, &mut features)?;
    for e in &outcome.log {
        println!(
            "epoch {:>2}: mean loss {:.4}, val MAP {:.4}",
            e.epoch, e.mean_loss, e.val_map
        );
    }
    if !outcome.skipped_queries.is_empty() {
        eprintln!(
            "warning: {} train queries skipped (no positives or no judged negatives)",
            outcome.skipped_queries.len()
        );
    }
    println!("best epoch: {}", outcome.best_epoch);
    save_checkpoint(&args.out, &cfg, &tcfg, &outcome.params)?;

    #[derive(Serialize)]
    struct TrainRunConfig {
        model: ModelConfig,
        train: TrainConfig,
        val_fraction: f64,
        train_queries: usize,
        val_queries: usize,
        best_epoch: usize,
    }
    let mut manifest = Manifest::new(
        "train",
        TrainRunConfig {
            model: cfg.clone(),
            train: tcfg.clone(),
            val_fraction: args.val_fraction,
            train_queries: train_ids.len(),
            val_queries: val_ids.len(),
            best_epoch: outcome.best_epoch,
        },
    )?;
    manifest.add_input(&args.index)?;
    manifest.add_input(&embeddings)?;
    if let Some(t) = &target {
        manifest.add_input(t)?;
    }
    manifest.add_input(&qrels_path)?;
    manifest.add_output(&args.out);
    manifest.write_next_to(&args.out)?;
    println!("checkpoint -> {}", args.out.display());
    Ok(())
}

pub fn cmd_rerank(args: RerankArgs, preset: &Preset) -> Result<()> {
    let embeddings = resolve_path(
        args.embeddings,
        preset.source_embeddings.clone(),
        "embeddings",
    )?;
    let target = match (args.target_embeddings, preset.target_embeddings.clone()) {
        (None, None) => None,
        (flag, p) => Some(resolve_path(flag, p, "target embeddings")?),
    };
    let qrels_path = resolve_path(Some(args.qrels), preset.qrels.clone(), "qrels")?;
    let ckpt = load_checkpoint(&args.checkpoint)?;
    let cfg = ckpt.model.clone();
    let params = ckpt.into_params();
    let ctx = load_ranking_context(
        &args.index,
        &embeddings,
        target.as_deref(),
        Some(&qrels_path),
        cfg.tbtqt || matches!(args.pool, RerankPool::FirstStage),
    )?;
    let qrels = ctx.qrels.as_ref().expect("qrels loaded");
    let bank = TermVectorBank::build(&ctx.index.vocab, &ctx.table);
    let mut features = FeatureBuilder::new(&cfg, &bank, &ctx.index.stats);
    if cfg.tbtqt {
        install_translations(
            &mut features,
            &ctx.index,
            ctx.translations.as_ref().expect("translations prepared"),
        );
    }

    let mut runs = Vec::new();
    for query in &ctx.index.queries {
        let candidates: Vec<String> = match args.pool {
            RerankPool::Judged => judged_pool(qrels, &query.id)
                .into_iter()
                .map(str::to_string)
                .collect(),
            RerankPool::FirstStage => {
                let tr = ctx
                    .translations
                    .as_ref()
                    .expect("translations prepared")
                    .iter()
                    .find(|t| t.query_id == query.id)
                    .expect("translation for every query");
                let tokens = tr.resolve(&ctx.index.vocab);
                bm25_rank(
                    &query.id,
                    &tokens,
                    &ctx.index.collection,
                    &ctx.index.stats,
                    1.2,
                    0.75,
                )
                .entries()
                .iter()
                .take(args.first_stage_k)
                .map(|(d, _)| d.clone())
                .collect()
            }
        };
        if candidates.is_empty() {
            continue;
        }
        let cand_refs: Vec<&str> = candidates.iter().map(String::as_str).collect();
        runs.push(rerank(
            &params,
            &cfg,
            query,
            &cand_refs,
            &ctx.index.collection,
            &mut features,
        ));
    }
    let tag = args.tag.unwrap_or_else(|| {
        if cfg.tbtqt {
            format!("{}-tbtqt", cfg.kind)
        } else {
            cfg.kind.to_string()
        }
    });
    write_run(&args.out, &runs, &tag)?;

    #[derive(Serialize)]
    struct RerankConfig {
        model: ModelConfig,
        pool: String,
        first_stage_k: usize,
        tag: String,
    }
    let mut manifest = Manifest::new(
        "rerank",
        RerankConfig {
            model: cfg,
            pool: format!("{:?}", args.pool).to_lowercase(),
            first_stage_k: args.first_stage_k,
            tag,
        },
    )?;
    manifest.add_input(&args.index)?;
    manifest.add_input(&args.checkpoint)?;
    manifest.add_input(&embeddings)?;
    if let Some(t) = &target {
        manifest.add_input(t)?;
    }
    manifest.add_input(&qrels_path)?;
    manifest.add_output(&args.out);
    manifest.write_next_to(&args.out)?;
    println!("wrote {} rankings to {}", runs.len(), args.out.display());
    Ok(())
}

/// Rebuilds per-query rankings from validated run entries (file order).
fn report_from_entries(system: &str, entries: &[RunEntry], qrels: &Qrels) -> EvalReport {
    let mut by_query: BTreeMap<String, Vec<&str>> = BTreeMap::new();
    let mut order: Vec<String> = Vec::new();
    for e in entries {
        if !by_query.contains_key(&e.query_id) {
            order.push(e.query_id.clone());
        }
        by_query.entry(e.query_id.clone()).or_default().push(&e.doc_id);
    }
    let mut per_query_ap = BTreeMap::new();
    let mut excluded = Vec::new();
    for qid in order {
        let ranked = &by_query[&qid];
        let relevant: HashSet<&str> = qrels.relevant(&qid).into_iter().collect();
        match average_precision(ranked, &relevant) {
            Some(ap) => {
                per_query_ap.insert(qid, ap);
            }
            None => excluded.push(qid),
        }
    }
    let map = if per_query_ap.is_empty() {
        0.0
    } else {
        per_query_ap.values().sum::<f64>() / per_query_ap.len() as f64
    };
    EvalReport {
        system: system.to_string(),
        per_query_ap,
        map,
        excluded_queries: excluded,
    }
}

fn write_comparisons_csv(path: &Path, comparisons: &[Comparison]) -> Result<()> {
    let mut text = String::from("system_a,system_b,t,p,significant\n");
    for c in comparisons {
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            c.system_a, c.system_b, c.t, c.p, c.significant
        ));
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn cmd_evaluate(args: EvaluateArgs, preset: &Preset) -> Result<()> {
    let qrels_path = resolve_path(Some(args.qrels), preset.qrels.clone(), "qrels")?;
    let qrels = load_qrels(&qrels_path)?;
    let entries = read_run(&args.run)?;
    let tag = entries
        .first()
        .map(|e| e.tag.clone())
        .unwrap_or_else(|| "run".to_string());
    let report = report_from_entries(&tag, &entries, &qrels);
    print!("{report}");

    let mut comparisons = Vec::new();
    if let Some(baseline_path) = &args.baseline_run {
        let base_entries = read_run(baseline_path)?;
        let base_tag = base_entries
            .first()
            .map(|e| e.tag.clone())
            .unwrap_or_else(|| "baseline".to_string());
        let base_report = report_from_entries(&base_tag, &base_entries, &qrels);
        println!("{base_report}");
        let cmp = compare_systems(&report, &base_report)?;
        println!(
            "paired t-test {} vs {}: t = {:.4}, p = {:.6}, significant(0.05) = {}",
            cmp.system_a, cmp.system_b, cmp.t, cmp.p, cmp.significant
        );
        comparisons.push(cmp);
    }

    let mut out = std::fs::File::create(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    report.write_csv(&mut out)?;
    if !comparisons.is_empty() {
        let cmp_path = args.out.with_extension("comparisons.csv");
        write_comparisons_csv(&cmp_path, &comparisons)?;
    }

    #[derive(Serialize)]
    struct EvalConfig {
        system: String,
        map: f64,
        queries: usize,
        excluded: usize,
    }
    let mut manifest = Manifest::new(
        "evaluate",
        EvalConfig {
            system: report.system.clone(),
            map: report.map,
            queries: report.per_query_ap.len(),
            excluded: report.excluded_queries.len(),
        },
    )?;
    manifest.add_input(&args.run)?;
    if let Some(b) = &args.baseline_run {
        manifest.add_input(b)?;
    }
    manifest.add_input(&qrels_path)?;
    manifest.add_output(&args.out);
    manifest.write_next_to(&args.out)?;
    Ok(())
}

pub fn cmd_cv(args: CvArgs, preset: &Preset) -> Result<()> {
    let embeddings = resolve_path(
        args.embeddings,
        preset.source_embeddings.clone(),
        "embeddings",
    )?;
    let target = match (args.target_embeddings, preset.target_embeddings.clone()) {
        (None, None) => None,
        (flag, p) => Some(resolve_path(flag, p, "target embeddings")?),
    };
    let qrels_path = resolve_path(Some(args.qrels), preset.qrels.clone(), "qrels")?;
    let seed = args.opts.seed.or(preset.seed).unwrap_or(42);
    let folds = args.folds.or(preset.folds).unwrap_or(5);
    let needs_translation =
        args.tbtqt || args.baseline.map_or(false, |b| b.needs_translation());
    let ctx = load_ranking_context(
        &args.index,
        &embeddings,
        target.as_deref(),
        Some(&qrels_path),
        needs_translation,
    )?;
    let qrels = ctx.qrels.as_ref().expect("qrels loaded");
    let cfg = model_config(
        args.model,
        args.tbtqt,
        args.opts.eta,
        args.opts.query_max_len,
        seed,
        preset,
    );
    let tcfg = train_config(&args.opts, preset, seed);
    let system_name = if args.tbtqt {
        format!("{}-tbtqt", cfg.kind)
    } else {
        cfg.kind.to_string()
    };

    let ids = judged_query_ids(&ctx.index, qrels);
    let plan = kfold_split(&ids, folds, seed)?;
    let bank = TermVectorBank::build(&ctx.index.vocab, &ctx.table);
    let mut features = FeatureBuilder::new(&cfg, &bank, &ctx.index.stats);
    if args.tbtqt {
        install_translations(
            &mut features,
            &ctx.index,
            ctx.translations.as_ref().expect("translations prepared"),
        );
    }
    let data = TrainData {
        collection: &ctx.index.collection,
        qrels,
        queries: &ctx.index.queries,
    };

    let mut all_runs: Vec<ScoredList> = Vec::new();
    let report = cross_validate(&system_name, &plan, qrels, |round| {
        eprintln!(
            "round {}: train {} / val {} / test {}",
            round.round,
            round.train.len(),
            round.validation.len(),
            round.test.len()
        );
        let outcome = train(&cfg, &tcfg, &data, &round.train, &round.validation, &mut features)
            .map_err(|e| EvalError::System(e.to_string()))?;
        let runs: Vec<ScoredList> = round
            .test
            .iter()
            .map(|qid| {
                let query = ctx.index.query(qid).expect("fold ids come from the index");
                let judged = judged_pool(qrels, qid);
                rerank(
                    &outcome.params,
                    &cfg,
                    query,
                    &judged,
                    &ctx.index.collection,
                    &mut features,
                )
            })
            .collect();
        all_runs.extend(runs.iter().cloned());
        Ok(runs)
    })?;
    println!("{report}");

    std::fs::create_dir_all(&args.out_dir)?;
    let run_path = args.out_dir.join(format!("{system_name}.run.txt"));
    write_run(&run_path, &all_runs, &system_name)?;
    let report_path = args.out_dir.join(format!("{system_name}.report.csv"));
    let mut out = std::fs::File::create(&report_path)?;
    report.write_csv(&mut out)?;

    let mut comparisons = Vec::new();
    let mut baseline_files = Vec::new();
    if let Some(baseline) = args.baseline {
        let test_ids: Vec<String> = ids.clone();
        let base_runs = unsup_runs(
            &ctx,
            baseline,
            PoolKind::Judged,
            &test_ids,
            args.opts.mu.or(preset.mu).unwrap_or(1000.0),
            preset.k1.unwrap_or(1.2),
            preset.b.unwrap_or(0.75),
        )?;
        let base_report = EvalReport::from_runs(baseline.tag(), &base_runs, qrels);
        println!("{base_report}");
        let cmp = compare_systems(&report, &base_report)?;
        println!(
            "paired t-test {} vs {}: t = {:.4}, p = {:.6}, significant(0.05) = {}",
            cmp.system_a, cmp.system_b, cmp.t, cmp.p, cmp.significant
        );
        let base_run_path = args.out_dir.join(format!("{}.run.txt", baseline.tag()));
        write_run(&base_run_path, &base_runs, baseline.tag())?;
        let base_report_path = args.out_dir.join(format!("{}.report.csv", baseline.tag()));
        let mut out = std::fs::File::create(&base_report_path)?;
        base_report.write_csv(&mut out)?;
        baseline_files.push(base_run_path);
        baseline_files.push(base_report_path);
        comparisons.push(cmp);
    }
    let cmp_path = args.out_dir.join("comparisons.csv");
    if !comparisons.is_empty() {
        write_comparisons_csv(&cmp_path, &comparisons)?;
    }

    #[derive(Serialize)]
    struct CvConfig {
        model: ModelConfig,
        train: TrainConfig,
        folds: usize,
        seed: u64,
        system: String,
        map: f64,
        baseline: Option<String>,
    }
    let mut manifest = Manifest::new(
        "cv",
        CvConfig {
            model: cfg,
            train: tcfg,
            folds,
            seed,
            system: system_name.clone(),
            map: report.map,
            baseline: args.baseline.map(|b| b.tag().to_string()),
        },
    )?;
    manifest.add_input(&args.index)?;
    manifest.add_input(&embeddings)?;
    if let Some(t) = &target {
        manifest.add_input(t)?;
    }
    manifest.add_input(&qrels_path)?;
    manifest.add_output(&run_path);
    manifest.add_output(&report_path);
    for f in &baseline_files {
        manifest.add_output(f);
    }
    if !comparisons.is_empty() {
        manifest.add_output(&cmp_path);
    }
    manifest.write_next_to(&args.out_dir.join("cv"))?;
    println!("outputs in {}", args.out_dir.display());
    Ok(())
}

pub fn cmd_analyze_dist(args: AnalyzeDistArgs, preset: &Preset) -> Result<()> {
    let embeddings = resolve_path(
        args.embeddings,
        preset.source_embeddings.clone(),
        "embeddings",
    )?;
    let target = match (args.target_embeddings, preset.target_embeddings.clone()) {
        (None, None) => None,
        (flag, p) => Some(resolve_path(flag, p, "target embeddings")?),
    };
    let seed = args.seed.or(preset.seed).unwrap_or(42);
    let index = load_index(&args.index)?;
    let table = load_embedding_pair(&embeddings, target.as_deref(), &index.vocab)?;

    // Unique source terms in the queries x unique target terms in the docs.
    let mut query_vocab: HashSet<String> = HashSet::new();
    for q in &index.queries {
        query_vocab.extend(q.tokens.iter().map(|&t| index.vocab.term(t).to_string()));
    }
    let doc_vocab = index.collection_terms();
    let dist = pair_similarity_distribution(
        &query_vocab,
        &doc_vocab,
        &table,
        args.bins,
        Some(args.pair_cap),
        seed,
    )?;
    let etas: Vec<f64> = (0..args.eta_points)
        .map(|i| -1.0 + 2.0 * i as f64 / (args.eta_points - 1) as f64)
        .collect();
    let mut sweep = threshold_sweep(&dist, &etas)?;
    if let Some(map_csv) = &args.map_csv {
        sweep = attach_map_column(sweep, map_csv)?;
    }

    std::fs::create_dir_all(&args.out_dir)?;
    let dist_path = args.out_dir.join("distribution.csv");
    let mut out = std::fs::File::create(&dist_path)?;
    write_distribution_csv(&dist, &mut out)?;
    let sweep_path = args.out_dir.join("sweep.csv");
    let mut out = std::fs::File::create(&sweep_path)?;
    write_sweep_csv(&sweep, &mut out)?;

    #[derive(Serialize)]
    struct DistConfig {
        bins: usize,
        pair_cap: u64,
        seed: u64,
        eta_points: usize,
        total_pairs: u64,
        query_terms: usize,
        doc_terms: usize,
    }
    let mut manifest = Manifest::new(
        "analyze-dist",
        DistConfig {
            bins: args.bins,
            pair_cap: args.pair_cap,
            seed,
            eta_points: args.eta_points,
            total_pairs: dist.total_pairs,
            query_terms: query_vocab.len(),
            doc_terms: doc_vocab.len(),
        },
    )?;
    manifest.add_input(&args.index)?;
    manifest.add_input(&embeddings)?;
    if let Some(t) = &target {
        manifest.add_input(t)?;
    }
    if let Some(m) = &args.map_csv {
        manifest.add_input(m)?;
    }
    manifest.add_output(&dist_path);
    manifest.add_output(&sweep_path);
    manifest.write_next_to(&args.out_dir.join("analyze-dist"))?;
    println!(
        "distribution over {} pairs -> {}",
        dist.total_pairs,
        args.out_dir.display()
    );
    Ok(())
}

/// Merges a `eta,map` CSV (e.g. from MP-Exact cv runs at several
/// thresholds) into the sweep rows by exact eta match.
fn attach_map_column(sweep: ThresholdSweep, map_csv: &Path) -> Result<ThresholdSweep> {
    let text = std::fs::read_to_string(map_csv)
        .with_context(|| format!("reading {}", map_csv.display()))?;
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 && line.starts_with("eta") {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let eta: f64 = parts
            .next()
            .and_then(|s| s.trim().parse().ok())
            .with_context(|| format!("{}:{}: bad eta", map_csv.display(), i + 1))?;
        let map: f64 = parts
            .next()
            .and_then(|s| s.trim().parse().ok())
            .with_context(|| format!("{}:{}: bad map", map_csv.display(), i + 1))?;
        pairs.push((eta, map));
    }
    let maps: Vec<f64> = sweep
        .etas
        .iter()
        .map(|&e| {
            pairs
                .iter()
                .find(|(pe, _)| (pe - e).abs() < 1e-9)
                .map(|(_, m)| *m)
                .unwrap_or(f64::NAN)
        })
        .collect();
    Ok(ThresholdSweep {
        map_at_eta: Some(maps),
        ..sweep
    })
}

pub fn cmd_neighbors(args: NeighborsArgs, preset: &Preset) -> Result<()> {
    let embeddings = resolve_path(
        args.embeddings,
        preset.source_embeddings.clone(),
        "embeddings",
    )?;
    let target = match (args.target_embeddings, preset.target_embeddings.clone()) {
        (None, None) => None,
        (flag, p) => Some(resolve_path(flag, p, "target embeddings")?),
    };
    let (table, _) = load_embeddings(&embeddings, None, "src", "src")?;
    let table = match &target {
        None => table,
        Some(t) => {
            let (tgt, _) = load_embeddings(t, None, "tgt", "tgt")?;
            table.merge(&tgt)?.0
        }
    };
    let candidates: Option<HashSet<String>> = match &args.candidates_file {
        None => None,
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            Some(text.lines().map(|l| l.trim().to_string()).filter(|l| !l.is_empty()).collect())
        }
    };
    let terms: Vec<String> = args.terms.split(',').map(|t| t.trim().to_string()).collect();
    let rows = neighbor_table(&terms, args.k, &table, candidates.as_ref());
    let text = format_neighbor_table(&rows);
    print!("{text}");
    if let Some(out) = &args.out {
        std::fs::write(out, &text)?;
        #[derive(Serialize)]
        struct NeighborConfig {
            terms: Vec<String>,
            k: usize,
            oov: usize,
        }
        let oov = rows.iter().filter(|r| matches!(r, NeighborRow::Oov { .. })).count();
        let mut manifest = Manifest::new("neighbors", NeighborConfig { terms, k: args.k, oov })?;
        manifest.add_input(&embeddings)?;
        if let Some(t) = &target {
            manifest.add_input(t)?;
        }
        if let Some(c) = &args.candidates_file {
            manifest.add_input(c)?;
        }
        manifest.add_output(out);
        manifest.write_next_to(out)?;
    }
    Ok(())
}
