//! Command-line surface for the cross-lingual retrieval toolkit.

mod commands;
mod config;
mod manifest;
mod pipeline;

use anyhow::Result;
use clap::Parser;

use crate::cli::{Cli, Command};
use crate::config::Preset;

pub mod cli {
    use std::path::PathBuf;

    use clap::{Args, Parser, Subcommand, ValueEnum};
    use clirmatch_core::neural::ModelKind;

    #[derive(Parser)]
    #[command(
        name = "clirmatch",
        about = "Cross-lingual retrieval with aligned word embeddings: \
                 unsupervised baselines, neural matching models, and \
                 similarity-distribution analysis",
        version
    )]
    pub struct Cli {
        /// TOML preset file; command-line flags override its values.
        #[arg(long, global = true)]
        pub config: Option<PathBuf>,
        #[command(subcommand)]
        pub command: Command,
    }

    #[derive(Subcommand)]
    pub enum Command {
        /// Generate the synthetic two-pseudo-language benchmark.
        Synth(SynthArgs),
        /// Preprocess a collection + queries into an index artifact.
        Index(IndexArgs),
        /// Rank with an unsupervised method (BWE-Agg or TbT-QT).
        RankUnsup(RankUnsupArgs),
        /// Train a neural matching model.
        Train(TrainArgs),
        /// Score candidates with a trained checkpoint.
        Rerank(RerankArgs),
        /// Score a run file against qrels (MAP, optional t-test).
        Evaluate(EvaluateArgs),
        /// Full 5-fold cross-validation protocol.
        Cv(CvArgs),
        /// Word-pair similarity distribution and threshold sweep.
        AnalyzeDist(AnalyzeDistArgs),
        /// Top-k nearest-neighbor table.
        Neighbors(NeighborsArgs),
    }

    #[derive(Args)]
    pub struct SynthArgs {
        /// Output directory.
        #[arg(long)]
        pub out: PathBuf,
        #[arg(long, default_value_t = 42)]
        pub seed: u64,
        #[arg(long, default_value_t = 200)]
        pub docs: usize,
        #[arg(long, default_value_t = 40)]
        pub topics: usize,
        #[arg(long, default_value_t = 4)]
        pub terms_per_topic: usize,
        #[arg(long, default_value_t = 100)]
        pub background_terms: usize,
        #[arg(long, default_value_t = 5)]
        pub relevant: usize,
        #[arg(long, default_value_t = 25)]
        pub nonrelevant: usize,
        #[arg(long, default_value_t = 0.05)]
        pub noise_sigma: f64,
        #[arg(long, default_value_t = 0.75)]
        pub distractor_prob: f64,
        #[arg(long, default_value_t = 64)]
        pub dim: usize,
    }

    #[derive(Args)]
    pub struct IndexArgs {
        #[arg(long)]
        pub collection: Option<PathBuf>,
        #[arg(long)]
        pub queries: Option<PathBuf>,
        #[arg(long)]
        pub stopwords: Option<PathBuf>,
        /// Keep only the first N content tokens of each document.
        #[arg(long)]
        pub truncation_limit: Option<usize>,
        /// Apply the limit to raw whitespace tokens instead of content tokens.
        #[arg(long)]
        pub truncate_raw: bool,
        #[arg(long)]
        pub out: PathBuf,
    }

    #[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
    pub enum UnsupMethod {
        BweAdd,
        BweIdf,
        TbtqtQl,
        TbtqtBm25,
    }

    impl UnsupMethod {
        pub fn tag(&self) -> &'static str {
            match self {
                UnsupMethod::BweAdd => "bwe-agg-add",
                UnsupMethod::BweIdf => "bwe-agg-idf",
                UnsupMethod::TbtqtQl => "tbtqt-ql",
                UnsupMethod::TbtqtBm25 => "tbtqt-bm25",
            }
        }

        pub fn needs_translation(&self) -> bool {
            matches!(self, UnsupMethod::TbtqtQl | UnsupMethod::TbtqtBm25)
        }
    }

    #[derive(Copy, Clone, Debug, ValueEnum)]
    pub enum PoolKind {
        /// Rank every document in the collection.
        Full,
        /// Rank only each query's judged documents.
        Judged,
    }

    #[derive(Args)]
    pub struct RankUnsupArgs {
        #[arg(long)]
        pub index: PathBuf,
        #[arg(long)]
        pub embeddings: Option<PathBuf>,
        #[arg(long)]
        pub target_embeddings: Option<PathBuf>,
        #[arg(long, value_enum)]
        pub method: UnsupMethod,
        #[arg(long, value_enum, default_value_t = PoolKind::Full)]
        pub pool: PoolKind,
        #[arg(long)]
        pub qrels: Option<PathBuf>,
        /// Dirichlet smoothing for query likelihood.
        #[arg(long)]
        pub mu: Option<f64>,
        #[arg(long)]
        pub k1: Option<f64>,
        #[arg(long)]
        pub b: Option<f64>,
        #[arg(long)]
        pub tag: Option<String>,
        #[arg(long)]
        pub out: PathBuf,
    }

    /// Knobs shared by train and cv.
    #[derive(Args)]
    pub struct TrainOpts {
        /// Exact-match threshold for indicator interactions.
        #[arg(long)]
        pub eta: Option<f64>,
        #[arg(long)]
        pub seed: Option<u64>,
        #[arg(long)]
        pub epochs: Option<usize>,
        #[arg(long)]
        pub batch_size: Option<usize>,
        #[arg(long)]
        pub learning_rate: Option<f64>,
        #[arg(long)]
        pub query_max_len: Option<usize>,
        #[arg(long)]
        pub mu: Option<f64>,
    }

    #[derive(Args)]
    pub struct TrainArgs {
        #[arg(long)]
        pub index: PathBuf,
        #[arg(long)]
        pub embeddings: Option<PathBuf>,
        #[arg(long)]
        pub target_embeddings: Option<PathBuf>,
        #[arg(long)]
        pub qrels: PathBuf,
        #[arg(long, value_parser = parse_model_kind)]
        pub model: ModelKind,
        /// Translate queries term-by-term before scoring.
        #[arg(long)]
        pub tbtqt: bool,
        /// Fraction of judged queries held out for epoch selection.
        #[arg(long, default_value_t = 0.2)]
        pub val_fraction: f64,
        #[command(flatten)]
        pub opts: TrainOpts,
        #[arg(long)]
        pub out: PathBuf,
    }

    #[derive(Copy, Clone, Debug, ValueEnum)]
    pub enum RerankPool {
        /// Each query's judged documents.
        Judged,
        /// Top-k of a TbT-QT-BM25 first stage over the full collection.
        FirstStage,
    }

    #[derive(Args)]
    pub struct RerankArgs {
        #[arg(long)]
        pub index: PathBuf,
        #[arg(long)]
        pub embeddings: Option<PathBuf>,
        #[arg(long)]
        pub target_embeddings: Option<PathBuf>,
        #[arg(long)]
        pub checkpoint: PathBuf,
        #[arg(long)]
        pub qrels: PathBuf,
        #[arg(long, value_enum, default_value_t = RerankPool::Judged)]
        pub pool: RerankPool,
        #[arg(long, default_value_t = 1000)]
        pub first_stage_k: usize,
        #[arg(long)]
        pub tag: Option<String>,
        #[arg(long)]
        pub out: PathBuf,
    }

    #[derive(Args)]
    pub struct EvaluateArgs {
        #[arg(long)]
        pub run: PathBuf,
        #[arg(long)]
        pub qrels: PathBuf,
        /// Second run for a paired significance test.
        #[arg(long)]
        pub baseline_run: Option<PathBuf>,
        #[arg(long)]
        pub out: PathBuf,
    }

    #[derive(Args)]
    pub struct CvArgs {
        #[arg(long)]
        pub index: PathBuf,
        #[arg(long)]
        pub embeddings: Option<PathBuf>,
        #[arg(long)]
        pub target_embeddings: Option<PathBuf>,
        #[arg(long)]
        pub qrels: PathBuf,
        #[arg(long, value_parser = parse_model_kind)]
        pub model: ModelKind,
        #[arg(long)]
        pub tbtqt: bool,
        #[arg(long)]
        pub folds: Option<usize>,
        /// Unsupervised baseline evaluated on the same pools and compared
        /// with a paired t-test.
        #[arg(long, value_enum)]
        pub baseline: Option<UnsupMethod>,
        #[command(flatten)]
        pub opts: TrainOpts,
        #[arg(long)]
        pub out_dir: PathBuf,
    }

    #[derive(Args)]
    pub struct AnalyzeDistArgs {
        #[arg(long)]
        pub index: PathBuf,
        #[arg(long)]
        pub embeddings: Option<PathBuf>,
        #[arg(long)]
        pub target_embeddings: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        pub bins: usize,
        /// Uniform sampling cap on the number of term pairs.
        #[arg(long, default_value_t = 10_000_000)]
        pub pair_cap: u64,
        #[arg(long)]
        pub seed: Option<u64>,
        #[arg(long, default_value_t = 100)]
        pub eta_points: usize,
        /// Optional `eta,map` CSV merged into the sweep output.
        #[arg(long)]
        pub map_csv: Option<PathBuf>,
        #[arg(long)]
        pub out_dir: PathBuf,
    }

    #[derive(Args)]
    pub struct NeighborsArgs {
        #[arg(long)]
        pub embeddings: Option<PathBuf>,
        #[arg(long)]
        pub target_embeddings: Option<PathBuf>,
        /// Comma-separated probe terms.
        #[arg(long)]
        pub terms: String,
        #[arg(short, long, default_value_t = 5)]
        pub k: usize,
        /// Restrict candidates to the terms in this file (one per line).
        #[arg(long)]
        pub candidates_file: Option<PathBuf>,
        #[arg(long)]
        pub out: Option<PathBuf>,
    }

    fn parse_model_kind(s: &str) -> Result<ModelKind, String> {
        ModelKind::parse(s).ok_or_else(|| {
            format!(
                "unknown model {s:?}; expected one of: {}",
                ModelKind::ALL.map(|k| k.name()).join(", ")
            )
        })
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let preset = Preset::load(cli.config.as_deref())?;
    match cli.command {
        Command::Synth(args) => commands::cmd_synth(args),
        Command::Index(args) => commands::cmd_index(args, &preset),
        Command::RankUnsup(args) => commands::cmd_rank_unsup(args, &preset),
        Command::Train(args) => commands::cmd_train(args, &preset),
        Command::Rerank(args) => commands::cmd_rerank(args, &preset),
        Command::Evaluate(args) => commands::cmd_evaluate(args, &preset),
        Command::Cv(args) => commands::cmd_cv(args, &preset),
        Command::AnalyzeDist(args) => commands::cmd_analyze_dist(args, &preset),
        Command::Neighbors(args) => commands::cmd_neighbors(args, &preset),
    }
}
