//! Cross-lingual retrieval toolkit: unsupervised rankers over aligned word
//! embeddings (aggregated-embedding and term-by-term query translation
//! baselines) and interaction-based neural matching models (MatchPyramid
//! variants, DRMM, KNRM) with a pairwise-hinge training loop, 5-fold
//! cross-validation, and similarity-distribution analysis.

pub mod analysis;
pub mod clwe;
pub mod corpus;
pub mod eval;
pub mod interact;
pub mod neural;
pub mod synth;
pub mod unsup;
