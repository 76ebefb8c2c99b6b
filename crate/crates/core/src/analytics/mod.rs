//! The evaluation pipeline: corpus statistics, ethics-principle coverage,
//! Reinert-style descending hierarchical classification, LLM-backed thematic
//! analysis with merging, and debate-vs-baseline comparison.

mod bisect;
mod chi2;
mod cluster;
mod compare;
mod coverage;
mod matrix;
mod segment;
mod stats;
mod themes;

pub use bisect::{bisect_partition, partition_phi};
pub use chi2::chi_square_2x2;
pub use cluster::{dhc_cluster, render_cluster_text, ClusterNode, ClusterTree};
pub use compare::{compare_runs, ComparisonReport, VerdictFlags};
pub use coverage::{ethics_coverage, CoverageReport, EthicsLexicon, PrincipleCoverage};
pub use matrix::{build_term_matrix, TermMatrix};
pub use segment::{segment_corpus, segment_transcripts, Ecu, EcuSpan, SegmentOptions};
pub use stats::{corpus_stats, CorpusStats};
pub use themes::{
    merge_thematic_analyses, render_thematic_table, run_thematic_analysis, ThematicAnalysis, Theme,
};

use thiserror::Error;

use crate::backend::BackendError;

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("empty corpus: {0}")]
    EmptyCorpus(String),
    #[error("matrix is unsplittable: every ECU row is identical")]
    Unsplittable,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("backend failure: {0}")]
    Backend(#[from] BackendError),
    #[error("unparseable analysis: {0}")]
    UnparseableAnalysis(String),
}
