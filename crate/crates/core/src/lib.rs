//! Codex-driven abductive ranking.
//!
//! Observations are validated against a finite, curated hypothesis space and
//! every hypothesis in that space is scored, ranked and traced. Nothing
//! outside the codex can appear in an output.

pub mod codex;
pub mod error;
pub mod evaluation;
pub mod extraction;
pub mod normalization;
pub mod observation;
pub mod reasoning;

pub use codex::{derive_evoking_matrix, load_codex, validate_codex, Codex, EvokingMatrix, ValidationReport, Weighting};
pub use evaluation::{clopper_pearson, run_evaluation, Case, EvaluationReport, Ranker};
pub use extraction::{extract_mentions, ExtractorConfig, Mention, Polarity};
pub use normalization::{match_mention, EmbeddingStore, MatchOutcome};
pub use observation::{Finding, FindingStatus, ObservationVector};
pub use reasoning::{rank_differential, score_hypothesis, AbsentMode, Differential, ScoringPolicy};
