use thiserror::Error;

use crate::codex::Violation;

#[derive(Debug, Error)]
pub enum CodexError {
    #[error("codex parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("codex validation failed: {}", format_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("unknown hypothesis id `{0}`")]
    UnknownHypothesis(String),
    #[error("unknown feature id `{0}`")]
    UnknownFeature(String),
    #[error("unknown weighting policy `{0}`")]
    UnknownPolicy(String),
    #[error("invalid policy parameter: {0}")]
    InvalidParameter(String),
}

fn format_violations(violations: &[Violation]) -> String {
    violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Error, PartialEq)]
pub enum ObservationError {
    #[error("unknown feature id `{0}`")]
    UnknownFeature(String),
    #[error("codex version mismatch: observation is `{observation}`, codex is `{codex}`")]
    VersionMismatch { observation: String, codex: String },
    #[error("unknown finding status `{0}`")]
    BadStatus(String),
}

#[derive(Debug, Error)]
pub enum ExtractionError {
    #[error("invalid extractor config: {0}")]
    Config(String),
    #[error("external extractor timed out")]
    Timeout,
    #[error("external extractor transport error: {0}")]
    Transport(String),
    #[error("malformed extractor response: {0}")]
    Malformed(String),
    #[error("extractor contract violation: {0}")]
    ContractViolation(String),
}

#[derive(Debug, Error)]
pub enum NormalizationError {
    #[error("embeddings parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("missing feature vector {0}")]
    MissingVector(String),
    #[error("vector for `{0}` is not in the codex")]
    UnknownVector(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("zero vector{}", .0.as_ref().map(|id| format!(" for `{id}`")).unwrap_or_default())]
    ZeroVector(Option<String>),
    #[error("unembeddable mention `{0}`")]
    Unembeddable(String),
    #[error("embedding provider timed out")]
    Timeout,
    #[error("embedding provider error: {0}")]
    Provider(String),
    #[error("match threshold must lie in (0, 1], got {0}")]
    BadThreshold(f64),
}

#[derive(Debug, Error, PartialEq)]
pub enum ReasoningError {
    #[error("unknown hypothesis id `{0}`")]
    UnknownHypothesis(String),
    #[error("codex version mismatch: observation is `{observation}`, codex is `{codex}`")]
    VersionMismatch { observation: String, codex: String },
    #[error("evoking matrix parameters do not match the scoring policy")]
    PolicyMismatch,
    #[error("empty score list")]
    EmptyScores,
    #[error("leak parameter must lie in (0, 0.5), got {0}")]
    BadEpsilon(f64),
    #[error("invalid priors: {0}")]
    BadPriors(String),
}

#[derive(Debug, Error)]
pub enum EvaluationError {
    #[error("corpus parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("case `{case}`: {message}")]
    InvalidCase { case: String, message: String },
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("empty rank list")]
    EmptyRanks,
    #[error("k must be positive")]
    ZeroK,
    #[error("invalid interval arguments: {0}")]
    Range(String),
    #[error("infeasible synthesis parameters: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Reasoning(#[from] ReasoningError),
    #[error(transparent)]
    Codex(#[from] CodexError),
}
