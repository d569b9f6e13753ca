//! Deterministic scoring and ranking of every codex hypothesis.
//!
//! A hypothesis `h` with signature `C(h)` scores
//!
//! ```text
//! S(h) =   Σ support(h, f)          over f ∈ C(h) present
//!        − α · Σ support(h, f)      over f ∈ C(h) confirmed absent
//!        − β · |{f present, f ∉ C(h)}|
//! ```
//!
//! Unknown features contribute nothing. Every nonzero term is recorded as a
//! [`Contribution`]; the raw score is the sum of the recorded deltas snapped
//! to a 1e-12 grid, so scores that agree up to rounding noise tie exactly and
//! fall back to the id tie-break.

mod explain;
mod nb;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize, Serializer};

use crate::codex::{derive_evoking_matrix, Codex, EvokingMatrix, Weighting};
use crate::error::{CodexError, ReasoningError};
use crate::observation::{FindingStatus, ObservationVector};

pub use explain::{render_entry, render_explanation};
pub use nb::{nb_rank, Priors};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbsentMode {
    /// Present, confirmed absent and unknown are kept apart.
    TriState,
    /// Binary projection first; everything not present counts as absent.
    Binary,
}

impl std::str::FromStr for AbsentMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tri_state" => Ok(AbsentMode::TriState),
            "binary" => Ok(AbsentMode::Binary),
            other => Err(format!("unknown absent mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoringPolicy {
    pub weighting: Weighting,
    #[serde(serialize_with = "sig9")]
    pub alpha: f64,
    #[serde(serialize_with = "sig9")]
    pub beta: f64,
    pub absent_mode: AbsentMode,
}

impl Default for ScoringPolicy {
    fn default() -> Self {
        ScoringPolicy { weighting: Weighting::Uniform, alpha: 0.5, beta: 0.25, absent_mode: AbsentMode::TriState }
    }
}

impl ScoringPolicy {
    pub fn evoking_matrix(&self, codex: &Codex) -> Result<EvokingMatrix, CodexError> {
        derive_evoking_matrix(codex, self.weighting, self.alpha, self.beta)
    }

    fn check(&self, matrix: &EvokingMatrix) -> Result<(), ReasoningError> {
        if matrix.missing_factor != self.alpha
            || matrix.unexpected_penalty != self.beta
            || matrix.policy_name != self.weighting.name()
        {
            return Err(ReasoningError::PolicyMismatch);
        }
        Ok(())
    }
}

/// Which ranker produced a differential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum RankingMethod {
    Evoking(ScoringPolicy),
    NaiveBayes {
        #[serde(serialize_with = "sig9")]
        epsilon: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Term {
    Support,
    Missing,
    Unexpected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contribution {
    pub feature: String,
    pub term: Term,
    #[serde(serialize_with = "sig9")]
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferentialEntry {
    pub hypothesis: String,
    #[serde(serialize_with = "sig9")]
    pub raw_score: f64,
    #[serde(serialize_with = "sig9")]
    pub confidence: f64,
    pub contributions: Vec<Contribution>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Differential {
    pub codex_version: String,
    pub policy: RankingMethod,
    pub entries: Vec<DifferentialEntry>,
}

impl Differential {
    pub fn entry(&self, hypothesis: &str) -> Option<&DifferentialEntry> {
        self.entries.iter().find(|e| e.hypothesis == hypothesis)
    }

    /// 1-based position of `hypothesis`.
    pub fn position(&self, hypothesis: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.hypothesis == hypothesis).map(|p| p + 1)
    }

    /// The first `k` entries; the whole differential when `k` is `None`.
    pub fn top(&self, k: Option<usize>) -> Differential {
        let mut out = self.clone();
        if let Some(k) = k {
            out.entries.truncate(k);
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("differential serializes")
    }
}

const SCORE_GRID: f64 = 1e12;

pub(crate) fn quantize_score(x: f64) -> f64 {
    (x * SCORE_GRID).round() / SCORE_GRID + 0.0
}

/// Rounds to nine significant digits and clears negative zero.
pub fn round_sig9(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return if x == 0.0 { 0.0 } else { x };
    }
    let r: f64 = format!("{x:.8e}").parse().expect("formatted float parses");
    r + 0.0
}

/// Serde helper applying [`round_sig9`].
pub fn sig9<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(round_sig9(*x))
}

fn effective_status(obs: &ObservationVector, feature: &str, mode: AbsentMode) -> FindingStatus {
    match (mode, obs.status(feature)) {
        (_, FindingStatus::Present) => FindingStatus::Present,
        (AbsentMode::Binary, _) => FindingStatus::Absent,
        (AbsentMode::TriState, s) => s,
    }
}

fn score_at(
    codex: &Codex,
    hypothesis: usize,
    obs: &ObservationVector,
    matrix: &EvokingMatrix,
    policy: &ScoringPolicy,
) -> (f64, Vec<Contribution>) {
    let row = matrix.row(hypothesis);
    let mut contributions = Vec::new();

    for (feature, &w) in row {
        if effective_status(obs, feature, policy.absent_mode) == FindingStatus::Present {
            contributions.push(Contribution { feature: feature.clone(), term: Term::Support, delta: w });
        }
    }
    if matrix.missing_factor > 0.0 {
        for (feature, &w) in row {
            if effective_status(obs, feature, policy.absent_mode) == FindingStatus::Absent {
                contributions.push(Contribution {
                    feature: feature.clone(),
                    term: Term::Missing,
                    delta: -matrix.missing_factor * w,
                });
            }
        }
    }
    if matrix.unexpected_penalty > 0.0 {
        for (feature, status) in obs.known() {
            if status == FindingStatus::Present && !row.contains_key(feature) {
                debug_assert!(codex.feature_position(feature).is_some());
                contributions.push(Contribution {
                    feature: feature.to_string(),
                    term: Term::Unexpected,
                    delta: -matrix.unexpected_penalty,
                });
            }
        }
    }

    let raw = quantize_score(contributions.iter().map(|c| c.delta).sum());
    (raw, contributions)
}

/// Raw score and contribution trace for one hypothesis.
pub fn score_hypothesis(
    codex: &Codex,
    hypothesis: &str,
    obs: &ObservationVector,
    matrix: &EvokingMatrix,
    policy: &ScoringPolicy,
) -> Result<(f64, Vec<Contribution>), ReasoningError> {
    let hi = codex
        .hypothesis_position(hypothesis)
        .ok_or_else(|| ReasoningError::UnknownHypothesis(hypothesis.to_string()))?;
    check_version(codex, obs)?;
    policy.check(matrix)?;
    Ok(score_at(codex, hi, obs, matrix, policy))
}

pub(crate) fn check_version(codex: &Codex, obs: &ObservationVector) -> Result<(), ReasoningError> {
    if obs.codex_version() != codex.version() {
        return Err(ReasoningError::VersionMismatch {
            observation: obs.codex_version().to_string(),
            codex: codex.version().to_string(),
        });
    }
    Ok(())
}

/// Score descending, then hypothesis id ascending.
pub(crate) fn rank_order(a: (&str, f64), b: (&str, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0))
}

pub fn rank_differential(
    codex: &Codex,
    obs: &ObservationVector,
    matrix: &EvokingMatrix,
    policy: &ScoringPolicy,
) -> Result<Differential, ReasoningError> {
    check_version(codex, obs)?;
    policy.check(matrix)?;
    let mut entries: Vec<DifferentialEntry> = codex
        .hypotheses()
        .iter()
        .enumerate()
        .map(|(hi, h)| {
            let (raw_score, contributions) = score_at(codex, hi, obs, matrix, policy);
            DifferentialEntry { hypothesis: h.id.clone(), raw_score, confidence: 0.0, contributions }
        })
        .collect();
    entries.sort_by(|a, b| rank_order((&a.hypothesis, a.raw_score), (&b.hypothesis, b.raw_score)));
    let raw: Vec<f64> = entries.iter().map(|e| e.raw_score).collect();
    for (e, c) in entries.iter_mut().zip(confidence_normalize(&raw)?) {
        e.confidence = c;
    }
    Ok(Differential { codex_version: codex.version().to_string(), policy: RankingMethod::Evoking(*policy), entries })
}

/// Min-max scaling to [0, 1]; all ties map to 1/n.
pub fn confidence_normalize(scores: &[f64]) -> Result<Vec<f64>, ReasoningError> {
    if scores.is_empty() {
        return Err(ReasoningError::EmptyScores);
    }
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
    if max > min {
        Ok(scores.iter().map(|s| (s - min) / (max - min)).collect())
    } else {
        Ok(vec![1.0 / scores.len() as f64; scores.len()])
    }
}
