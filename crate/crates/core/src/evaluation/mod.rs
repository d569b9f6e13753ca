//! Case corpora, Top-k inclusion with exact binomial intervals, and
//! evaluation reports.

mod interval;
mod synth;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::codex::{Codex, EvokingMatrix};
use crate::error::{EvaluationError, ReasoningError};
use crate::observation::{Finding, ObservationVector};
use crate::reasoning::{nb_rank, rank_differential, sig9, Differential, Priors, RankingMethod, ScoringPolicy};

pub use interval::{clopper_pearson, percent};
pub use synth::{synth_corpus, SynthParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Case {
    pub id: String,
    pub findings: Vec<Finding>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    /// Acceptable reference hypotheses; the best-ranked one counts.
    pub reference: Vec<String>,
}

impl Case {
    pub fn observation(&self, codex: &Codex) -> Result<ObservationVector, EvaluationError> {
        ObservationVector::from_findings(codex, &self.findings)
            .map_err(|e| EvaluationError::InvalidCase { case: self.id.clone(), message: e.to_string() })
    }
}

fn validate_case(case: &Case, codex: &Codex) -> Result<(), EvaluationError> {
    let fail = |message: String| Err(EvaluationError::InvalidCase { case: case.id.clone(), message });
    if case.reference.is_empty() {
        return fail("reference list is empty".into());
    }
    if let Some(h) = case.reference.iter().find(|h| codex.hypothesis_position(h).is_none()) {
        return fail(format!("unknown reference hypothesis `{h}`"));
    }
    let mut seen = BTreeSet::new();
    for f in &case.findings {
        if codex.feature_position(&f.feature).is_none() {
            return fail(format!("unknown feature `{}`", f.feature));
        }
        if !seen.insert(f.feature.as_str()) {
            return fail(format!("feature `{}` listed twice", f.feature));
        }
    }
    Ok(())
}

pub fn parse_corpus(text: &str, codex: &Codex) -> Result<Vec<Case>, EvaluationError> {
    let cases: Vec<Case> = serde_json::from_str(text)?;
    let mut ids = BTreeSet::new();
    for case in &cases {
        if !ids.insert(case.id.as_str()) {
            return Err(EvaluationError::InvalidCase { case: case.id.clone(), message: "duplicate case id".into() });
        }
        validate_case(case, codex)?;
    }
    Ok(cases)
}

pub fn load_corpus<R: Read>(mut source: R, codex: &Codex) -> Result<Vec<Case>, EvaluationError> {
    let mut text = String::new();
    source.read_to_string(&mut text).map_err(|e| EvaluationError::Parse(serde_json::Error::io(e)))?;
    parse_corpus(&text, codex)
}

/// 1-based rank of the best-ranked reference hypothesis.
pub fn rank_position(differential: &Differential, reference: &[String]) -> Option<usize> {
    reference.iter().filter_map(|h| differential.position(h)).min()
}

/// Count and share of ranks within `k`; `None` ranks never count.
pub fn top_k_inclusion(ranks: &[Option<usize>], k: usize) -> Result<(usize, f64), EvaluationError> {
    if ranks.is_empty() {
        return Err(EvaluationError::EmptyRanks);
    }
    if k == 0 {
        return Err(EvaluationError::ZeroK);
    }
    let count = ranks.iter().filter(|r| r.is_some_and(|r| r <= k)).count();
    Ok((count, count as f64 / ranks.len() as f64))
}

#[derive(Debug, Clone)]
pub enum Ranker {
    Evoking { matrix: EvokingMatrix, policy: ScoringPolicy },
    NaiveBayes { epsilon: f64, priors: Priors },
}

impl Ranker {
    pub fn evoking(codex: &Codex, policy: ScoringPolicy) -> Result<Self, EvaluationError> {
        Ok(Ranker::Evoking { matrix: policy.evoking_matrix(codex)?, policy })
    }

    pub fn rank(&self, codex: &Codex, obs: &ObservationVector) -> Result<Differential, ReasoningError> {
        match self {
            Ranker::Evoking { matrix, policy } => rank_differential(codex, obs, matrix, policy),
            Ranker::NaiveBayes { epsilon, priors } => nb_rank(codex, obs, *epsilon, priors),
        }
    }

    pub fn method(&self) -> RankingMethod {
        match self {
            Ranker::Evoking { policy, .. } => RankingMethod::Evoking(*policy),
            Ranker::NaiveBayes { epsilon, .. } => RankingMethod::NaiveBayes { epsilon: *epsilon },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRank {
    pub case: String,
    pub rank: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopK {
    pub count: usize,
    #[serde(serialize_with = "sig9")]
    pub proportion: f64,
    #[serde(serialize_with = "sig9")]
    pub ci_low: f64,
    #[serde(serialize_with = "sig9")]
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationConfig {
    /// Absent when the report was built from a bare rank list.
    pub ranker: Option<RankingMethod>,
    pub ks: Vec<usize>,
    #[serde(serialize_with = "sig9")]
    pub level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub n_cases: usize,
    pub per_case: Vec<CaseRank>,
    pub topk: BTreeMap<usize, TopK>,
    pub config: EvaluationConfig,
}

impl EvaluationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Human-readable summary, one row per k.
    pub fn table(&self) -> String {
        let level = percent(self.config.level);
        let mut out = format!("{:<8}{:>9}{:>8}   {level}% CI\n", "", "count", "share");
        for (k, row) in &self.topk {
            let _ = writeln!(
                out,
                "{:<8}{:>9}{:>7}%   [{}, {}]",
                format!("Top-{k}"),
                format!("{}/{}", row.count, self.n_cases),
                percent(row.proportion),
                percent(row.ci_low),
                percent(row.ci_high)
            );
        }
        out
    }
}

fn check_ks(ks: &[usize]) -> Result<Vec<usize>, EvaluationError> {
    if ks.is_empty() || ks.contains(&0) {
        return Err(EvaluationError::ZeroK);
    }
    let mut ks = ks.to_vec();
    ks.sort_unstable();
    ks.dedup();
    Ok(ks)
}

/// Aggregates an already-ranked list of cases.
pub fn evaluate_ranks(
    per_case: Vec<CaseRank>,
    ks: &[usize],
    level: f64,
    ranker: Option<RankingMethod>,
) -> Result<EvaluationReport, EvaluationError> {
    if per_case.is_empty() {
        return Err(EvaluationError::EmptyCorpus);
    }
    let ks = check_ks(ks)?;
    let ranks: Vec<Option<usize>> = per_case.iter().map(|c| c.rank).collect();
    let n = ranks.len();
    let mut topk = BTreeMap::new();
    for &k in &ks {
        let (count, proportion) = top_k_inclusion(&ranks, k)?;
        let (ci_low, ci_high) = clopper_pearson(count as u64, n as u64, level)?;
        topk.insert(k, TopK { count, proportion, ci_low, ci_high });
    }
    Ok(EvaluationReport { n_cases: n, per_case, topk, config: EvaluationConfig { ranker, ks, level } })
}

/// Ranks every case and aggregates Top-k inclusion for each k.
pub fn run_evaluation(
    codex: &Codex,
    corpus: &[Case],
    ranker: &Ranker,
    ks: &[usize],
    level: f64,
) -> Result<EvaluationReport, EvaluationError> {
    if corpus.is_empty() {
        return Err(EvaluationError::EmptyCorpus);
    }
    check_ks(ks)?;
    let per_case = corpus
        .iter()
        .map(|case| {
            validate_case(case, codex)?;
            let d = ranker.rank(codex, &case.observation(codex)?)?;
            Ok(CaseRank { case: case.id.clone(), rank: rank_position(&d, &case.reference) })
        })
        .collect::<Result<Vec<_>, EvaluationError>>()?;
    evaluate_ranks(per_case, ks, level, Some(ranker.method()))
}
