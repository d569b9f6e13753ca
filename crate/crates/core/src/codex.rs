//! The curated knowledge base: features, hypotheses and the binary incidence
//! relation between them, plus the evoking weights derived from it.
//!
//! A [`CodexDocument`] is the raw interchange form. [`Codex::from_document`]
//! validates it and builds the lookup indices; a [`Codex`] is never mutated
//! afterwards.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::CodexError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Feature {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub synonyms: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hypothesis {
    pub id: String,
    pub name: String,
    #[serde(rename = "features")]
    pub feature_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvokingOverride {
    pub hypothesis: String,
    pub feature: String,
    pub support: f64,
}

/// Codex file contents, before validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodexDocument {
    #[serde(rename = "codex_version")]
    pub version: String,
    pub domain_label: String,
    pub features: Vec<Feature>,
    pub hypotheses: Vec<Hypothesis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evoking_overrides: Option<Vec<EvokingOverride>>,
}

/// One broken invariant, located by the id it concerns.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Violation {
    pub rule: &'static str,
    pub location: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}: {}", self.rule, self.location, self.message)
    }
}

pub mod rule {
    pub const DUPLICATE_ID: &str = "duplicate id";
    pub const DUPLICATE_OVERRIDE: &str = "duplicate override";
    pub const DUPLICATE_REFERENCE: &str = "duplicate feature reference";
    pub const DUPLICATE_SYNONYM: &str = "duplicate synonym";
    pub const EMPTY_FEATURE_SET: &str = "empty feature set";
    pub const EMPTY_NAME: &str = "empty name";
    pub const INVALID_ID: &str = "invalid id";
    pub const NO_FEATURES: &str = "no features";
    pub const NO_HYPOTHESES: &str = "no hypotheses";
    pub const OVERRIDE_OFF_INCIDENCE: &str = "override off incidence";
    pub const OVERRIDE_OUT_OF_RANGE: &str = "override out of range";
    pub const UNRESOLVED_FEATURE: &str = "unresolved feature reference";
}

/// Violations sorted by rule name, then location.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return writeln!(f, "OK");
        }
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

pub fn is_valid_id(id: &str) -> bool {
    !id.is_empty()
        && id.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || matches!(b, b'.' | b'_' | b'-'))
}

pub fn validate_codex(doc: &CodexDocument) -> ValidationReport {
    let mut out = Vec::new();
    let mut push = |rule: &'static str, location: &str, message: String| {
        out.push(Violation { rule, location: location.to_string(), message });
    };

    if doc.features.is_empty() {
        push(rule::NO_FEATURES, "codex", "codex declares no features".into());
    }
    if doc.hypotheses.is_empty() {
        push(rule::NO_HYPOTHESES, "codex", "codex declares no hypotheses".into());
    }

    let mut feature_ids = HashMap::new();
    for f in &doc.features {
        if !is_valid_id(&f.id) {
            push(rule::INVALID_ID, &f.id, "feature id must match ^[a-z0-9._-]+$".into());
        }
        if feature_ids.insert(f.id.as_str(), ()).is_some() {
            push(rule::DUPLICATE_ID, &f.id, "feature id declared more than once".into());
        }
        if f.name.trim().is_empty() {
            push(rule::EMPTY_NAME, &f.id, "feature name is empty".into());
        }
        let mut seen = BTreeSet::new();
        for s in &f.synonyms {
            if !seen.insert(s.to_lowercase()) {
                push(rule::DUPLICATE_SYNONYM, &f.id, format!("synonym `{s}` repeated"));
            }
        }
    }

    let mut hypothesis_sets: HashMap<&str, BTreeSet<&str>> = HashMap::new();
    for h in &doc.hypotheses {
        if !is_valid_id(&h.id) {
            push(rule::INVALID_ID, &h.id, "hypothesis id must match ^[a-z0-9._-]+$".into());
        }
        if hypothesis_sets.contains_key(h.id.as_str()) {
            push(rule::DUPLICATE_ID, &h.id, "hypothesis id declared more than once".into());
        }
        if h.name.trim().is_empty() {
            push(rule::EMPTY_NAME, &h.id, "hypothesis name is empty".into());
        }
        if h.feature_ids.is_empty() {
            push(rule::EMPTY_FEATURE_SET, &h.id, "hypothesis lists no features".into());
        }
        let mut set = BTreeSet::new();
        for fid in &h.feature_ids {
            if !feature_ids.contains_key(fid.as_str()) {
                push(rule::UNRESOLVED_FEATURE, &h.id, format!("feature `{fid}` is not declared"));
            }
            if !set.insert(fid.as_str()) {
                push(rule::DUPLICATE_REFERENCE, &h.id, format!("feature `{fid}` listed twice"));
            }
        }
        hypothesis_sets.entry(h.id.as_str()).or_insert(set);
    }

    let mut seen_pairs = BTreeSet::new();
    for o in doc.evoking_overrides.iter().flatten() {
        let location = format!("{}/{}", o.hypothesis, o.feature);
        let on_incidence =
            hypothesis_sets.get(o.hypothesis.as_str()).is_some_and(|set| set.contains(o.feature.as_str()));
        if !on_incidence {
            push(
                rule::OVERRIDE_OFF_INCIDENCE,
                &location,
                "override targets a pair outside the incidence relation".into(),
            );
        }
        if !(o.support > 0.0 && o.support <= 1.0) {
            push(rule::OVERRIDE_OUT_OF_RANGE, &location, format!("support {} not in (0, 1]", o.support));
        }
        if !seen_pairs.insert((o.hypothesis.as_str(), o.feature.as_str())) {
            push(rule::DUPLICATE_OVERRIDE, &location, "pair overridden more than once".into());
        }
    }

    out.sort_by(|a, b| (a.rule, &a.location).cmp(&(b.rule, &b.location)));
    ValidationReport { violations: out }
}

/// A validated, indexed codex.
#[derive(Debug, Clone)]
pub struct Codex {
    doc: CodexDocument,
    feature_index: HashMap<String, usize>,
    hypothesis_index: HashMap<String, usize>,
    /// Feature indices per hypothesis, ascending (declaration order).
    incidence: Vec<Vec<usize>>,
}

impl PartialEq for Codex {
    fn eq(&self, other: &Self) -> bool {
        self.doc == other.doc
    }
}

impl Codex {
    pub fn from_document(doc: CodexDocument) -> Result<Self, CodexError> {
        let report = validate_codex(&doc);
        if !report.is_valid() {
            return Err(CodexError::Invalid(report.violations));
        }
        let feature_index: HashMap<_, _> = doc.features.iter().enumerate().map(|(i, f)| (f.id.clone(), i)).collect();
        let hypothesis_index = doc.hypotheses.iter().enumerate().map(|(i, h)| (h.id.clone(), i)).collect();
        let incidence = doc
            .hypotheses
            .iter()
            .map(|h| {
                let mut idx: Vec<usize> = h.feature_ids.iter().map(|f| feature_index[f]).collect();
                idx.sort_unstable();
                idx
            })
            .collect();
        Ok(Codex { doc, feature_index, hypothesis_index, incidence })
    }

    pub fn from_json(text: &str) -> Result<Self, CodexError> {
        Self::from_document(serde_json::from_str(text)?)
    }

    pub fn document(&self) -> &CodexDocument {
        &self.doc
    }

    pub fn version(&self) -> &str {
        &self.doc.version
    }

    pub fn domain_label(&self) -> &str {
        &self.doc.domain_label
    }

    pub fn features(&self) -> &[Feature] {
        &self.doc.features
    }

    pub fn hypotheses(&self) -> &[Hypothesis] {
        &self.doc.hypotheses
    }

    pub fn overrides(&self) -> &[EvokingOverride] {
        self.doc.evoking_overrides.as_deref().unwrap_or(&[])
    }

    /// m, the number of features.
    pub fn feature_count(&self) -> usize {
        self.doc.features.len()
    }

    /// n, the number of hypotheses.
    pub fn hypothesis_count(&self) -> usize {
        self.doc.hypotheses.len()
    }

    pub fn feature_position(&self, id: &str) -> Option<usize> {
        self.feature_index.get(id).copied()
    }

    pub fn hypothesis_position(&self, id: &str) -> Option<usize> {
        self.hypothesis_index.get(id).copied()
    }

    pub fn feature(&self, id: &str) -> Option<&Feature> {
        self.feature_position(id).map(|i| &self.doc.features[i])
    }

    pub fn hypothesis(&self, id: &str) -> Option<&Hypothesis> {
        self.hypothesis_position(id).map(|i| &self.doc.hypotheses[i])
    }

    pub(crate) fn incidence_positions(&self, hypothesis: usize) -> &[usize] {
        &self.incidence[hypothesis]
    }

    /// C(h) as a set of feature ids.
    pub fn feature_set(&self, hypothesis: &str) -> Result<BTreeSet<&str>, CodexError> {
        let i = self
            .hypothesis_position(hypothesis)
            .ok_or_else(|| CodexError::UnknownHypothesis(hypothesis.to_string()))?;
        Ok(self.incidence[i].iter().map(|&f| self.doc.features[f].id.as_str()).collect())
    }

    /// c(h) in feature declaration order.
    pub fn incidence_vector(&self, hypothesis: &str) -> Result<Vec<u8>, CodexError> {
        let i = self
            .hypothesis_position(hypothesis)
            .ok_or_else(|| CodexError::UnknownHypothesis(hypothesis.to_string()))?;
        let mut v = vec![0u8; self.feature_count()];
        for &f in &self.incidence[i] {
            v[f] = 1;
        }
        Ok(v)
    }

    pub fn contains(&self, hypothesis: usize, feature: usize) -> bool {
        self.incidence[hypothesis].binary_search(&feature).is_ok()
    }

    /// Number of hypotheses whose signature includes the feature.
    pub fn document_frequency(&self, feature: usize) -> usize {
        self.incidence.iter().filter(|set| set.binary_search(&feature).is_ok()).count()
    }

    /// Canonical serialization: declared key order, 2-space indent.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string_pretty(&self.doc).expect("codex document serializes")
    }
}

pub fn load_codex<R: Read>(mut source: R) -> Result<Codex, CodexError> {
    let mut text = String::new();
    source.read_to_string(&mut text).map_err(|e| CodexError::Parse(serde_json::Error::io(e)))?;
    Codex::from_json(&text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    Uniform,
    Idf,
}

impl Weighting {
    pub fn name(self) -> &'static str {
        match self {
            Weighting::Uniform => "uniform",
            Weighting::Idf => "idf",
        }
    }
}

impl FromStr for Weighting {
    type Err = CodexError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(Weighting::Uniform),
            "idf" => Ok(Weighting::Idf),
            other => Err(CodexError::UnknownPolicy(other.to_string())),
        }
    }
}

impl fmt::Display for Weighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Disease-conditioned evoking weights.
///
/// `support(h, f)` is defined exactly on the incidence pairs and each
/// hypothesis row sums to one. Rows are keyed by feature id so every
/// summation runs in id order, independent of declaration order.
#[derive(Debug, Clone, PartialEq)]
pub struct EvokingMatrix {
    rows: Vec<BTreeMap<String, f64>>,
    hypothesis_ids: Vec<String>,
    pub missing_factor: f64,
    pub unexpected_penalty: f64,
    pub policy_name: String,
}

impl EvokingMatrix {
    pub fn support(&self, hypothesis: &str, feature: &str) -> Option<f64> {
        let i = self.hypothesis_ids.iter().position(|h| h == hypothesis)?;
        self.rows[i].get(feature).copied()
    }

    /// Support row by hypothesis position, keyed by feature id.
    pub fn row(&self, hypothesis: usize) -> &BTreeMap<String, f64> {
        &self.rows[hypothesis]
    }

    pub fn row_sum(&self, hypothesis: usize) -> f64 {
        self.rows[hypothesis].values().sum()
    }
}

pub fn derive_evoking_matrix(
    codex: &Codex,
    weighting: Weighting,
    missing_factor: f64,
    unexpected_penalty: f64,
) -> Result<EvokingMatrix, CodexError> {
    if !(0.0..=1.0).contains(&missing_factor) {
        return Err(CodexError::InvalidParameter(format!("alpha {missing_factor} not in [0, 1]")));
    }
    if !(unexpected_penalty >= 0.0 && unexpected_penalty.is_finite()) {
        return Err(CodexError::InvalidParameter(format!("beta {unexpected_penalty} must be >= 0")));
    }

    let n = codex.hypothesis_count() as f64;
    let idf: Vec<f64> = (0..codex.feature_count())
        .map(|f| {
            let df = codex.document_frequency(f);
            if df == 0 {
                0.0
            } else {
                (n / df as f64).ln() + 1.0
            }
        })
        .collect();

    let mut rows = Vec::with_capacity(codex.hypothesis_count());
    for (hi, _) in codex.hypotheses().iter().enumerate() {
        let mut row: BTreeMap<String, f64> = codex
            .incidence_positions(hi)
            .iter()
            .map(|&f| {
                let raw = match weighting {
                    Weighting::Uniform => 1.0,
                    Weighting::Idf => idf[f],
                };
                (codex.features()[f].id.clone(), raw)
            })
            .collect();
        normalize_row(&mut row);
        rows.push(row);
    }

    let mut touched = BTreeSet::new();
    for o in codex.overrides() {
        let hi = codex.hypothesis_position(&o.hypothesis).expect("validated override");
        *rows[hi].get_mut(&o.feature).expect("validated override") = o.support;
        touched.insert(hi);
    }
    for hi in touched {
        normalize_row(&mut rows[hi]);
    }

    Ok(EvokingMatrix {
        rows,
        hypothesis_ids: codex.hypotheses().iter().map(|h| h.id.clone()).collect(),
        missing_factor,
        unexpected_penalty,
        policy_name: weighting.name().to_string(),
    })
}

fn normalize_row(row: &mut BTreeMap<String, f64>) {
    let total: f64 = row.values().sum();
    for w in row.values_mut() {
        *w /= total;
    }
}
