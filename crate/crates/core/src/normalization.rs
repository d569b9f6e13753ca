//! Mentions to codex features: exact name/synonym lookup, then nearest
//! feature by cosine similarity in a shared embedding space.
//!
//! Only feature definitions are consulted here; the outcome type has no way
//! to name a hypothesis.

use std::collections::BTreeMap;
use std::io::Read;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::codex::Codex;
use crate::error::NormalizationError;
use crate::extraction::Mention;

pub const DEFAULT_MATCH_THRESHOLD: f64 = 0.80;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct VectorFile {
    dim: usize,
    vectors: BTreeMap<String, Vec<f64>>,
}

fn read_vector_file<R: Read>(mut source: R) -> Result<VectorFile, NormalizationError> {
    let mut text = String::new();
    source.read_to_string(&mut text).map_err(|e| NormalizationError::Parse(serde_json::Error::io(e)))?;
    let file: VectorFile = serde_json::from_str(&text)?;
    if file.dim == 0 {
        return Err(NormalizationError::DimensionMismatch { expected: 1, actual: 0 });
    }
    for (key, v) in &file.vectors {
        if v.len() != file.dim {
            return Err(NormalizationError::DimensionMismatch { expected: file.dim, actual: v.len() });
        }
        if v.iter().all(|x| *x == 0.0) {
            return Err(NormalizationError::ZeroVector(Some(key.clone())));
        }
    }
    Ok(file)
}

/// One point embedding per codex feature.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    vectors: BTreeMap<String, Vec<f64>>,
}

impl EmbeddingStore {
    pub fn new(dim: usize, vectors: BTreeMap<String, Vec<f64>>, codex: &Codex) -> Result<Self, NormalizationError> {
        for (id, v) in &vectors {
            if codex.feature_position(id).is_none() {
                return Err(NormalizationError::UnknownVector(id.clone()));
            }
            if v.len() != dim {
                return Err(NormalizationError::DimensionMismatch { expected: dim, actual: v.len() });
            }
            if v.iter().all(|x| *x == 0.0) {
                return Err(NormalizationError::ZeroVector(Some(id.clone())));
            }
        }
        if let Some(f) = codex.features().iter().find(|f| !vectors.contains_key(&f.id)) {
            return Err(NormalizationError::MissingVector(f.id.clone()));
        }
        Ok(EmbeddingStore { dim, vectors })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vector(&self, feature: &str) -> Option<&[f64]> {
        self.vectors.get(feature).map(Vec::as_slice)
    }
}

pub fn load_embeddings<R: Read>(source: R, codex: &Codex) -> Result<EmbeddingStore, NormalizationError> {
    let file = read_vector_file(source)?;
    EmbeddingStore::new(file.dim, file.vectors, codex)
}

pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64, NormalizationError> {
    if u.len() != v.len() {
        return Err(NormalizationError::DimensionMismatch { expected: u.len(), actual: v.len() });
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(NormalizationError::ZeroVector(None));
    }
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

pub trait EmbeddingProvider {
    fn embed(&self, surface: &str) -> Result<Vec<f64>, NormalizationError>;
}

/// Surface string to vector lookup table.
#[derive(Debug, Clone, Default)]
pub struct TableProvider {
    dim: usize,
    vectors: BTreeMap<String, Vec<f64>>,
}

impl TableProvider {
    pub fn load<R: Read>(source: R) -> Result<Self, NormalizationError> {
        let file = read_vector_file(source)?;
        Ok(TableProvider { dim: file.dim, vectors: file.vectors })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

impl EmbeddingProvider for TableProvider {
    fn embed(&self, surface: &str) -> Result<Vec<f64>, NormalizationError> {
        self.vectors.get(surface).cloned().ok_or_else(|| NormalizationError::Unembeddable(surface.to_string()))
    }
}

/// Remote embedder: POST {"text"} and expect {"vector": [..]}.
#[derive(Debug, Clone)]
pub struct HttpProvider {
    pub endpoint: String,
    pub timeout: Duration,
}

impl EmbeddingProvider for HttpProvider {
    fn embed(&self, surface: &str) -> Result<Vec<f64>, NormalizationError> {
        #[derive(Deserialize)]
        struct Reply {
            vector: Vec<f64>,
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(self.timeout)
            .build()
            .map_err(|e| NormalizationError::Provider(e.to_string()))?;
        let classify = |e: reqwest::Error| {
            if e.is_timeout() {
                NormalizationError::Timeout
            } else {
                NormalizationError::Provider(e.to_string())
            }
        };
        let body = client
            .post(&self.endpoint)
            .json(&serde_json::json!({ "text": surface }))
            .send()
            .and_then(|r| r.error_for_status())
            .and_then(|r| r.text())
            .map_err(classify)?;
        let reply: Reply = serde_json::from_str(&body)?;
        Ok(reply.vector)
    }
}

pub fn embed_mention(mention: &Mention, provider: &dyn EmbeddingProvider) -> Result<Vec<f64>, NormalizationError> {
    provider.embed(&mention.surface)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMethod {
    Exact,
    Embedding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum MatchResult {
    Matched {
        feature: String,
        score: f64,
        method: MatchMethod,
    },
    /// `best_score` is absent when no embedding route was available.
    Unmatched {
        best_score: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchOutcome {
    pub mention: Mention,
    pub result: MatchResult,
}

impl MatchOutcome {
    pub fn feature(&self) -> Option<&str> {
        match &self.result {
            MatchResult::Matched { feature, .. } => Some(feature),
            MatchResult::Unmatched { .. } => None,
        }
    }
}

/// Case-insensitive name/synonym lookup; the smallest feature id wins if
/// several features share a term.
pub fn exact_match<'a>(surface: &str, codex: &'a Codex) -> Option<&'a str> {
    let needle = surface.trim().to_lowercase();
    codex
        .features()
        .iter()
        .filter(|f| {
            f.name.trim().to_lowercase() == needle || f.synonyms.iter().any(|s| s.trim().to_lowercase() == needle)
        })
        .map(|f| f.id.as_str())
        .min()
}

fn check_threshold(threshold: f64) -> Result<(), NormalizationError> {
    if threshold > 0.0 && threshold <= 1.0 {
        Ok(())
    } else {
        Err(NormalizationError::BadThreshold(threshold))
    }
}

pub fn match_mention(
    mention: &Mention,
    store: &EmbeddingStore,
    codex: &Codex,
    provider: &dyn EmbeddingProvider,
    threshold: f64,
) -> Result<MatchOutcome, NormalizationError> {
    check_threshold(threshold)?;
    if let Some(feature) = exact_match(&mention.surface, codex) {
        return Ok(MatchOutcome {
            mention: mention.clone(),
            result: MatchResult::Matched { feature: feature.to_string(), score: 1.0, method: MatchMethod::Exact },
        });
    }
    let query = embed_mention(mention, provider)?;
    let (feature, best) = nearest_feature(&query, store, codex)?;
    let result = if best >= threshold {
        MatchResult::Matched { feature: feature.to_string(), score: best, method: MatchMethod::Embedding }
    } else {
        MatchResult::Unmatched { best_score: Some(best) }
    };
    Ok(MatchOutcome { mention: mention.clone(), result })
}

/// Exact lookup only, for deployments without an embedding provider.
pub fn match_mention_exact(mention: &Mention, codex: &Codex) -> MatchOutcome {
    let result = match exact_match(&mention.surface, codex) {
        Some(f) => MatchResult::Matched { feature: f.to_string(), score: 1.0, method: MatchMethod::Exact },
        None => MatchResult::Unmatched { best_score: None },
    };
    MatchOutcome { mention: mention.clone(), result }
}

/// Highest cosine similarity; ties go to the smallest feature id.
fn nearest_feature<'a>(
    query: &[f64],
    store: &EmbeddingStore,
    codex: &'a Codex,
) -> Result<(&'a str, f64), NormalizationError> {
    if query.len() != store.dim {
        return Err(NormalizationError::DimensionMismatch { expected: store.dim, actual: query.len() });
    }
    let mut best: Option<(&str, f64)> = None;
    for f in codex.features() {
        let v = store.vector(&f.id).ok_or_else(|| NormalizationError::MissingVector(f.id.clone()))?;
        let s = cosine_similarity(query, v)?;
        best = match best {
            Some((id, b)) if b > s || (b == s && id.as_bytes() <= f.id.as_bytes()) => Some((id, b)),
            _ => Some((f.id.as_str(), s)),
        };
    }
    Ok(best.expect("codex has at least one feature"))
}
