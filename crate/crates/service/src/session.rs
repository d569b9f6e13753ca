//! In-memory case sessions over one loaded codex.
//!
//! Sessions live behind their own mutex, so mutations within a session are
//! serialized while different sessions proceed independently. Only
//! [`SessionService::post_finding`] changes session state.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use abductor_core::codex::{Feature, Hypothesis};
use abductor_core::error::{NormalizationError, ObservationError};
use abductor_core::extraction::{extract_mentions, fetch_external_mentions, ExtractorMode};
use abductor_core::normalization::{match_mention, match_mention_exact, EmbeddingProvider, MatchResult};
use abductor_core::reasoning::{render_entry, sig9, Contribution};
use abductor_core::{
    rank_differential, Codex, Differential, EmbeddingStore, EvokingMatrix, ExtractorConfig, Finding, FindingStatus,
    Mention, ObservationVector, Polarity, ScoringPolicy,
};
use serde::{Deserialize, Serialize};

use crate::error::ServiceError;

pub struct Engine {
    pub codex: Codex,
    pub policy: ScoringPolicy,
    pub matrix: EvokingMatrix,
    pub extractor: ExtractorConfig,
    pub embeddings: Option<EmbeddingStore>,
    pub provider: Option<Box<dyn EmbeddingProvider + Send + Sync>>,
    pub match_threshold: f64,
}

impl Engine {
    pub fn new(codex: Codex, policy: ScoringPolicy) -> Result<Self, abductor_core::error::CodexError> {
        let matrix = policy.evoking_matrix(&codex)?;
        Ok(Engine {
            codex,
            policy,
            matrix,
            extractor: ExtractorConfig::default(),
            embeddings: None,
            provider: None,
            match_threshold: abductor_core::normalization::DEFAULT_MATCH_THRESHOLD,
        })
    }

    pub fn rank(&self, obs: &ObservationVector) -> Differential {
        rank_differential(&self.codex, obs, &self.matrix, &self.policy).expect("session observation matches codex")
    }
}

#[derive(Debug, Clone)]
pub struct Session {
    pub id: String,
    pub obs: ObservationVector,
    pub created_at: u64,
}

#[derive(Serialize, Deserialize)]
struct SessionSnapshot {
    id: String,
    created_at: u64,
    codex_version: String,
    findings: Vec<Finding>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Explanation {
    pub hypothesis: String,
    pub rank: usize,
    #[serde(serialize_with = "sig9")]
    pub raw_score: f64,
    #[serde(serialize_with = "sig9")]
    pub confidence: f64,
    pub contributions: Vec<Contribution>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Proposal {
    pub mention: Mention,
    pub result: MatchResult,
    pub suggested_status: FindingStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CodexInfo {
    pub codex_version: String,
    pub domain_label: String,
    pub n: usize,
    pub m: usize,
    pub features: Vec<Feature>,
    pub hypotheses: Vec<Hypothesis>,
}

pub struct SessionService {
    engine: Engine,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
    snapshot: Option<PathBuf>,
    persist_lock: Mutex<()>,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

impl SessionService {
    pub fn new(engine: Engine) -> Self {
        SessionService { engine, sessions: RwLock::new(HashMap::new()), snapshot: None, persist_lock: Mutex::new(()) }
    }

    /// Persists sessions to `path` (one JSON object per line) after every
    /// change, restoring any sessions already stored there.
    pub fn with_snapshot(mut self, path: PathBuf) -> Result<Self, ServiceError> {
        if path.exists() {
            let text = fs::read_to_string(&path).map_err(|e| ServiceError::Snapshot(e.to_string()))?;
            let mut sessions = self.sessions.write().unwrap();
            for line in text.lines().filter(|l| !l.trim().is_empty()) {
                let snap: SessionSnapshot =
                    serde_json::from_str(line).map_err(|e| ServiceError::Snapshot(e.to_string()))?;
                if snap.codex_version != self.engine.codex.version() {
                    return Err(ServiceError::Snapshot(format!(
                        "session {} was recorded against codex {}",
                        snap.id, snap.codex_version
                    )));
                }
                let obs = ObservationVector::from_findings(&self.engine.codex, &snap.findings)
                    .map_err(|e| ServiceError::Snapshot(e.to_string()))?;
                let session = Session { id: snap.id.clone(), obs, created_at: snap.created_at };
                sessions.insert(snap.id, Arc::new(Mutex::new(session)));
            }
        }
        self.snapshot = Some(path);
        Ok(self)
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ServiceError> {
        self.sessions.read().unwrap().get(id).cloned().ok_or_else(|| ServiceError::SessionNotFound(id.to_string()))
    }

    fn persist(&self) -> Result<(), ServiceError> {
        let Some(path) = &self.snapshot else { return Ok(()) };
        let _guard = self.persist_lock.lock().unwrap();
        let handles: Vec<_> = self.sessions.read().unwrap().values().cloned().collect();
        let mut snaps: Vec<SessionSnapshot> = handles
            .iter()
            .map(|h| {
                let s = h.lock().unwrap();
                SessionSnapshot {
                    id: s.id.clone(),
                    created_at: s.created_at,
                    codex_version: s.obs.codex_version().to_string(),
                    findings: s.obs.findings(),
                }
            })
            .collect();
        snaps.sort_by(|a, b| a.id.cmp(&b.id));
        let tmp = path.with_extension("tmp");
        let mut file = fs::File::create(&tmp).map_err(|e| ServiceError::Snapshot(e.to_string()))?;
        for s in &snaps {
            writeln!(file, "{}", serde_json::to_string(s).expect("snapshot serializes"))
                .map_err(|e| ServiceError::Snapshot(e.to_string()))?;
        }
        fs::rename(&tmp, path).map_err(|e| ServiceError::Snapshot(e.to_string()))
    }

    pub fn create_session(&self) -> Result<String, ServiceError> {
        let id = {
            let mut sessions = self.sessions.write().unwrap();
            let id = loop {
                let candidate = format!("{:032x}", rand::random::<u128>());
                if !sessions.contains_key(&candidate) {
                    break candidate;
                }
            };
            let session =
                Session { id: id.clone(), obs: ObservationVector::new(&self.engine.codex), created_at: now() };
            sessions.insert(id.clone(), Arc::new(Mutex::new(session)));
            id
        };
        self.persist()?;
        Ok(id)
    }

    pub fn observation(&self, id: &str) -> Result<ObservationVector, ServiceError> {
        Ok(self.session(id)?.lock().unwrap().obs.clone())
    }

    pub fn differential(&self, id: &str, k: Option<usize>) -> Result<Differential, ServiceError> {
        if k == Some(0) {
            return Err(ServiceError::BadRequest("k must be positive".into()));
        }
        let obs = self.observation(id)?;
        Ok(self.engine.rank(&obs).top(k))
    }

    fn apply(
        &self,
        obs: &ObservationVector,
        feature: &str,
        status: FindingStatus,
    ) -> Result<ObservationVector, ServiceError> {
        obs.assert_finding(&self.engine.codex, feature, status).map_err(|e| match e {
            ObservationError::UnknownFeature(f) => ServiceError::UnknownFeature(f),
            other => ServiceError::BadRequest(other.to_string()),
        })
    }

    pub fn post_finding(&self, id: &str, feature: &str, status: FindingStatus) -> Result<Differential, ServiceError> {
        let handle = self.session(id)?;
        let differential = {
            let mut session = handle.lock().unwrap();
            let next = self.apply(&session.obs, feature, status)?;
            session.obs = next;
            self.engine.rank(&session.obs)
        };
        self.persist()?;
        Ok(differential)
    }

    /// The differential the session would have after `feature = status`,
    /// leaving the session itself untouched.
    pub fn what_if(&self, id: &str, feature: &str, status: FindingStatus) -> Result<Differential, ServiceError> {
        let obs = self.observation(id)?;
        let preview = self.apply(&obs, feature, status)?;
        Ok(self.engine.rank(&preview))
    }

    pub fn explanation(&self, id: &str, hypothesis: &str) -> Result<Explanation, ServiceError> {
        let obs = self.observation(id)?;
        if self.engine.codex.hypothesis(hypothesis).is_none() {
            return Err(ServiceError::HypothesisNotFound(hypothesis.to_string()));
        }
        let d = self.engine.rank(&obs);
        let rank = d.position(hypothesis).expect("every codex hypothesis is ranked");
        let entry = &d.entries[rank - 1];
        Ok(Explanation {
            hypothesis: entry.hypothesis.clone(),
            rank,
            raw_score: entry.raw_score,
            confidence: entry.confidence,
            contributions: entry.contributions.clone(),
            text: render_entry(entry, rank, &self.engine.codex),
        })
    }

    /// Extraction and normalization proposals. Nothing is asserted; a
    /// proposal becomes a finding only through `post_finding`.
    pub fn extract(&self, id: &str, text: &str) -> Result<Vec<Proposal>, ServiceError> {
        self.session(id)?;
        let engine = &self.engine;
        let mentions = match engine.extractor.mode {
            ExtractorMode::Lexicon => extract_mentions(text, &engine.codex, &engine.extractor),
            ExtractorMode::External => {
                fetch_external_mentions(text, &engine.extractor).map_err(|e| ServiceError::Upstream(e.to_string()))?
            }
        };
        mentions
            .into_iter()
            .map(|mention| {
                let outcome = match (&engine.embeddings, &engine.provider) {
                    (Some(store), Some(provider)) => {
                        match match_mention(&mention, store, &engine.codex, provider.as_ref(), engine.match_threshold) {
                            Ok(o) => o,
                            Err(NormalizationError::Unembeddable(_)) => match_mention_exact(&mention, &engine.codex),
                            Err(e) => return Err(ServiceError::Upstream(e.to_string())),
                        }
                    }
                    _ => match_mention_exact(&mention, &engine.codex),
                };
                let suggested_status = match mention.polarity {
                    Polarity::Affirmed => FindingStatus::Present,
                    Polarity::Negated => FindingStatus::Absent,
                };
                Ok(Proposal { mention: outcome.mention, result: outcome.result, suggested_status })
            })
            .collect()
    }

    pub fn codex_info(&self) -> CodexInfo {
        let c = &self.engine.codex;
        CodexInfo {
            codex_version: c.version().to_string(),
            domain_label: c.domain_label().to_string(),
            n: c.hypothesis_count(),
            m: c.feature_count(),
            features: c.features().to_vec(),
            hypotheses: c.hypotheses().to_vec(),
        }
    }
}
