//! Tri-state findings over the codex feature space.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::codex::Codex;
use crate::error::ObservationError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingStatus {
    Present,
    /// Confirmed absence, not merely "not reported".
    Absent,
    Unknown,
}

impl FindingStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            FindingStatus::Present => "present",
            FindingStatus::Absent => "absent",
            FindingStatus::Unknown => "unknown",
        }
    }
}

impl FromStr for FindingStatus {
    type Err = ObservationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "present" => Ok(FindingStatus::Present),
            "absent" => Ok(FindingStatus::Absent),
            "unknown" => Ok(FindingStatus::Unknown),
            other => Err(ObservationError::BadStatus(other.to_string())),
        }
    }
}

impl fmt::Display for FindingStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One entry of the finding-list wire format. Only `present` and `absent`
/// are ever serialized.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Finding {
    pub feature: String,
    pub status: FindingStatus,
}

/// Sparse tri-state observation; features not stored are unknown.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservationVector {
    codex_version: String,
    statuses: BTreeMap<String, FindingStatus>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Conflict {
    pub feature: String,
    pub left: FindingStatus,
    pub right: FindingStatus,
}

impl ObservationVector {
    pub fn new(codex: &Codex) -> Self {
        ObservationVector { codex_version: codex.version().to_string(), statuses: BTreeMap::new() }
    }

    pub fn codex_version(&self) -> &str {
        &self.codex_version
    }

    pub fn status(&self, feature: &str) -> FindingStatus {
        self.statuses.get(feature).copied().unwrap_or(FindingStatus::Unknown)
    }

    /// Non-unknown statuses in feature id order.
    pub fn known(&self) -> impl Iterator<Item = (&str, FindingStatus)> {
        self.statuses.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn check_version(&self, codex: &Codex) -> Result<(), ObservationError> {
        if self.codex_version != codex.version() {
            return Err(ObservationError::VersionMismatch {
                observation: self.codex_version.clone(),
                codex: codex.version().to_string(),
            });
        }
        Ok(())
    }

    /// Returns a copy with `feature` set to `status`; the last assertion wins.
    pub fn assert_finding(
        &self,
        codex: &Codex,
        feature: &str,
        status: FindingStatus,
    ) -> Result<Self, ObservationError> {
        self.check_version(codex)?;
        if codex.feature_position(feature).is_none() {
            return Err(ObservationError::UnknownFeature(feature.to_string()));
        }
        let mut next = self.clone();
        match status {
            FindingStatus::Unknown => {
                next.statuses.remove(feature);
            }
            s => {
                next.statuses.insert(feature.to_string(), s);
            }
        }
        Ok(next)
    }

    pub fn from_findings(codex: &Codex, findings: &[Finding]) -> Result<Self, ObservationError> {
        findings.iter().try_fold(Self::new(codex), |obs, f| obs.assert_finding(codex, &f.feature, f.status))
    }

    pub fn findings(&self) -> Vec<Finding> {
        self.known().map(|(f, s)| Finding { feature: f.to_string(), status: s }).collect()
    }

    /// Binary view: 1 iff present, in feature declaration order.
    pub fn binary_projection(&self, codex: &Codex) -> Vec<u8> {
        codex.features().iter().map(|f| u8::from(self.status(&f.id) == FindingStatus::Present)).collect()
    }

    /// Unknown yields to the other side; present against absent is a conflict.
    pub fn merge(&self, other: &Self) -> Result<Result<Self, Vec<Conflict>>, ObservationError> {
        if self.codex_version != other.codex_version {
            return Err(ObservationError::VersionMismatch {
                observation: other.codex_version.clone(),
                codex: self.codex_version.clone(),
            });
        }
        let mut merged = self.statuses.clone();
        let mut conflicts = Vec::new();
        for (feature, &status) in &other.statuses {
            match merged.get(feature) {
                Some(&mine) if mine != status => {
                    conflicts.push(Conflict { feature: feature.clone(), left: mine, right: status })
                }
                Some(_) => {}
                None => {
                    merged.insert(feature.clone(), status);
                }
            }
        }
        if conflicts.is_empty() {
            Ok(Ok(ObservationVector { codex_version: self.codex_version.clone(), statuses: merged }))
        } else {
            Ok(Err(conflicts))
        }
    }
}

pub fn new_observation(codex: &Codex) -> ObservationVector {
    ObservationVector::new(codex)
}

pub fn binary_projection(obs: &ObservationVector, codex: &Codex) -> Vec<u8> {
    obs.binary_projection(codex)
}
