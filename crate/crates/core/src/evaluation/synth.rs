//! Seeded synthetic codices and case corpora.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::codex::{Codex, CodexDocument, Feature, Hypothesis};
use crate::error::EvaluationError;
use crate::observation::{Finding, FindingStatus};

use super::Case;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub seed: u64,
    pub hypotheses: usize,
    pub features: usize,
    pub features_per_hypothesis: usize,
    pub findings_per_case: usize,
    pub flip_noise: f64,
    pub cases: usize,
}

impl SynthParams {
    fn check(&self) -> Result<(), EvaluationError> {
        let positive = [
            ("hypotheses", self.hypotheses),
            ("features", self.features),
            ("features_per_hypothesis", self.features_per_hypothesis),
            ("findings_per_case", self.findings_per_case),
            ("cases", self.cases),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(EvaluationError::Infeasible(format!("{name} must be positive")));
        }
        if self.features_per_hypothesis > self.features {
            return Err(EvaluationError::Infeasible(format!(
                "features_per_hypothesis {} exceeds feature count {}",
                self.features_per_hypothesis, self.features
            )));
        }
        if self.findings_per_case > self.features_per_hypothesis {
            return Err(EvaluationError::Infeasible(format!(
                "findings_per_case {} exceeds features_per_hypothesis {}",
                self.findings_per_case, self.features_per_hypothesis
            )));
        }
        if !(0.0..0.5).contains(&self.flip_noise) {
            return Err(EvaluationError::Infeasible(format!("flip_noise {} not in [0, 0.5)", self.flip_noise)));
        }
        Ok(())
    }
}

fn padded(prefix: &str, i: usize, count: usize) -> String {
    let width = count.saturating_sub(1).to_string().len().max(3);
    format!("{prefix}{i:0width$}")
}

/// Generates a codex and a corpus whose reference is the sampled ground
/// truth. Identical parameters give identical output.
pub fn synth_corpus(params: &SynthParams) -> Result<(Codex, Vec<Case>), EvaluationError> {
    params.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let features: Vec<Feature> = (0..params.features)
        .map(|i| {
            let id = padded("f", i, params.features);
            Feature { name: format!("finding {i}"), id, synonyms: Vec::new() }
        })
        .collect();
    let hypotheses: Vec<Hypothesis> = (0..params.hypotheses)
        .map(|i| {
            let mut picked = sample(&mut rng, params.features, params.features_per_hypothesis).into_vec();
            picked.sort_unstable();
            Hypothesis {
                id: padded("h", i, params.hypotheses),
                name: format!("condition {i}"),
                feature_ids: picked.into_iter().map(|f| features[f].id.clone()).collect(),
            }
        })
        .collect();
    let doc = CodexDocument {
        version: format!("synth-{}", params.seed),
        domain_label: "synthetic".into(),
        features,
        hypotheses,
        evoking_overrides: None,
    };
    let codex = Codex::from_document(doc)?;

    let cases = (0..params.cases)
        .map(|ci| {
            let truth = &codex.hypotheses()[rng.random_range(0..params.hypotheses)];
            let signature = &truth.feature_ids;
            let mut chosen = sample(&mut rng, signature.len(), params.findings_per_case).into_vec();
            chosen.sort_unstable();
            let findings = chosen
                .into_iter()
                .map(|i| {
                    let flipped = rng.random::<f64>() < params.flip_noise;
                    Finding {
                        feature: signature[i].clone(),
                        status: if flipped { FindingStatus::Absent } else { FindingStatus::Present },
                    }
                })
                .collect();
            Case { id: padded("case-", ci, params.cases), findings, text: None, reference: vec![truth.id.clone()] }
        })
        .collect();
    Ok((codex, cases))
}
