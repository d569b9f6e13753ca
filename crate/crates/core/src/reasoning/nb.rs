//! Bernoulli Naive Bayes over the binary projection, used as a baseline.
//!
//! `θ(h, f) = 1 − ε` when `f ∈ C(h)` and `ε` otherwise. Likelihoods are
//! accumulated in log space and normalized with log-sum-exp.

use std::collections::BTreeMap;

use crate::codex::Codex;
use crate::error::ReasoningError;
use crate::observation::ObservationVector;

use super::{check_version, rank_order, Differential, DifferentialEntry, RankingMethod};

#[derive(Debug, Clone, PartialEq, Default)]
pub enum Priors {
    #[default]
    Uniform,
    /// Prior per hypothesis id; must cover the codex and sum to one.
    Explicit(BTreeMap<String, f64>),
}

impl Priors {
    fn log_priors(&self, codex: &Codex) -> Result<Vec<f64>, ReasoningError> {
        let n = codex.hypothesis_count();
        match self {
            Priors::Uniform => Ok(vec![-(n as f64).ln(); n]),
            Priors::Explicit(map) => {
                if let Some(id) = map.keys().find(|id| codex.hypothesis_position(id).is_none()) {
                    return Err(ReasoningError::BadPriors(format!("unknown hypothesis `{id}`")));
                }
                let mut out = Vec::with_capacity(n);
                for h in codex.hypotheses() {
                    let p =
                        *map.get(&h.id).ok_or_else(|| ReasoningError::BadPriors(format!("no prior for `{}`", h.id)))?;
                    if !(0.0..=1.0).contains(&p) {
                        return Err(ReasoningError::BadPriors(format!("prior {p} for `{}` not in [0, 1]", h.id)));
                    }
                    out.push(p.ln());
                }
                let total: f64 = map.values().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(ReasoningError::BadPriors(format!("priors sum to {total}")));
                }
                Ok(out)
            }
        }
    }
}

/// Posterior-ranked differential. `raw_score` holds the log posterior and
/// `confidence` the posterior; no contribution trace is produced.
pub fn nb_rank(
    codex: &Codex,
    obs: &ObservationVector,
    epsilon: f64,
    priors: &Priors,
) -> Result<Differential, ReasoningError> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(ReasoningError::BadEpsilon(epsilon));
    }
    check_version(codex, obs)?;
    let log_prior = priors.log_priors(codex)?;
    let x = obs.binary_projection(codex);
    let (log_hit, log_miss) = ((1.0 - epsilon).ln(), epsilon.ln());

    let log_joint: Vec<f64> = (0..codex.hypothesis_count())
        .map(|hi| {
            let ll: f64 = x
                .iter()
                .enumerate()
                .map(|(f, &xf)| if (xf == 1) == codex.contains(hi, f) { log_hit } else { log_miss })
                .sum();
            log_prior[hi] + ll
        })
        .collect();

    let max = log_joint.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_norm = max + log_joint.iter().map(|l| (l - max).exp()).sum::<f64>().ln();

    let mut entries: Vec<DifferentialEntry> = codex
        .hypotheses()
        .iter()
        .zip(&log_joint)
        .map(|(h, lj)| {
            let log_post = lj - log_norm;
            DifferentialEntry {
                hypothesis: h.id.clone(),
                raw_score: log_post,
                confidence: log_post.exp(),
                contributions: Vec::new(),
            }
        })
        .collect();
    entries.sort_by(|a, b| rank_order((&a.hypothesis, a.confidence), (&b.hypothesis, b.confidence)));
    Ok(Differential {
        codex_version: codex.version().to_string(),
        policy: RankingMethod::NaiveBayes { epsilon },
        entries,
    })
}
