//! Random fixtures and brute-force oracles shared by integration suites.
//!
//! The oracles here deliberately avoid the library's computation paths:
//! intervals come from bisection on summed binomial probabilities, and
//! posteriors from direct products over the joint table.

#![allow(dead_code)]

use abductor_core::codex::{CodexDocument, Feature, Hypothesis};
use abductor_core::{Codex, FindingStatus, ObservationVector};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const T1: &str = r#"{
  "codex_version": "1.0.0",
  "domain_label": "toy",
  "features": [
    {"id": "f1", "name": "headache", "synonyms": ["cephalalgia"]},
    {"id": "f2", "name": "fever", "synonyms": []},
    {"id": "f3", "name": "rash", "synonyms": []},
    {"id": "f4", "name": "cough", "synonyms": []}
  ],
  "hypotheses": [
    {"id": "h1", "name": "Alpha", "features": ["f1", "f2"]},
    {"id": "h2", "name": "Beta", "features": ["f2", "f3"]},
    {"id": "h3", "name": "Gamma", "features": ["f4"]}
  ]
}"#;

pub fn t1() -> Codex {
    Codex::from_json(T1).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random valid codex with `n` hypotheses over `m` features.
pub fn random_codex(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Codex {
    let features = (0..m)
        .map(|i| Feature { id: format!("f{i:02}"), name: format!("feature {i}"), synonyms: vec![] })
        .collect::<Vec<_>>();
    let hypotheses = (0..n)
        .map(|i| {
            let size = rng.random_range(1..=m);
            let mut picked = sample(rng, m, size).into_vec();
            picked.sort_unstable();
            Hypothesis {
                id: format!("h{i:02}"),
                name: format!("hypothesis {i}"),
                feature_ids: picked.into_iter().map(|f| features[f].id.clone()).collect(),
            }
        })
        .collect();
    Codex::from_document(CodexDocument {
        version: format!("rand-{n}-{m}"),
        domain_label: "random".into(),
        features,
        hypotheses,
        evoking_overrides: None,
    })
    .unwrap()
}

pub fn random_codex_any(rng: &mut ChaCha8Rng, max_n: usize, max_m: usize) -> Codex {
    let n = rng.random_range(1..=max_n);
    let m = rng.random_range(1..=max_m);
    random_codex(rng, n, m)
}

pub fn random_status(rng: &mut ChaCha8Rng) -> FindingStatus {
    [FindingStatus::Present, FindingStatus::Absent, FindingStatus::Unknown][rng.random_range(0..3)]
}

pub fn random_observation(rng: &mut ChaCha8Rng, codex: &Codex) -> ObservationVector {
    codex
        .features()
        .iter()
        .fold(ObservationVector::new(codex), |obs, f| obs.assert_finding(codex, &f.id, random_status(rng)).unwrap())
}

fn choose(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// P(X <= s) for X ~ Binomial(n, p), by direct summation.
pub fn binomial_cdf(s: u64, n: u64, p: f64) -> f64 {
    (0..=s).map(|k| choose(n, k) * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)).sum()
}

fn bisect(mut lo: f64, mut hi: f64, mut below: impl FnMut(f64) -> bool) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if below(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Exact two-sided interval from binomial tail probabilities: the lower
/// bound is where P(X >= s) reaches rho/2, the upper bound where
/// P(X <= s) falls to rho/2.
pub fn clopper_pearson_oracle(s: u64, n: u64, level: f64) -> (f64, f64) {
    let tail = (1.0 - level) / 2.0;
    let low = if s == 0 { 0.0 } else { bisect(0.0, 1.0, |p| 1.0 - binomial_cdf(s - 1, n, p) < tail) };
    let high = if s == n { 1.0 } else { bisect(0.0, 1.0, |p| binomial_cdf(s, n, p) > tail) };
    (low, high)
}

/// Posterior over hypotheses from the explicit joint P(h, x) with uniform
/// priors, by plain products.
pub fn nb_posterior_oracle(codex: &Codex, x: &[u8], epsilon: f64) -> Vec<(String, f64)> {
    let n = codex.hypothesis_count() as f64;
    let joint: Vec<f64> = codex
        .hypotheses()
        .iter()
        .map(|h| {
            let c = codex.incidence_vector(&h.id).unwrap();
            let mut p = 1.0 / n;
            for (xi, ci) in x.iter().zip(&c) {
                let theta = if *ci == 1 { 1.0 - epsilon } else { epsilon };
                p *= if *xi == 1 { theta } else { 1.0 - theta };
            }
            p
        })
        .collect();
    let evidence: f64 = joint.iter().sum();
    codex.hypotheses().iter().zip(joint).map(|(h, j)| (h.id.clone(), j / evidence)).collect()
}

/// Observation whose binary projection equals `x`.
pub fn observation_from_bits(codex: &Codex, x: &[u8]) -> ObservationVector {
    codex.features().iter().zip(x).fold(ObservationVector::new(codex), |obs, (f, &b)| {
        let s = if b == 1 { FindingStatus::Present } else { FindingStatus::Absent };
        obs.assert_finding(codex, &f.id, s).unwrap()
    })
}
