//! Templated, non-generative rendering of a differential.
//!
//! Text names only hypotheses that are entries of the differential and only
//! features that appear in their contribution traces.

use std::fmt::Write;

use crate::codex::Codex;

use super::{Contribution, Differential, DifferentialEntry, RankingMethod, Term};

fn num(x: f64) -> String {
    format!("{:.3}", x + 0.0)
}

fn signed(x: f64) -> String {
    let x = x + 0.0;
    if x >= 0.0 {
        format!("+{x:.3}")
    } else {
        format!("{x:.3}")
    }
}

fn describe_method(method: &RankingMethod) -> String {
    match method {
        RankingMethod::Evoking(p) => {
            format!("evoking scores, {} weighting, alpha {}, beta {}", p.weighting, num(p.alpha), num(p.beta))
        }
        RankingMethod::NaiveBayes { epsilon } => format!("naive Bayes baseline, epsilon {}", num(*epsilon)),
    }
}

fn feature_label(codex: &Codex, id: &str) -> String {
    match codex.feature(id) {
        Some(f) => format!("{} ({id})", f.name),
        None => id.to_string(),
    }
}

fn by_magnitude<'a>(items: impl Iterator<Item = &'a Contribution>) -> Vec<&'a Contribution> {
    let mut v: Vec<_> = items.collect();
    v.sort_by(|a, b| b.delta.abs().total_cmp(&a.delta.abs()).then_with(|| a.feature.cmp(&b.feature)));
    v
}

/// One ranked entry with its supporting and opposing evidence.
pub fn render_entry(entry: &DifferentialEntry, rank: usize, codex: &Codex) -> String {
    let name = codex.hypothesis(&entry.hypothesis).map_or(entry.hypothesis.as_str(), |h| h.name.as_str());
    let mut out = format!(
        "{rank}. {name} ({}): confidence {}, score {}\n",
        entry.hypothesis,
        num(entry.confidence),
        num(entry.raw_score)
    );
    if entry.contributions.is_empty() {
        out.push_str("   no feature contributions\n");
        return out;
    }
    let supports = by_magnitude(entry.contributions.iter().filter(|c| c.term == Term::Support));
    let opposes = by_magnitude(entry.contributions.iter().filter(|c| c.term != Term::Support));
    for (label, list) in [("supported by", supports), ("opposed by", opposes)] {
        if list.is_empty() {
            continue;
        }
        let items: Vec<String> = list
            .iter()
            .map(|c| {
                let why = match c.term {
                    Term::Support => "present",
                    Term::Missing => "expected but absent",
                    Term::Unexpected => "present but unexpected",
                };
                format!("{} {} [{why}]", feature_label(codex, &c.feature), signed(c.delta))
            })
            .collect();
        let _ = writeln!(out, "   {label}: {}", items.join("; "));
    }
    out
}

/// The first `top_k` entries (clamped to the differential size).
pub fn render_explanation(differential: &Differential, codex: &Codex, top_k: usize) -> String {
    let k = top_k.max(1).min(differential.entries.len());
    let mut out = format!(
        "Differential over codex {} ({}); showing {k} of {}\n",
        differential.codex_version,
        describe_method(&differential.policy),
        differential.entries.len()
    );
    for (i, entry) in differential.entries.iter().take(k).enumerate() {
        out.push_str(&render_entry(entry, i + 1, codex));
    }
    out
}
