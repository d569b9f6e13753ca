//! Free text to candidate feature mentions.
//!
//! The lexicon matcher is the deterministic default. The external mode
//! forwards text to a remote extractor and accepts nothing back but spans:
//! a response element carrying any other key is a contract violation, so no
//! diagnosis can enter the pipeline through extraction.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::codex::Codex;
use crate::error::ExtractionError;

pub const DEFAULT_NEGATION_CUES: [&str; 4] = ["no", "denies", "without", "not"];
pub const EXTRACTOR_URL_ENV: &str = "ABDUCTOR_EXTRACTOR_URL";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Affirmed,
    Negated,
}

/// A span of the input text. Offsets count characters, not bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mention {
    pub surface: String,
    pub start: usize,
    pub end: usize,
    pub polarity: Polarity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractorMode {
    Lexicon,
    External,
}

#[derive(Debug, Clone)]
pub struct ExtractorConfig {
    pub mode: ExtractorMode,
    pub endpoint: Option<String>,
    pub timeout: Duration,
    pub negation_cues: Vec<String>,
}

impl Default for ExtractorConfig {
    fn default() -> Self {
        ExtractorConfig {
            mode: ExtractorMode::Lexicon,
            endpoint: None,
            timeout: Duration::from_secs(10),
            negation_cues: DEFAULT_NEGATION_CUES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl ExtractorConfig {
    pub fn external(endpoint: impl Into<String>, timeout: Duration) -> Self {
        ExtractorConfig {
            mode: ExtractorMode::External,
            endpoint: Some(endpoint.into()),
            timeout,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), ExtractionError> {
        match (self.mode, &self.endpoint) {
            (ExtractorMode::External, None) => {
                return Err(ExtractionError::Config("external mode requires an endpoint".into()))
            }
            (ExtractorMode::Lexicon, Some(_)) => {
                return Err(ExtractionError::Config("lexicon mode takes no endpoint".into()))
            }
            _ => {}
        }
        if self.timeout.is_zero() {
            return Err(ExtractionError::Config("timeout must be positive".into()));
        }
        Ok(())
    }
}

fn lower_char(c: char) -> char {
    let mut it = c.to_lowercase();
    match (it.next(), it.next()) {
        (Some(l), None) => l,
        _ => c,
    }
}

fn lower_chars(s: &str) -> Vec<char> {
    s.chars().map(lower_char).collect()
}

fn is_word(c: char) -> bool {
    c.is_alphanumeric()
}

fn is_clause_break(c: char) -> bool {
    matches!(c, ',' | '.')
}

/// True if `term` occurs at `pos` in `text` on word boundaries.
fn matches_at(text: &[char], pos: usize, term: &[char]) -> bool {
    let end = pos + term.len();
    end <= text.len()
        && text[pos..end] == *term
        && (pos == 0 || !is_word(text[pos - 1]) || !is_word(term[0]))
        && (end == text.len() || !is_word(text[end]) || !is_word(term[term.len() - 1]))
}

/// Longest-match, non-overlapping lexicon extraction with clause-scoped
/// negation.
pub fn extract_mentions(text: &str, codex: &Codex, config: &ExtractorConfig) -> Vec<Mention> {
    let chars: Vec<char> = text.chars().collect();
    let lower: Vec<char> = chars.iter().map(|&c| lower_char(c)).collect();

    let mut terms: Vec<Vec<char>> = codex
        .features()
        .iter()
        .flat_map(|f| std::iter::once(&f.name).chain(f.synonyms.iter()))
        .map(|s| lower_chars(s.trim()))
        .filter(|t| !t.is_empty())
        .collect();
    terms.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
    terms.dedup();

    let cues: Vec<Vec<char>> =
        config.negation_cues.iter().map(|c| lower_chars(c.trim())).filter(|c| !c.is_empty()).collect();

    let mut spans: Vec<(usize, usize)> = Vec::new();
    let mut pos = 0;
    while pos < lower.len() {
        match terms.iter().find(|t| matches_at(&lower, pos, t)) {
            Some(t) => {
                spans.push((pos, pos + t.len()));
                pos += t.len();
            }
            None => pos += 1,
        }
    }

    spans
        .iter()
        .enumerate()
        .map(|(i, &(start, end))| {
            let clause_start = lower[..start].iter().rposition(|&c| is_clause_break(c)).map_or(0, |p| p + 1);
            let negated = (clause_start..start).any(|p| {
                cues.iter().any(|cue| {
                    matches_at(&lower, p, cue)
                        && p + cue.len() <= start
                        && !spans[..i].iter().any(|&(s, e)| p < e && s < p + cue.len())
                })
            });
            Mention {
                surface: chars[start..end].iter().collect(),
                start,
                end,
                polarity: if negated { Polarity::Negated } else { Polarity::Affirmed },
            }
        })
        .collect()
}

const MENTION_KEYS: [&str; 4] = ["surface", "start", "end", "polarity"];

/// Validates an external extractor response body against the input text.
pub fn parse_external_response(text: &str, body: &str) -> Result<Vec<Mention>, ExtractionError> {
    let value: Value = serde_json::from_str(body).map_err(|e| ExtractionError::Malformed(e.to_string()))?;
    let elements = value
        .get("mentions")
        .and_then(Value::as_array)
        .ok_or_else(|| ExtractionError::Malformed("missing `mentions` array".into()))?;

    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::with_capacity(elements.len());
    for (i, el) in elements.iter().enumerate() {
        let obj = el.as_object().ok_or_else(|| ExtractionError::Malformed(format!("mention {i} is not an object")))?;
        if let Some(key) = obj.keys().find(|k| !MENTION_KEYS.contains(&k.as_str())) {
            return Err(ExtractionError::ContractViolation(format!(
                "mention {i} carries field `{key}`; only spans may be returned"
            )));
        }
        let mention: Mention =
            serde_json::from_value(el.clone()).map_err(|e| ExtractionError::Malformed(format!("mention {i}: {e}")))?;
        if !(mention.start < mention.end && mention.end <= chars.len()) {
            return Err(ExtractionError::Malformed(format!("mention {i} has an invalid span")));
        }
        let slice: String = chars[mention.start..mention.end].iter().collect();
        if slice != mention.surface {
            return Err(ExtractionError::Malformed(format!(
                "mention {i} surface `{}` does not match text `{slice}`",
                mention.surface
            )));
        }
        out.push(mention);
    }
    out.sort_by_key(|m| m.start);
    if out.windows(2).any(|w| w[0].end > w[1].start) {
        return Err(ExtractionError::Malformed("overlapping mentions".into()));
    }
    Ok(out)
}

/// One blocking POST to the configured extractor.
pub fn fetch_external_mentions(text: &str, config: &ExtractorConfig) -> Result<Vec<Mention>, ExtractionError> {
    config.validate()?;
    let endpoint = config
        .endpoint
        .as_deref()
        .filter(|_| config.mode == ExtractorMode::External)
        .ok_or_else(|| ExtractionError::Config("external mode requires an endpoint".into()))?;
    let client = reqwest::blocking::Client::builder()
        .timeout(config.timeout)
        .build()
        .map_err(|e| ExtractionError::Transport(e.to_string()))?;
    let response = client
        .post(endpoint)
        .json(&serde_json::json!({ "text": text }))
        .send()
        .and_then(|r| r.error_for_status())
        .map_err(classify)?;
    let body = response.text().map_err(classify)?;
    parse_external_response(text, &body)
}

fn classify(e: reqwest::Error) -> ExtractionError {
    if e.is_timeout() {
        ExtractionError::Timeout
    } else {
        ExtractionError::Transport(e.to_string())
    }
}
