//! The `abductor` command line: validate codices, diagnose cases, run
//! evaluations, generate synthetic corpora and serve the HTTP API.
//!
//! Every subcommand writes machine-readable JSON to stdout. Human-readable
//! tables go to stderr unless `--format table` is given. Exit status is 0 on
//! success, 1 on a domain error and 2 on a usage error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use abductor_core::codex::CodexDocument;
use abductor_core::error::NormalizationError;
use abductor_core::evaluation::{evaluate_ranks, parse_corpus, synth_corpus, CaseRank, SynthParams};
use abductor_core::extraction::{fetch_external_mentions, ExtractorMode, EXTRACTOR_URL_ENV};
use abductor_core::normalization::{
    load_embeddings, match_mention_exact, EmbeddingProvider, MatchResult, TableProvider, DEFAULT_MATCH_THRESHOLD,
};
use abductor_core::reasoning::{nb_rank, render_explanation, Priors};
use abductor_core::{
    extract_mentions, match_mention, rank_differential, run_evaluation, validate_codex, AbsentMode, Codex,
    EvaluationReport, ExtractorConfig, Finding, FindingStatus, ObservationVector, Polarity, Ranker, ScoringPolicy,
    Weighting,
};
use abductor_service::{Engine, SessionService};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Default leak parameter for the naive Bayes baseline.
pub const DEFAULT_EPSILON: f64 = 0.01;

#[derive(Debug, Parser)]
#[command(name = "abductor", version, about = "Codex-driven abductive ranking engine")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a codex file against the structural invariants.
    Validate(ValidateArgs),
    /// Rank every hypothesis for one case.
    Diagnose(DiagnoseArgs),
    /// Measure Top-k inclusion over a labelled corpus or a list of ranks.
    Evaluate(EvaluateArgs),
    /// Write a synthetic codex and corpus.
    Synth(SynthArgs),
    /// Serve the session API.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Baseline {
    Nb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExtractorKind {
    Lexicon,
    External,
}

#[derive(Debug, Args)]
pub struct PolicyArgs {
    /// Evoking weight derivation.
    #[arg(long, default_value = "uniform", value_parser = parse_weighting)]
    pub policy: Weighting,
    /// Penalty factor for expected features asserted absent.
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    /// Flat penalty per present feature outside a hypothesis.
    #[arg(long, default_value_t = 0.25)]
    pub beta: f64,
    #[arg(long, default_value = "tri_state", value_parser = parse_absent_mode)]
    pub absent_mode: AbsentMode,
}

impl PolicyArgs {
    fn policy(&self) -> ScoringPolicy {
        ScoringPolicy { weighting: self.policy, alpha: self.alpha, beta: self.beta, absent_mode: self.absent_mode }
    }
}

#[derive(Debug, Args)]
pub struct MatchArgs {
    /// Feature embedding file.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Surface-to-vector table used to embed extracted mentions.
    #[arg(long)]
    pub mention_embeddings: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_MATCH_THRESHOLD)]
    pub match_threshold: f64,
    /// Mention extractor; `external` reads its endpoint from ABDUCTOR_EXTRACTOR_URL.
    #[arg(long, value_enum, default_value = "lexicon")]
    pub extractor: ExtractorKind,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub codex: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("input").required(true).args(["findings", "text"]))]
pub struct DiagnoseArgs {
    #[arg(long)]
    pub codex: PathBuf,
    /// JSON array of {"feature", "status"} objects.
    #[arg(long)]
    pub findings: Option<PathBuf>,
    /// Free-text case description.
    #[arg(long, requires = "embeddings")]
    pub text: Option<String>,
    #[command(flatten)]
    pub matching: MatchArgs,
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[arg(long, value_parser = parse_positive)]
    pub top_k: Option<usize>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("cases").required(true).args(["corpus", "ranks"]))]
pub struct EvaluateArgs {
    #[arg(long, required_unless_present = "ranks")]
    pub codex: Option<PathBuf>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// JSON array of 1-based reference ranks, `null` when not ranked.
    #[arg(long, conflicts_with_all = ["codex", "baseline"])]
    pub ranks: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "1,3,5", value_parser = parse_positive)]
    pub k: Vec<usize>,
    #[arg(long, default_value_t = 0.95, value_parser = parse_level)]
    pub ci: f64,
    #[arg(long, value_enum)]
    pub baseline: Option<Baseline>,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 20)]
    pub hypotheses: usize,
    #[arg(long, default_value_t = 40)]
    pub features: usize,
    #[arg(long, default_value_t = 5)]
    pub features_per_hypothesis: usize,
    #[arg(long, default_value_t = 5)]
    pub findings_per_case: usize,
    #[arg(long, default_value_t = 0.0)]
    pub flip_noise: f64,
    #[arg(long, default_value_t = 100)]
    pub cases: usize,
    /// Directory receiving codex.json and corpus.json.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub codex: PathBuf,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: IpAddr,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Persist sessions to this JSON-lines file.
    #[arg(long)]
    pub snapshot: Option<PathBuf>,
    #[command(flatten)]
    pub matching: MatchArgs,
    #[command(flatten)]
    pub policy: PolicyArgs,
}

fn parse_weighting(s: &str) -> Result<Weighting, String> {
    s.parse().map_err(|_| format!("expected uniform or idf, got `{s}`"))
}

fn parse_absent_mode(s: &str) -> Result<AbsentMode, String> {
    s.parse().map_err(|_| format!("expected tri_state or binary, got `{s}`"))
}

fn parse_positive(s: &str) -> Result<usize, String> {
    match s.trim().parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(k) => Ok(k),
        Err(_) => Err(format!("expected a positive integer, got `{s}`")),
    }
}

fn parse_level(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x < 1.0 => Ok(x),
        _ => Err(format!("confidence level must lie strictly between 0 and 1, got `{s}`")),
    }
}

/// A failed command together with its exit status.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn domain(message: impl std::fmt::Display) -> Self {
        Failure { code: EXIT_DOMAIN, message: message.to_string() }
    }

    fn usage(message: impl std::fmt::Display) -> Self {
        Failure { code: EXIT_USAGE, message: message.to_string() }
    }
}

type Outcome = Result<i32, Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let sink: &mut dyn Write = if code == 0 { out } else { err };
            let _ = write!(sink, "{text}");
            return code;
        }
    };
    match execute(cli.command, out, err) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

pub fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    match command {
        Command::Validate(a) => validate(&a, out, err),
        Command::Diagnose(a) => diagnose(&a, out, err),
        Command::Evaluate(a) => evaluate(&a, out, err),
        Command::Synth(a) => synth(&a, out),
        Command::Serve(a) => serve(&a, err),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::domain(format!("cannot read {}: {e}", path.display())))
}

fn load_codex_file(path: &Path) -> Result<Codex, Failure> {
    Codex::from_json(&read(path)?).map_err(|e| Failure::domain(format!("{}: {e}", path.display())))
}

fn emit(sink: &mut dyn Write, text: &str) -> Result<(), Failure> {
    writeln!(sink, "{}", text.trim_end()).map_err(|e| Failure::domain(format!("write failed: {e}")))
}

fn validate(a: &ValidateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let text = read(&a.codex)?;
    let doc: CodexDocument =
        serde_json::from_str(&text).map_err(|e| Failure::domain(format!("{}: {e}", a.codex.display())))?;
    let report = validate_codex(&doc);
    match a.format {
        Format::Json => {
            let body = json!({ "valid": report.is_valid(), "violations": report.violations });
            emit(out, &serde_json::to_string_pretty(&body).expect("report serializes"))?;
            emit(err, &report.to_string())?;
        }
        Format::Table => emit(out, &report.to_string())?,
    }
    Ok(if report.is_valid() { EXIT_OK } else { EXIT_DOMAIN })
}

fn extractor_config(kind: ExtractorKind) -> Result<ExtractorConfig, Failure> {
    match kind {
        ExtractorKind::Lexicon => Ok(ExtractorConfig::default()),
        ExtractorKind::External => {
            let url = std::env::var(EXTRACTOR_URL_ENV)
                .map_err(|_| Failure::usage(format!("--extractor external needs {EXTRACTOR_URL_ENV} to be set")))?;
            Ok(ExtractorConfig::external(url, ExtractorConfig::default().timeout))
        }
    }
}

fn mention_provider(path: &Option<PathBuf>) -> Result<Option<TableProvider>, Failure> {
    path.as_ref()
        .map(|p| TableProvider::load(read(p)?.as_bytes()).map_err(|e| Failure::domain(format!("{}: {e}", p.display()))))
        .transpose()
}

/// Extracts and normalizes `text` into an observation. Unmatched mentions
/// are reported on `err` and dropped; a later mention of the same feature
/// overrides an earlier one.
fn observe_text(
    text: &str,
    codex: &Codex,
    matching: &MatchArgs,
    err: &mut dyn Write,
) -> Result<ObservationVector, Failure> {
    let embeddings_path = matching.embeddings.as_ref().ok_or_else(|| Failure::usage("--text requires --embeddings"))?;
    let store = load_embeddings(read(embeddings_path)?.as_bytes(), codex)
        .map_err(|e| Failure::domain(format!("{}: {e}", embeddings_path.display())))?;
    let provider = mention_provider(&matching.mention_embeddings)?;
    let config = extractor_config(matching.extractor)?;
    let mentions = match config.mode {
        ExtractorMode::Lexicon => extract_mentions(text, codex, &config),
        ExtractorMode::External => fetch_external_mentions(text, &config).map_err(Failure::domain)?,
    };
    let mut obs = ObservationVector::new(codex);
    for mention in mentions {
        let outcome = match &provider {
            Some(p) => {
                match match_mention(&mention, &store, codex, p as &dyn EmbeddingProvider, matching.match_threshold) {
                    Ok(o) => o,
                    Err(NormalizationError::Unembeddable(_)) => match_mention_exact(&mention, codex),
                    Err(e) => return Err(Failure::domain(e)),
                }
            }
            None => match_mention_exact(&mention, codex),
        };
        match &outcome.result {
            MatchResult::Matched { feature, .. } => {
                let status = match mention.polarity {
                    Polarity::Affirmed => FindingStatus::Present,
                    Polarity::Negated => FindingStatus::Absent,
                };
                obs = obs.assert_finding(codex, feature, status).map_err(Failure::domain)?;
            }
            MatchResult::Unmatched { best_score } => {
                let best = best_score.map_or("none".to_string(), |s| format!("{s:.3}"));
                let _ = writeln!(
                    err,
                    "unmatched mention `{}` at {}..{} (best similarity {best})",
                    mention.surface, mention.start, mention.end
                );
            }
        }
    }
    Ok(obs)
}

fn diagnose(a: &DiagnoseArgs, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let codex = load_codex_file(&a.codex)?;
    let obs = match (&a.findings, &a.text) {
        (Some(path), _) => {
            let findings: Vec<Finding> =
                serde_json::from_str(&read(path)?).map_err(|e| Failure::domain(format!("{}: {e}", path.display())))?;
            ObservationVector::from_findings(&codex, &findings)
                .map_err(|e| Failure::domain(format!("{}: {e}", path.display())))?
        }
        (None, Some(text)) => observe_text(text, &codex, &a.matching, err)?,
        (None, None) => return Err(Failure::usage("one of --findings or --text is required")),
    };
    let policy = a.policy.policy();
    let matrix = policy.evoking_matrix(&codex).map_err(Failure::domain)?;
    let differential = rank_differential(&codex, &obs, &matrix, &policy).map_err(Failure::domain)?;
    match a.format {
        Format::Json => emit(out, &differential.top(a.top_k).to_json())?,
        Format::Table => {
            let k = a.top_k.unwrap_or(differential.entries.len());
            emit(out, &render_explanation(&differential, &codex, k))?
        }
    }
    Ok(EXIT_OK)
}

fn ranks_report(path: &Path, ks: &[usize], level: f64) -> Result<EvaluationReport, Failure> {
    let ranks: Vec<Option<usize>> =
        serde_json::from_str(&read(path)?).map_err(|e| Failure::domain(format!("{}: {e}", path.display())))?;
    if ranks.contains(&Some(0)) {
        return Err(Failure::domain(format!("{}: ranks are 1-based", path.display())));
    }
    let width = ranks.len().saturating_sub(1).to_string().len().max(3);
    let per_case =
        ranks.into_iter().enumerate().map(|(i, rank)| CaseRank { case: format!("case-{i:0width$}"), rank }).collect();
    evaluate_ranks(per_case, ks, level, None).map_err(Failure::domain)
}

fn evaluate(a: &EvaluateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let (engine, baseline) = match (&a.ranks, &a.codex, &a.corpus) {
        (Some(ranks), _, _) => (ranks_report(ranks, &a.k, a.ci)?, None),
        (None, Some(codex_path), Some(corpus_path)) => {
            let codex = load_codex_file(codex_path)?;
            let corpus = parse_corpus(&read(corpus_path)?, &codex)
                .map_err(|e| Failure::domain(format!("{}: {e}", corpus_path.display())))?;
            let ranker = Ranker::evoking(&codex, a.policy.policy()).map_err(Failure::domain)?;
            let engine = run_evaluation(&codex, &corpus, &ranker, &a.k, a.ci).map_err(Failure::domain)?;
            let baseline = match a.baseline {
                Some(Baseline::Nb) => {
                    // fail early on a bad epsilon rather than per case
                    nb_rank(&codex, &ObservationVector::new(&codex), a.epsilon, &Priors::Uniform)
                        .map_err(Failure::domain)?;
                    let nb = Ranker::NaiveBayes { epsilon: a.epsilon, priors: Priors::Uniform };
                    Some(run_evaluation(&codex, &corpus, &nb, &a.k, a.ci).map_err(Failure::domain)?)
                }
                None => None,
            };
            (engine, baseline)
        }
        _ => return Err(Failure::usage("evaluate needs --ranks, or --codex with --corpus")),
    };
    let mut tables = format!("engine\n{}", engine.table());
    if let Some(b) = &baseline {
        tables.push_str(&format!("\nbaseline (naive Bayes)\n{}", b.table()));
    }
    match a.format {
        Format::Json => {
            let body = json!({ "engine": engine, "baseline": baseline });
            emit(out, &serde_json::to_string_pretty(&body).expect("report serializes"))?;
            emit(err, &tables)?;
        }
        Format::Table => emit(out, &tables)?,
    }
    Ok(EXIT_OK)
}

fn synth(a: &SynthArgs, out: &mut dyn Write) -> Outcome {
    let params = SynthParams {
        seed: a.seed,
        hypotheses: a.hypotheses,
        features: a.features,
        features_per_hypothesis: a.features_per_hypothesis,
        findings_per_case: a.findings_per_case,
        flip_noise: a.flip_noise,
        cases: a.cases,
    };
    let (codex, corpus) = synth_corpus(&params).map_err(Failure::domain)?;
    fs::create_dir_all(&a.out_dir).map_err(|e| Failure::domain(format!("{}: {e}", a.out_dir.display())))?;
    let codex_path = a.out_dir.join("codex.json");
    let corpus_path = a.out_dir.join("corpus.json");
    let write = |path: &Path, text: String| {
        fs::write(path, text + "\n").map_err(|e| Failure::domain(format!("{}: {e}", path.display())))
    };
    write(&codex_path, codex.to_canonical_json())?;
    write(&corpus_path, serde_json::to_string_pretty(&corpus).expect("corpus serializes"))?;
    let body = json!({
        "codex": codex_path,
        "corpus": corpus_path,
        "codex_version": codex.version(),
        "cases": corpus.len(),
        "params": params,
    });
    emit(out, &serde_json::to_string_pretty(&body).expect("summary serializes"))?;
    Ok(EXIT_OK)
}

fn serve(a: &ServeArgs, err: &mut dyn Write) -> Outcome {
    let codex = load_codex_file(&a.codex)?;
    let mut engine = Engine::new(codex, a.policy.policy()).map_err(Failure::domain)?;
    engine.extractor = extractor_config(a.matching.extractor)?;
    engine.match_threshold = a.matching.match_threshold;
    if let Some(path) = &a.matching.embeddings {
        let store = load_embeddings(read(path)?.as_bytes(), &engine.codex)
            .map_err(|e| Failure::domain(format!("{}: {e}", path.display())))?;
        engine.embeddings = Some(store);
    }
    if let Some(provider) = mention_provider(&a.matching.mention_embeddings)? {
        engine.provider = Some(Box::new(provider));
    }
    let mut service = SessionService::new(engine);
    if let Some(path) = &a.snapshot {
        service = service.with_snapshot(path.clone()).map_err(Failure::domain)?;
    }
    let addr = SocketAddr::new(a.host, a.port);
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| Failure::domain(format!("cannot start runtime: {e}")))?;
    let _ = writeln!(err, "serving codex {} on http://{addr}", service.engine().codex.version());
    runtime
        .block_on(abductor_service::serve(addr, Arc::new(service)))
        .map_err(|e| Failure::domain(format!("cannot serve on {addr}: {e}")))?;
    Ok(EXIT_OK)
}
