//! Acceptance suite. Each criterion prints one PASS/FAIL line; the test
//! fails if any criterion fails.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use abductor_cli::run;
use abductor_core::evaluation::{percent, synth_corpus, SynthParams};
use abductor_core::reasoning::{nb_rank, Priors};
use abductor_core::{
    clopper_pearson, rank_differential, run_evaluation, AbsentMode, Codex, Differential, Finding, FindingStatus,
    ObservationVector, Ranker, ScoringPolicy, Weighting,
};
use abductor_service::{Engine, SessionService};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use support::*;

const COHORT: [(u64, u64, [i64; 2]); 3] = [(30, 42, [55, 84]), (34, 42, [66, 91]), (37, 42, [74, 96])];

static TRACES_CHECKED: AtomicUsize = AtomicUsize::new(0);
static TRACE_VIOLATIONS: AtomicUsize = AtomicUsize::new(0);

type Verdict = Result<String, String>;
type Check<'a> = Box<dyn Fn() -> Verdict + 'a>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Records whether every entry's contributions sum to its raw score.
fn check_trace(d: &Differential) -> bool {
    let mut ok = true;
    for e in &d.entries {
        let sum: f64 = e.contributions.iter().map(|c| c.delta).sum();
        TRACES_CHECKED.fetch_add(1, Ordering::Relaxed);
        if (sum - e.raw_score).abs() > 1e-9 {
            TRACE_VIOLATIONS.fetch_add(1, Ordering::Relaxed);
            ok = false;
        }
    }
    ok
}

fn random_policy(rng: &mut ChaCha8Rng) -> ScoringPolicy {
    ScoringPolicy {
        weighting: if rng.random_bool(0.5) { Weighting::Uniform } else { Weighting::Idf },
        alpha: rng.random_range(0.0..=1.0),
        beta: rng.random_range(0.0..=1.0),
        absent_mode: if rng.random_bool(0.5) { AbsentMode::TriState } else { AbsentMode::Binary },
    }
}

fn rank(codex: &Codex, obs: &ObservationVector, policy: &ScoringPolicy) -> Differential {
    let matrix = policy.evoking_matrix(codex).unwrap();
    let d = rank_differential(codex, obs, &matrix, policy).unwrap();
    check_trace(&d);
    d
}

/// support(h, f) recomputed from the incidence relation alone.
fn oracle_support(codex: &Codex, weighting: Weighting, h: &str, f: &str) -> f64 {
    let features = &codex.hypothesis(h).unwrap().feature_ids;
    if !features.iter().any(|g| g == f) {
        return 0.0;
    }
    let n = codex.hypothesis_count() as f64;
    let weight = |g: &str| match weighting {
        Weighting::Uniform => 1.0,
        Weighting::Idf => {
            let df = codex.hypotheses().iter().filter(|h| h.feature_ids.iter().any(|x| x == g)).count() as f64;
            (n / df).ln() + 1.0
        }
    };
    weight(f) / features.iter().map(|g| weight(g)).sum::<f64>()
}

/// S(h) by direct enumeration over the codex features.
fn oracle_score(codex: &Codex, obs: &ObservationVector, policy: &ScoringPolicy, h: &str) -> f64 {
    let members: BTreeSet<&str> = codex.hypothesis(h).unwrap().feature_ids.iter().map(String::as_str).collect();
    let mut score = 0.0;
    for f in codex.features() {
        let status = match (obs.status(&f.id), policy.absent_mode) {
            (FindingStatus::Unknown, AbsentMode::Binary) => FindingStatus::Absent,
            (s, _) => s,
        };
        let s = oracle_support(codex, policy.weighting, h, &f.id);
        score += match (members.contains(f.id.as_str()), status) {
            (true, FindingStatus::Present) => s,
            (true, FindingStatus::Absent) => -policy.alpha * s,
            (false, FindingStatus::Present) => -policy.beta,
            _ => 0.0,
        };
    }
    score
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(std::iter::once("abductor").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let mut shown = Vec::new();
    for (s, n, expected) in COHORT {
        let (lo, hi) = clopper_pearson(s, n, 0.95).map_err(|e| e.to_string())?;
        let got = [percent(lo), percent(hi)];
        ensure(got == expected, || format!("({s}, {n}) gave {got:?}, expected {expected:?}"))?;
        let (olo, ohi) = clopper_pearson_oracle(s, n, 0.95);
        ensure((lo - olo).abs() < 1e-9 && (hi - ohi).abs() < 1e-9, || format!("({s}, {n}) disagrees with oracle"))?;
        shown.push(format!("{}% [{}, {}]", percent(s as f64 / n as f64), got[0], got[1]));
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("{} in {elapsed:.1?}", shown.join(", ")))
}

/// Ranks in the 42-case cohort: 30 at rank 1, 4 at ranks 2-3, 3 at ranks
/// 4-5 and 5 beyond rank 5.
const COHORT_RANKS: [usize; 42] = {
    let mut r = [1; 42];
    let tail = [2, 2, 3, 3, 4, 4, 5, 6, 7, 8, 9, 10];
    let mut i = 0;
    while i < tail.len() {
        r[30 + i] = tail[i];
        i += 1;
    }
    r
};

/// Ten hypotheses with one private feature each. Asserting the features of
/// h00..h(r-1) ties those hypotheses at the top, and the id tie-break puts
/// h(r-1) at rank r.
fn cohort_corpus() -> (Value, Value) {
    let features: Vec<Value> =
        (0..10).map(|i| json!({"id": format!("f{i:02}"), "name": format!("sign {i}"), "synonyms": []})).collect();
    let hypotheses: Vec<Value> = (0..10)
        .map(|i| json!({"id": format!("h{i:02}"), "name": format!("condition {i}"), "features": [format!("f{i:02}")]}))
        .collect();
    let codex =
        json!({"codex_version": "cohort-1", "domain_label": "cohort", "features": features, "hypotheses": hypotheses});
    let cases: Vec<Value> = COHORT_RANKS
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let findings: Vec<Value> =
                (0..r).map(|j| json!({"feature": format!("f{j:02}"), "status": "present"})).collect();
            json!({"id": format!("case-{i:02}"), "findings": findings, "reference": [format!("h{:02}", r - 1)]})
        })
        .collect();
    (codex, Value::Array(cases))
}

fn check_cohort_report(report: &Value, tables: &str) -> Result<(), String> {
    for ((s, n, [lo, hi]), k) in COHORT.iter().zip(["1", "3", "5"]) {
        let row = &report["topk"][k];
        ensure(row["count"].as_u64() == Some(*s), || format!("Top-{k} count {} != {s}", row["count"]))?;
        let share = percent(row["proportion"].as_f64().unwrap());
        let ci = [percent(row["ci_low"].as_f64().unwrap()), percent(row["ci_high"].as_f64().unwrap())];
        ensure(share == percent(*s as f64 / *n as f64) && ci == [*lo, *hi], || {
            format!("Top-{k} gave {share}% {ci:?}")
        })?;
        let line = format!("{share}%   [{lo}, {hi}]");
        ensure(tables.contains(&line), || format!("table lacks `{line}`"))?;
    }
    Ok(())
}

fn criterion_2(dir: &Path) -> Verdict {
    let ranks_path = dir.join("cohort_ranks.json");
    let ranks: Vec<Value> = COHORT_RANKS.iter().map(|&r| if r > 8 { Value::Null } else { json!(r) }).collect();
    std::fs::write(&ranks_path, serde_json::to_string(&ranks).unwrap()).unwrap();
    let (codex, corpus) = cohort_corpus();
    let codex_path = dir.join("cohort_codex.json");
    let corpus_path = dir.join("cohort_corpus.json");
    std::fs::write(&codex_path, codex.to_string()).unwrap();
    std::fs::write(&corpus_path, corpus.to_string()).unwrap();

    let mut timings = Vec::new();
    let runs: [Vec<&str>; 2] = [
        vec!["evaluate", "--ranks", ranks_path.to_str().unwrap(), "--k", "1,3,5", "--ci", "0.95"],
        vec![
            "evaluate",
            "--codex",
            codex_path.to_str().unwrap(),
            "--corpus",
            corpus_path.to_str().unwrap(),
            "--k",
            "1,3,5",
            "--ci",
            "0.95",
        ],
    ];
    for args in &runs {
        let start = Instant::now();
        let (code, out, err) = cli(args);
        let elapsed = start.elapsed();
        ensure(code == 0, || format!("evaluate exited {code}: {err}"))?;
        let v: Value = serde_json::from_str(&out).map_err(|e| e.to_string())?;
        ensure(v["engine"]["n_cases"] == 42, || "expected 42 cases".into())?;
        check_cohort_report(&v["engine"], &err)?;
        ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
        timings.push(format!("{elapsed:.1?}"));
    }
    Ok(format!("Top-1/3/5 = 71%/81%/88% from rank list ({}) and end-to-end corpus ({})", timings[0], timings[1]))
}

fn criterion_3() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for level in [0.90, 0.95, 0.99] {
        for n in 1..=25u64 {
            for s in 0..=n {
                let (lo, hi) = clopper_pearson(s, n, level).map_err(|e| e.to_string())?;
                let (olo, ohi) = clopper_pearson_oracle(s, n, level);
                let diff = (lo - olo).abs().max((hi - ohi).abs());
                worst = worst.max(diff);
                checked += 1;
                ensure(diff <= 1e-6, || format!("(s={s}, n={n}, level={level}) differs by {diff:e}"))?;
            }
        }
    }
    Ok(format!("{checked} intervals, max deviation {worst:.1e}"))
}

fn criterion_4(dir: &Path) -> Verdict {
    let mut rng = rng(4);
    let mut cli_runs = 0;
    for pair in 0..50 {
        let codex = random_codex_any(&mut rng, 8, 12);
        let obs = random_observation(&mut rng, &codex);
        let policy = random_policy(&mut rng);
        let matrix = policy.evoking_matrix(&codex).unwrap();
        let reference = rank_differential(&codex, &obs, &matrix, &policy).unwrap().to_json();
        for _ in 0..1000 {
            let d = rank_differential(&codex, &obs, &matrix, &policy).unwrap();
            check_trace(&d);
            ensure(d.to_json() == reference, || format!("pair {pair}: serialized differential changed"))?;
        }

        let codex_path = dir.join(format!("det-codex-{pair}.json"));
        let findings_path = dir.join(format!("det-findings-{pair}.json"));
        std::fs::write(&codex_path, codex.to_canonical_json()).unwrap();
        std::fs::write(&findings_path, serde_json::to_string(&obs.findings()).unwrap()).unwrap();
        let (alpha, beta) = (policy.alpha.to_string(), policy.beta.to_string());
        let args = [
            "diagnose",
            "--codex",
            codex_path.to_str().unwrap(),
            "--findings",
            findings_path.to_str().unwrap(),
            "--policy",
            policy.weighting.name(),
            "--alpha",
            &alpha,
            "--beta",
            &beta,
            "--absent-mode",
            if policy.absent_mode == AbsentMode::Binary { "binary" } else { "tri_state" },
        ];
        let (code, first, err) = cli(&args);
        ensure(code == 0, || format!("pair {pair}: diagnose exited {code}: {err}"))?;
        ensure(first.trim_end() == reference, || format!("pair {pair}: diagnose stdout differs from library output"))?;
        for _ in 0..1000 {
            ensure(cli(&args).1 == first, || format!("pair {pair}: diagnose stdout changed"))?;
            cli_runs += 1;
        }
    }
    Ok(format!("50 pairs x 1000 library runs and {cli_runs} diagnose runs byte-identical"))
}

fn criterion_5() -> Verdict {
    let mut rng = rng(5);
    let mut violations = 0;
    for i in 0..10_000 {
        let codex = random_codex_any(&mut rng, 12, 16);
        let obs = random_observation(&mut rng, &codex);
        let d = if i % 4 == 3 {
            nb_rank(&codex, &obs, rng.random_range(0.001..0.49), &Priors::Uniform).unwrap()
        } else {
            rank(&codex, &obs, &random_policy(&mut rng))
        };
        let ids: BTreeSet<&str> = d.entries.iter().map(|e| e.hypothesis.as_str()).collect();
        let known: BTreeSet<&str> = codex.hypotheses().iter().map(|h| h.id.as_str()).collect();
        if d.entries.len() != codex.hypothesis_count() || ids != known {
            violations += 1;
        }
    }
    ensure(violations == 0, || format!("{violations} violations"))?;
    Ok("10000 runs, 0 violations".into())
}

fn criterion_6() -> Verdict {
    let t1 = t1();
    let obs = [("f1", FindingStatus::Present), ("f2", FindingStatus::Present), ("f4", FindingStatus::Absent)]
        .iter()
        .fold(ObservationVector::new(&t1), |o, (f, s)| o.assert_finding(&t1, f, *s).unwrap());
    let d = rank(&t1, &obs, &ScoringPolicy::default());
    let got: Vec<(&str, f64)> = d.entries.iter().map(|e| (e.hypothesis.as_str(), e.raw_score)).collect();
    let expected = [("h1", 1.0), ("h2", 0.25), ("h3", -1.0)];
    ensure(got.len() == 3 && got.iter().zip(expected).all(|(g, e)| g.0 == e.0 && (g.1 - e.1).abs() <= 1e-9), || {
        format!("T1 gave {got:?}")
    })?;

    let mut rng = rng(6);
    for trial in 0..1000 {
        let codex = random_codex_any(&mut rng, 8, 10);
        let policy = ScoringPolicy { absent_mode: AbsentMode::TriState, ..random_policy(&mut rng) };
        let feature = codex.features()[rng.random_range(0..codex.feature_count())].id.clone();
        let before =
            random_observation(&mut rng, &codex).assert_finding(&codex, &feature, FindingStatus::Unknown).unwrap();
        let to = if rng.random_bool(0.5) { FindingStatus::Present } else { FindingStatus::Absent };
        let after = before.assert_finding(&codex, &feature, to).unwrap();
        let (d0, d1) = (rank(&codex, &before, &policy), rank(&codex, &after, &policy));
        for h in codex.hypotheses() {
            let (s0, s1) = (d0.entry(&h.id).unwrap().raw_score, d1.entry(&h.id).unwrap().raw_score);
            for (obs, s) in [(&before, s0), (&after, s1)] {
                let oracle = oracle_score(&codex, obs, &policy, &h.id);
                ensure((s - oracle).abs() <= 1e-9, || format!("trial {trial}: {} scored {s}, oracle {oracle}", h.id))?;
            }
            let support = oracle_support(&codex, policy.weighting, &h.id, &feature);
            let member = h.feature_ids.contains(&feature);
            let expected = match (member, to) {
                (true, FindingStatus::Present) => support,
                (true, _) => -policy.alpha * support,
                (false, FindingStatus::Present) => -policy.beta,
                (false, _) => 0.0,
            };
            ensure((s1 - s0 - expected).abs() <= 1e-9, || {
                format!("trial {trial}: {} moved by {}, expected {expected}", h.id, s1 - s0)
            })?;
            if member && to == FindingStatus::Present {
                ensure(s1 > s0, || format!("trial {trial}: {} did not rise", h.id))?;
            }
        }
    }
    Ok("T1 = 1.0 / 0.25 / -1.0; 1000 flip trials match oracle deltas".into())
}

fn criterion_7() -> Verdict {
    let start = Instant::now();
    let mut rng = rng(7);
    let mut worst: f64 = 0.0;
    let mut vectors = 0;
    for c in 0..20 {
        let n = rng.random_range(2..=8);
        let m = rng.random_range(1..=10);
        let codex = random_codex(&mut rng, n, m);
        let epsilon = rng.random_range(0.001..0.3);
        for bits in 0..(1u32 << m) {
            let x: Vec<u8> = (0..m).map(|i| ((bits >> i) & 1) as u8).collect();
            let d = nb_rank(&codex, &observation_from_bits(&codex, &x), epsilon, &Priors::Uniform).unwrap();
            for (h, p) in nb_posterior_oracle(&codex, &x, epsilon) {
                let got = d.entry(&h).unwrap().confidence;
                worst = worst.max((got - p).abs());
                ensure((got - p).abs() <= 1e-9, || format!("codex {c}, x={x:?}, {h}: {got} vs {p}"))?;
            }
            vectors += 1;
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
    Ok(format!("20 codices, {vectors} vectors, max deviation {worst:.1e}, {elapsed:.1?}"))
}

fn criterion_8() -> Verdict {
    let mut rng = rng(8);
    for _ in 0..2000 {
        let codex = random_codex_any(&mut rng, 10, 14);
        let obs = random_observation(&mut rng, &codex);
        rank(&codex, &obs, &random_policy(&mut rng));
    }
    let (checked, bad) = (TRACES_CHECKED.load(Ordering::Relaxed), TRACE_VIOLATIONS.load(Ordering::Relaxed));
    ensure(bad == 0, || format!("{bad} of {checked} entries have traces that do not sum to the score"))?;
    Ok(format!("{checked} entries across all suites, 0 mismatches"))
}

fn synth(seed: u64, flip_noise: f64) -> (Codex, Vec<abductor_core::Case>) {
    let params = SynthParams {
        seed,
        hypotheses: 20,
        features: 40,
        features_per_hypothesis: 5,
        findings_per_case: 5,
        flip_noise,
        cases: 500,
    };
    synth_corpus(&params).unwrap()
}

fn criterion_9() -> Verdict {
    let (codex, corpus) = synth(9, 0.0);
    let policy = ScoringPolicy::default();
    let mut hits = 0;
    for case in &corpus {
        let d = rank(&codex, &case.observation(&codex).unwrap(), &policy);
        let truth = d.entry(&case.reference[0]).unwrap().raw_score;
        if truth >= d.entries[0].raw_score {
            hits += 1;
        }
    }
    ensure(hits == corpus.len(), || format!("noise 0: Top-1 (with ties) {hits}/{}", corpus.len()))?;

    let report = |seed| {
        let (codex, corpus) = synth(seed, 0.1);
        let ranker = Ranker::evoking(&codex, ScoringPolicy::default()).unwrap();
        run_evaluation(&codex, &corpus, &ranker, &[1, 3], 0.95).unwrap()
    };
    let (a, b) = (report(19), report(19));
    ensure(a == b && a.to_json() == b.to_json(), || "noise 0.1 report is not deterministic".into())?;
    let (top1, top3) = (&a.topk[&1], &a.topk[&3]);
    ensure(top3.count >= top1.count, || format!("Top-3 {} < Top-1 {}", top3.count, top1.count))?;
    Ok(format!(
        "noise 0: Top-1 {hits}/500; noise 0.1: Top-1 {}% [{}, {}], Top-3 {}% [{}, {}]",
        percent(top1.proportion),
        percent(top1.ci_low),
        percent(top1.ci_high),
        percent(top3.proportion),
        percent(top3.ci_low),
        percent(top3.ci_high)
    ))
}

fn http(addr: SocketAddr, method: &str, path: &str, body: Option<&Value>) -> (u16, Value) {
    let mut stream = TcpStream::connect(addr).unwrap();
    let payload = body.map(Value::to_string).unwrap_or_default();
    write!(
        stream,
        "{method} {path} HTTP/1.1\r\nhost: localhost\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{payload}",
        payload.len()
    )
    .unwrap();
    let mut response = String::new();
    stream.read_to_string(&mut response).unwrap();
    let (head, body) = response.split_once("\r\n\r\n").unwrap();
    let status = head.split_whitespace().nth(1).unwrap().parse().unwrap();
    (status, serde_json::from_str(body).unwrap_or(Value::Null))
}

fn start_service(codex: Codex) -> SocketAddr {
    let addr = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap();
    let service = Arc::new(SessionService::new(Engine::new(codex, ScoringPolicy::default()).unwrap()));
    thread::spawn(move || {
        let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build().unwrap();
        runtime.block_on(abductor_service::serve(addr, service)).unwrap();
    });
    let deadline = Instant::now() + Duration::from_secs(10);
    while TcpStream::connect(addr).is_err() {
        assert!(Instant::now() < deadline, "service did not start");
        thread::sleep(Duration::from_millis(20));
    }
    addr
}

fn fold(codex: &Codex, script: &BTreeMap<String, FindingStatus>) -> ObservationVector {
    let findings: Vec<Finding> = script
        .iter()
        .filter(|(_, s)| **s != FindingStatus::Unknown)
        .map(|(f, s)| Finding { feature: f.clone(), status: *s })
        .collect();
    ObservationVector::from_findings(codex, &findings).unwrap()
}

fn criterion_10() -> Verdict {
    let mut rng = rng(10);
    let codex = random_codex(&mut rng, 8, 10);
    let addr = start_service(codex.clone());
    let policy = ScoringPolicy::default();
    let library = |script: &BTreeMap<String, FindingStatus>| {
        serde_json::to_value(rank(&codex, &fold(&codex, script), &policy)).unwrap()
    };

    let mut sessions: Vec<(String, BTreeMap<String, FindingStatus>, usize)> = (0..100)
        .map(|_| {
            let (status, v) = http(addr, "POST", "/v1/sessions", None);
            assert_eq!(status, 201);
            (v["id"].as_str().unwrap().to_string(), BTreeMap::new(), rng.random_range(1..=15))
        })
        .collect();
    let (mut steps, mut previews) = (0, 0);
    // interleave the scripts so sessions are exercised side by side
    while sessions.iter().any(|s| s.2 > 0) {
        for (id, script, remaining) in sessions.iter_mut().filter(|s| s.2 > 0) {
            let feature = codex.features()[rng.random_range(0..codex.feature_count())].id.clone();
            let status = random_status(&mut rng);
            let body = json!({"feature": feature, "status": status.as_str()});
            if rng.random_bool(0.3) {
                let path = format!("/v1/sessions/{id}/differential");
                let before = http(addr, "GET", &path, None);
                let (code, preview) = http(addr, "POST", &format!("/v1/sessions/{id}/whatif"), Some(&body));
                let after = http(addr, "GET", &path, None);
                ensure(code == 200 && before == after, || format!("what-if changed session {id}"))?;
                let mut hypothetical = script.clone();
                hypothetical.insert(feature.clone(), status);
                ensure(preview == library(&hypothetical), || format!("what-if on {id} differs from library"))?;
                previews += 1;
            }
            let (code, posted) = http(addr, "POST", &format!("/v1/sessions/{id}/findings"), Some(&body));
            ensure(code == 200, || format!("finding on {id} returned {code}"))?;
            script.insert(feature, status);
            let expected = library(script);
            ensure(posted == expected, || format!("session {id} differs from library after posting"))?;
            let (_, fetched) = http(addr, "GET", &format!("/v1/sessions/{id}/differential"), None);
            ensure(fetched == expected, || format!("session {id} differs from library on read"))?;
            *remaining -= 1;
            steps += 1;
        }
    }
    Ok(format!("100 scripts, {steps} findings, {previews} what-if probes"))
}

#[test]
fn acceptance() {
    let dir = tempfile::tempdir().unwrap();
    let criteria: Vec<(&str, Check)> = vec![
        ("CI reproduction", Box::new(criterion_1)),
        ("metric reproduction", Box::new(|| criterion_2(dir.path()))),
        ("CI oracle", Box::new(criterion_3)),
        ("determinism", Box::new(|| criterion_4(dir.path()))),
        ("closed world", Box::new(criterion_5)),
        ("scoring oracle", Box::new(criterion_6)),
        ("naive Bayes oracle", Box::new(criterion_7)),
        ("synthetic recovery", Box::new(criterion_9)),
        ("service state equivalence", Box::new(criterion_10)),
        // last, so it covers the differentials of every suite above
        ("trace completeness", Box::new(criterion_8)),
    ];
    let numbers = [1, 2, 3, 4, 5, 6, 7, 9, 10, 8];
    let mut failed = Vec::new();
    for ((name, check), number) in criteria.iter().zip(numbers) {
        let line = match check() {
            Ok(detail) => format!("criterion {number:>2} PASS  {name}: {detail}"),
            Err(why) => {
                failed.push(number);
                format!("criterion {number:>2} FAIL  {name}: {why}")
            }
        };
        // bypass the test harness capture so the summary always shows
        let _ = writeln!(std::io::stderr(), "{line}");
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
