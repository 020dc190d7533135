//! Runs every acceptance criterion and prints one PASS/FAIL line each.
//! Exits non-zero if any criterion fails.

mod common;

use std::collections::HashSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

use common::retrieval_props as props;
use common::{fixture, persistence};
use topicnav_core::engine::{self, IndexOptions, InduceRequest, QueryRequest};
use topicnav_core::evaluation::{precision, top_k_precision, ConfusionMatrix, GroundTruth};
use topicnav_core::induction::{allocate_signatures, build_signatures};
use topicnav_core::lda::{fit_lda, fit_lda_with_observer, LdaConfig, LdaSettings};
use topicnav_core::store::ExperimentDir;
use topicnav_core::synthetic::{self, SyntheticSpec, STOPWORDS};
use topicnav_core::text::{CorpusFormat, Pipeline, PipelineConfig};
use topicnav_core::vector::build_vocabulary;

type Check = fn() -> Result<String, String>;

fn main() {
    let checks: &[(&str, Check)] = &[
        ("table-1 replication", table_one),
        ("signature oracle", signature_oracle),
        ("lda sanity", lda_sanity),
        ("end-to-end synthetic navigation", end_to_end),
        ("retrieval properties", retrieval_properties),
        ("persistence", persistence_criterion),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name}  [{secs:.1}s] {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}  [{secs:.1}s] {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

const CORPUS: u64 = 6_167_052;

/// Published cells for two queries: (predicted, tp, relevant) and the
/// printed (tp, fp, fn, tn) and precision.
fn table_one() -> Result<String, String> {
    let rows = [
        ("eleicao", (102, 88, 20_684), (88, 14, 20_596, 6_146_354), 0.8627),
        ("educacao", (235, 222, 67_282), (222, 13, 67_060, 6_099_979), 0.9464),
    ];
    let mut problems = Vec::new();
    for (name, (pred, tp, rel), printed, expected_precision) in rows {
        let cm = ConfusionMatrix::from_marginals(pred, tp, rel, CORPUS).map_err(|e| e.to_string())?;
        let got = (cm.tp, cm.fp, cm.fn_, cm.tn);
        if got != printed {
            problems.push(format!(
                "{name}: computed (tp,fp,fn,tn)={got:?}, printed {printed:?}; printed cells sum to {} not {CORPUS}",
                printed.0 + printed.1 + printed.2 + printed.3
            ));
        }
        let p = precision(&cm).map_err(|e| e.to_string())?;
        if format!("{p:.4}") != format!("{expected_precision:.4}") {
            problems.push(format!("{name}: precision {p:.4} != {expected_precision:.4}"));
        }
    }
    for (hits, expected) in [(15usize, 0.75), (16, 0.80)] {
        let relevant: HashSet<String> = (0..hits).map(|i| format!("r{i}")).collect();
        let mut ranked: Vec<String> = relevant.iter().cloned().collect();
        ranked.sort();
        ranked.extend((0..20 - hits).map(|i| format!("n{i}")));
        let truth = GroundTruth::new(relevant, CORPUS).map_err(|e| e.to_string())?;
        let p = top_k_precision(&ranked, &truth, 20).map_err(|e| e.to_string())?;
        if p != expected {
            problems.push(format!("top-20 with {hits} relevant gave {p}"));
        }
    }
    if problems.is_empty() {
        Ok("all cells exact; precision 0.8627 / 0.9464; top-20 0.75 / 0.80".into())
    } else {
        Err(problems.join("; "))
    }
}

fn signature_oracle() -> Result<String, String> {
    let mut r = common::rng(2024);
    let instances = 2000;
    let mut exhausted = 0;
    for case in 0..instances {
        let inst = common::random_instance(&mut r);
        let weights: Vec<Vec<f64>> = inst.groups.iter().map(|g| g.group_weight.clone()).collect();
        let seeds: Vec<usize> = inst.groups.iter().map(|g| g.seed_term).collect();
        let expected = common::reference_allocation(&weights, &seeds, inst.k);
        let actual = allocate_signatures(&inst.groups, inst.k);
        ensure(actual == expected, || format!("instance {case} differs: {actual:?} vs {expected:?}"))?;

        let sigs = build_signatures(&inst.groups, inst.k, &inst.vocab);
        let mut seen = HashSet::new();
        for (topic, group) in sigs.topics.iter().zip(&inst.groups) {
            ensure(topic.signature[0].term == group.seed, || format!("instance {case}: seed not first"))?;
            let warned = sigs.warnings.iter().any(|w| w.seed == group.seed);
            ensure(topic.signature.len() == inst.k || (warned && topic.signature.len() < inst.k), || {
                format!("instance {case}: length {} without warning", topic.signature.len())
            })?;
            for t in &topic.signature {
                ensure(seen.insert(t.term.clone()), || format!("instance {case}: `{}` shared", t.term))?;
            }
        }
        exhausted += sigs.warnings.len();
    }
    Ok(format!("{instances} instances match the reference; {exhausted} exhausted pools reported"))
}

fn lda_sanity() -> Result<String, String> {
    let (docs, planted) = common::planted_two_topic(200, 5);
    let vocab = build_vocabulary(&docs, 1, 1.0).map_err(|e| e.to_string())?;
    let config = LdaConfig {
        alpha: 0.1,
        iterations: 300,
        burn_in: 150,
        sample_lag: 10,
        rng_seed: 42,
        ..LdaConfig::new(2)
    };
    let mut conserved = true;
    let model = fit_lda_with_observer(&docs, &vocab, &config, |s| {
        conserved &= s.assigned_tokens == s.corpus_tokens;
    })
    .map_err(|e| e.to_string())?;
    ensure(conserved, || "token counts drifted during sampling".into())?;
    let mut worst: f64 = 1.0;
    for k in 0..2 {
        let row = model.topic(k).map_err(|e| e.to_string())?;
        let best = planted
            .iter()
            .map(|words| words.iter().map(|w| row[vocab.position(w).unwrap()]).sum::<f64>())
            .fold(0.0, f64::max);
        worst = worst.min(best);
    }
    ensure(worst >= 0.95, || format!("mass concentration {worst:.4} < 0.95"))?;
    let again = fit_lda(&docs, &vocab, &config).map_err(|e| e.to_string())?;
    let bits = |m: &topicnav_core::lda::LdaModel| m.topic_word().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    ensure(bits(&model) == bits(&again), || "same seed gave different models".into())?;
    Ok(format!("min concentration {worst:.4}; counts conserved; refit bit-identical"))
}

fn end_to_end() -> Result<String, String> {
    let spec = SyntheticSpec {
        n_docs: 5000,
        n_topics: 3,
        noise_rate: 0.2,
        seed: 7,
        ..SyntheticSpec::default()
    };
    let corpus = synthetic::generate(&spec);
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let corpus_path = tmp.path().join("corpus.jsonl");
    std::fs::write(&corpus_path, corpus.to_jsonl()).map_err(|e| e.to_string())?;

    let dir = ExperimentDir::create(tmp.path().join("exp")).map_err(|e| e.to_string())?;
    let lock = dir.lock().map_err(|e| e.to_string())?;
    let pipeline = Pipeline::new(
        PipelineConfig::default().with_stopwords(STOPWORDS.iter().copied()),
        Default::default(),
    )
    .map_err(|e| e.to_string())?;
    engine::ingest(&lock, &corpus_path, CorpusFormat::Jsonl, &pipeline).map_err(|e| e.to_string())?;
    let (_, index) = engine::build_index(&lock, IndexOptions::default()).map_err(|e| e.to_string())?;

    let seeds: Vec<String> = corpus.topics.iter().map(|t| t.words[0].clone()).collect();
    let request = InduceRequest {
        k: 10,
        n_start: 3,
        n_max: 3,
        settings: Some(LdaSettings {
            rng_seed: 1,
            ..LdaSettings::default()
        }),
        ..InduceRequest::new(seeds.clone())
    };
    let topics = engine::induce(&lock, &request, |_, _| {}).map_err(|e| format!("induce: {e}"))?;
    ensure(topics.coverage.all_covered() && topics.final_n <= 3, || {
        format!("coverage failed at n={}", topics.final_n)
    })?;

    let mut lines = Vec::new();
    let mut problems = Vec::new();
    for (t, planted) in corpus.topics.iter().enumerate() {
        let topic = topics.topic(&seeds[t]).map_err(|e| e.to_string())?;
        let top30: HashSet<&String> = planted.top(30).iter().collect();
        let terms = topic.terms();
        let inside = terms.iter().filter(|w| top30.contains(w)).count();
        if terms.len() != 10 || inside < 8 {
            problems.push(format!("topic {t}: {inside}/{} signature words in planted top-30", terms.len()));
        }

        let result = engine::run_query(
            &index,
            &pipeline,
            Some(&topics),
            &QueryRequest {
                terms: None,
                topic: Some(seeds[t].clone()),
                threshold: 0.0,
                min_terms: 0,
                limit: Some(20),
                weighted: false,
            },
        )
        .map_err(|e| e.to_string())?;
        let truth = GroundTruth::new(corpus.relevant_ids(t), index.n_docs() as u64).map_err(|e| e.to_string())?;
        let p20 = top_k_precision(&result.ids(), &truth, 20).map_err(|e| e.to_string())?;
        if p20 < 0.75 {
            problems.push(format!("topic {t}: precision@20 {p20:.2}"));
        }
        lines.push(format!("t{t}: {inside}/10 in top-30, p@20={p20:.2}"));
    }
    ensure(problems.is_empty(), || problems.join("; "))?;
    Ok(format!("covered at n={}; {}", topics.final_n, lines.join(", ")))
}

fn run_prop<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), proptest::test_runner::TestCaseError>,
) -> Result<u32, String> {
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    runner.run(&strategy, test).map_err(|e| e.to_string())?;
    Ok(cases)
}

fn retrieval_properties() -> Result<String, String> {
    let n = 300;
    let mut total = 0;
    total += run_prop(n, (props::corpus(), props::query_terms(), 0.0f64..=1.0, 0.0f64..=1.0), |(d, q, a, b)| {
        props::threshold_monotone(&d, q, a, b)
    })
    .map_err(|e| format!("threshold monotonicity: {e}"))?;
    total += run_prop(n, (props::corpus(), props::query_terms(), 0.0f64..=1.0, 0u32..15, 0u32..15), |(d, q, t, a, b)| {
        props::min_terms_monotone(&d, q, t, a, b)
    })
    .map_err(|e| format!("min-terms monotonicity: {e}"))?;
    total += run_prop(n, (props::sparse(), props::sparse(), 0.01f64..100.0), |(x, y, s)| {
        props::cosine_symmetric_in_range(&x, &y, s)
    })
    .map_err(|e| format!("cosine: {e}"))?;
    total += run_prop(n, (props::corpus(), props::query_terms(), 0.01f64..100.0), |(d, q, s)| {
        props::scaling_keeps_ranking(&d, q, s)
    })
    .map_err(|e| format!("scale invariance: {e}"))?;
    total += run_prop(n, (props::corpus(), props::query_terms(), 0.0f64..=1.0, 0u32..6), |(d, q, t, m)| {
        props::matches_dense_scorer(&d, q, t, m)
    })
    .map_err(|e| format!("brute-force equivalence: {e}"))?;
    Ok(format!("{total} generated cases across 5 properties"))
}

fn persistence_criterion() -> Result<String, String> {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir = fixture::full_experiment(tmp.path());
    let kinds = persistence::round_trip(&dir)?;
    persistence::corruption_detected(&dir)?;
    Ok(format!("{kinds} artifact kinds round-trip bit-exactly; single-byte tampering caught in each"))
}
