//! Independent reference implementations and fixtures shared by the
//! integration suites.
#![allow(dead_code)]

pub mod retrieval_props;

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use topicnav_core::induction::TopicGroup;
use topicnav_core::text::Document;
use topicnav_core::vector::Vocabulary;

/// Round protocol simulated literally on dense weight tables. Struck,
/// assigned and seed terms are set to negative infinity in a group's
/// candidate row; a row that is all negative infinity is exhausted.
pub fn reference_allocation(weights: &[Vec<f64>], seeds: &[usize], k: usize) -> (Vec<Vec<usize>>, Vec<bool>) {
    let g_count = weights.len();
    let mut candidates: Vec<Vec<f64>> = weights
        .iter()
        .map(|row| row.iter().map(|&w| if w > 0.0 { w } else { f64::NEG_INFINITY }).collect())
        .collect();
    for row in candidates.iter_mut() {
        for &s in seeds {
            row[s] = f64::NEG_INFINITY;
        }
    }
    let mut signatures: Vec<Vec<usize>> = seeds.iter().map(|&s| vec![s]).collect();
    let mut exhausted = vec![false; g_count];

    loop {
        let unfinished: Vec<usize> = (0..g_count)
            .filter(|&g| !exhausted[g] && signatures[g].len() < k)
            .collect();
        if unfinished.is_empty() {
            break;
        }
        let mut served = vec![false; g_count];
        loop {
            let mut nominations: Vec<(usize, usize)> = Vec::new(); // (group, term)
            for &g in &unfinished {
                if served[g] || exhausted[g] {
                    continue;
                }
                let row = &candidates[g];
                let mut best: Option<usize> = None;
                for t in 0..row.len() {
                    if row[t] == f64::NEG_INFINITY {
                        continue;
                    }
                    if best.is_none_or(|b| row[t] > row[b]) {
                        best = Some(t);
                    }
                }
                match best {
                    Some(t) => nominations.push((g, t)),
                    None => exhausted[g] = true,
                }
            }
            if nominations.is_empty() {
                break;
            }
            let mut by_term: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for (g, t) in nominations {
                by_term.entry(t).or_default().push(g);
            }
            for (t, groups) in by_term {
                let mut winner = groups[0];
                for &g in &groups[1..] {
                    if weights[g][t] > weights[winner][t] {
                        winner = g;
                    }
                }
                signatures[winner].push(t);
                served[winner] = true;
                // the term is gone for everyone: assigned for the winner,
                // struck for the losers
                for row in candidates.iter_mut() {
                    row[t] = f64::NEG_INFINITY;
                }
            }
        }
    }
    (signatures, exhausted)
}

pub struct GroupInstance {
    pub groups: Vec<TopicGroup>,
    pub vocab: Vocabulary,
    pub k: usize,
}

/// Random labeled groups: up to 12 terms, up to 4 member topics per group,
/// weights drawn from a coarse grid so ties are common.
pub fn random_instance(rng: &mut ChaCha8Rng) -> GroupInstance {
    let v = rng.random_range(2..=12);
    let n_groups = rng.random_range(1..=v.min(4));
    let mut terms: Vec<usize> = (0..v).collect();
    // partial Fisher-Yates for distinct seeds
    for i in 0..n_groups {
        let j = rng.random_range(i..v);
        terms.swap(i, j);
    }
    let groups = (0..n_groups)
        .map(|g| {
            let members = rng.random_range(0..=4);
            let mut weight = vec![0.0; v];
            for _ in 0..members {
                for w in weight.iter_mut() {
                    *w += rng.random_range(0..5) as f64 / 20.0;
                }
            }
            TopicGroup {
                seed: format!("w{}", terms[g]),
                seed_term: terms[g],
                member_topics: (0..members).collect(),
                group_weight: weight,
            }
        })
        .collect();
    let vocab = Vocabulary::from_parts((0..v).map(|t| (format!("w{t}"), 1)).collect()).unwrap();
    GroupInstance {
        groups,
        vocab,
        k: rng.random_range(1..=v + 1),
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Dense TF-IDF cosine ranking computed from raw token lists.
pub fn brute_force_ranking(
    docs: &[Document],
    query: &[String],
    threshold: f64,
    min_terms: u32,
) -> Vec<(String, f64)> {
    let n = docs.len() as f64;
    let mut df: HashMap<&str, f64> = HashMap::new();
    for d in docs {
        let mut seen: Vec<&str> = d.tokens.iter().map(String::as_str).collect();
        seen.sort_unstable();
        seen.dedup();
        for t in seen {
            *df.entry(t).or_default() += 1.0;
        }
    }
    let mut terms: Vec<&str> = df.keys().copied().collect();
    terms.sort_unstable();
    let idf = |t: &str| (n / df[t]).ln();

    let mut q = vec![0.0; terms.len()];
    for (i, t) in terms.iter().enumerate() {
        if query.iter().any(|x| x == t) {
            q[i] = idf(t);
        }
    }
    let mut out = Vec::new();
    for d in docs {
        if (d.tokens.len() as u32) < min_terms {
            continue;
        }
        let x: Vec<f64> = terms
            .iter()
            .map(|t| d.tokens.iter().filter(|s| s == t).count() as f64 * idf(t))
            .collect();
        let dot: f64 = x.iter().zip(&q).map(|(a, b)| a * b).sum();
        let nx = x.iter().map(|a| a * a).sum::<f64>().sqrt();
        let nq = q.iter().map(|a| a * a).sum::<f64>().sqrt();
        let score = if nx == 0.0 || nq == 0.0 { 0.0 } else { (dot / (nx * nq)).clamp(0.0, 1.0) };
        if score >= threshold {
            out.push((d.id.clone(), score));
        }
    }
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out
}

/// Two topics over disjoint ten-word vocabularies; each document draws all
/// its tokens from one of them.
pub fn planted_two_topic(n_docs: usize, seed: u64) -> (Vec<Document>, [Vec<String>; 2]) {
    let mut r = rng(seed);
    let vocab: [Vec<String>; 2] = [
        (0..10).map(|i| format!("alpha{i}")).collect(),
        (0..10).map(|i| format!("beta{i}")).collect(),
    ];
    let docs = (0..n_docs)
        .map(|i| {
            let topic = &vocab[i % 2];
            let len = r.random_range(15..=25);
            let tokens: Vec<String> = (0..len).map(|_| topic[r.random_range(0..topic.len())].clone()).collect();
            Document {
                tokens,
                ..Document::new(format!("p{i:03}"), "")
            }
        })
        .collect();
    (docs, vocab)
}

pub mod fixture {
    use std::path::Path;

    use topicnav_core::engine::{self, IndexOptions, InduceRequest, LdaRequest};
    use topicnav_core::evaluation::{evaluate, GroundTruth};
    use topicnav_core::lda::LdaSettings;
    use topicnav_core::store::{Artifact, ExperimentDir};
    use topicnav_core::synthetic::{self, SyntheticSpec, STOPWORDS};
    use topicnav_core::text::{CorpusFormat, Pipeline, PipelineConfig};

    pub fn small_settings() -> LdaSettings {
        LdaSettings {
            iterations: 60,
            burn_in: 30,
            sample_lag: 10,
            rng_seed: 3,
            ..LdaSettings::default()
        }
    }

    /// An experiment holding one artifact of every kind, built from a small
    /// synthetic corpus through the regular stages.
    pub fn full_experiment(root: &Path) -> ExperimentDir {
        let corpus = synthetic::generate(&SyntheticSpec {
            n_docs: 90,
            ..SyntheticSpec::default()
        });
        let corpus_path = root.join("corpus.jsonl");
        std::fs::write(&corpus_path, corpus.to_jsonl()).unwrap();
        let dir = ExperimentDir::create(root.join("exp")).unwrap();
        let lock = dir.lock().unwrap();
        let pipeline = Pipeline::new(
            PipelineConfig::default().with_stopwords(STOPWORDS.iter().copied()),
            Default::default(),
        )
        .unwrap();
        engine::ingest(&lock, &corpus_path, CorpusFormat::Jsonl, &pipeline).unwrap();
        let (_, index) = engine::build_index(&lock, IndexOptions::default()).unwrap();
        engine::fit_model(
            &lock,
            &LdaRequest {
                topics_of_interest: 3,
                fragment: 2,
                settings: small_settings(),
            },
            |_| {},
        )
        .unwrap();
        let seeds: Vec<String> = corpus.topics.iter().map(|t| t.words[0].clone()).collect();
        let mut req = InduceRequest::new(seeds);
        req.n_max = 4;
        req.k = 5;
        engine::induce(&lock, &req, |_, _| {}).unwrap();

        let truth = GroundTruth::new(corpus.relevant_ids(0), index.n_docs() as u64).unwrap();
        let ranked: Vec<String> = index.doc_ids()[..10].to_vec();
        let report = evaluate(&ranked, &truth, 10).unwrap();
        lock.save_artifact(
            &Artifact::Eval {
                name: "first-ten".into(),
                report,
            },
            serde_json::json!({}),
        )
        .unwrap();
        drop(lock);
        dir
    }
}

pub mod persistence {
    use std::fs;

    use topicnav_core::store::{ArtifactKind, ArtifactStatus, ExperimentDir};
    use topicnav_core::Error;

    pub fn all_kinds() -> Vec<ArtifactKind> {
        vec![
            ArtifactKind::Pipeline,
            ArtifactKind::Corpus,
            ArtifactKind::Vocab,
            ArtifactKind::Index,
            ArtifactKind::Model,
            ArtifactKind::Topics,
            ArtifactKind::Eval("first-ten".into()),
        ]
    }

    /// Every stored artifact re-encodes to exactly the bytes on disk.
    pub fn round_trip(dir: &ExperimentDir) -> Result<usize, String> {
        for kind in all_kinds() {
            let loaded = dir.load_artifact(&kind).map_err(|e| format!("{}: {e}", kind.name()))?;
            let on_disk = fs::read(dir.root().join(kind.file_name())).map_err(|e| e.to_string())?;
            let again = loaded.encode().map_err(|e| e.to_string())?;
            if again != on_disk {
                return Err(format!("{} does not round-trip bit-exactly", kind.name()));
            }
        }
        Ok(all_kinds().len())
    }

    /// Flips one byte in each artifact file in turn and checks that both
    /// `verify` and the loader notice, then restores the file.
    pub fn corruption_detected(dir: &ExperimentDir) -> Result<usize, String> {
        let manifest_before = fs::read(dir.root().join("manifest.json")).unwrap();
        for kind in all_kinds() {
            let path = dir.root().join(kind.file_name());
            let original = fs::read(&path).map_err(|e| e.to_string())?;
            let mut tampered = original.clone();
            let at = tampered.len() / 2;
            tampered[at] ^= 0x01;
            fs::write(&path, &tampered).unwrap();

            let report = dir.verify().map_err(|e| e.to_string())?;
            let flagged: Vec<_> = report.failures().map(|c| c.artifact.clone()).collect();
            let load = dir.load_artifact(&kind);
            fs::write(&path, &original).unwrap();

            if report.ok || flagged != [kind.name()] {
                return Err(format!("tampering {} flagged {flagged:?}", kind.name()));
            }
            let check = report.artifacts.iter().find(|c| c.artifact == kind.name()).unwrap();
            if !matches!(check.status, ArtifactStatus::HashMismatch { .. }) {
                return Err(format!("{}: unexpected status {:?}", kind.name(), check.status));
            }
            if !matches!(load, Err(Error::HashMismatch { .. })) {
                return Err(format!("loading tampered {} gave {:?}", kind.name(), load.map(|_| ())));
            }
        }
        if fs::read(dir.root().join("manifest.json")).unwrap() != manifest_before {
            return Err("verify modified the manifest".into());
        }
        if !dir.verify().map_err(|e| e.to_string())?.ok {
            return Err("restored experiment does not verify".into());
        }
        Ok(all_kinds().len())
    }
}
