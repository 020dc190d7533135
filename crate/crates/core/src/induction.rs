//! Seed-guided induced topics built on top of an over-fragmented LDA fit.
//!
//! Every LDA topic is labeled with the seed that weighs most in it; the
//! topics sharing a label form a group. Groups then take turns claiming
//! their heaviest unclaimed word until each signature holds `k` words. A
//! word nominated by several groups in the same round goes to the group
//! where it weighs most, and the others pick again.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lda::{fit_lda, LdaConfig, LdaModel, LdaSettings};
use crate::text::Document;
use crate::vector::Vocabulary;

pub const DEFAULT_SIGNATURE_SIZE: usize = 10;
pub const DEFAULT_N_START: usize = 2;
pub const DEFAULT_N_MAX: usize = 8;

/// How member topics' weights are merged into a group weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupAggregation {
    #[default]
    Sum,
    Max,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSpec {
    /// Seed terms in index form.
    pub seeds: Vec<String>,
    pub k: usize,
    pub n_start: usize,
    pub n_max: usize,
    /// Minimum max-weight for a seed to count as covered; `None` picks
    /// [`default_seed_floor`].
    #[serde(default)]
    pub seed_floor: Option<f64>,
    #[serde(default)]
    pub aggregation: GroupAggregation,
}

impl SeedSpec {
    pub fn new<I, S>(seeds: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            seeds: seeds.into_iter().map(Into::into).collect(),
            k: DEFAULT_SIGNATURE_SIZE,
            n_start: DEFAULT_N_START,
            n_max: DEFAULT_N_MAX,
            seed_floor: None,
            aggregation: GroupAggregation::Sum,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidConfig(m));
        if self.seeds.is_empty() {
            return fail("at least one seed is required".into());
        }
        let mut seen = HashSet::new();
        for s in &self.seeds {
            if !seen.insert(s.as_str()) {
                return fail(format!("seed `{s}` given twice"));
            }
        }
        if self.k < 1 {
            return fail("signature size k must be at least 1".into());
        }
        if self.n_start < 1 || self.n_start > self.n_max {
            return fail(format!(
                "need 1 <= n_start <= n_max, got n_start={} n_max={}",
                self.n_start, self.n_max
            ));
        }
        if let Some(f) = self.seed_floor {
            if !(f.is_finite() && f >= 0.0) {
                return fail(format!("seed_floor must be a non-negative number, got {f}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedCoverage {
    pub seed: String,
    pub in_vocabulary: bool,
    pub max_weight: Option<f64>,
    pub best_topic: Option<usize>,
    pub covered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub seed_floor: f64,
    pub seeds: Vec<SeedCoverage>,
}

impl CoverageReport {
    pub fn all_covered(&self) -> bool {
        self.seeds.iter().all(|s| s.covered)
    }

    pub fn uncovered(&self) -> impl Iterator<Item = &SeedCoverage> {
        self.seeds.iter().filter(|s| !s.covered)
    }
}

/// One vocabulary-sized step above the heaviest smoothing floor:
/// `max_m floor_m + 1 / (10 V)`.
pub fn default_seed_floor(model: &LdaModel) -> f64 {
    let floor = model.smoothing_floor().iter().copied().fold(0.0, f64::max);
    floor + 1.0 / (10.0 * model.vocab_size().max(1) as f64)
}

pub fn check_seed_coverage(model: &LdaModel, vocab: &Vocabulary, spec: &SeedSpec) -> CoverageReport {
    let seed_floor = spec.seed_floor.unwrap_or_else(|| default_seed_floor(model));
    let seeds = spec
        .seeds
        .iter()
        .map(|seed| match vocab.position(seed) {
            None => SeedCoverage {
                seed: seed.clone(),
                in_vocabulary: false,
                max_weight: None,
                best_topic: None,
                covered: false,
            },
            Some(term) => {
                let (best_topic, max_weight) = (0..model.n_topics())
                    .map(|m| (m, model.word_weight(m, term).expect("term in vocabulary")))
                    .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
                SeedCoverage {
                    seed: seed.clone(),
                    in_vocabulary: true,
                    max_weight: Some(max_weight),
                    best_topic: Some(best_topic),
                    covered: max_weight >= seed_floor,
                }
            }
        })
        .collect();
    CoverageReport { seed_floor, seeds }
}

/// LDA topics sharing a seed label, with their merged word weights.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicGroup {
    pub seed: String,
    pub seed_term: usize,
    pub member_topics: Vec<usize>,
    /// Indexed by vocabulary position.
    pub group_weight: Vec<f64>,
}

/// Labels each topic with its heaviest seed (earlier seeds win ties) and
/// returns one group per seed, in seed order. A seed that labels no topic
/// gets an empty group.
pub fn label_topics(
    model: &LdaModel,
    vocab: &Vocabulary,
    seeds: &[String],
    aggregation: GroupAggregation,
) -> Result<Vec<TopicGroup>> {
    let seed_terms = seeds
        .iter()
        .map(|s| {
            vocab
                .position(s)
                .ok_or_else(|| Error::InvalidConfig(format!("seed `{s}` is not in the vocabulary")))
        })
        .collect::<Result<Vec<_>>>()?;
    let v = model.vocab_size();
    let mut groups: Vec<TopicGroup> = seeds
        .iter()
        .zip(&seed_terms)
        .map(|(seed, &seed_term)| TopicGroup {
            seed: seed.clone(),
            seed_term,
            member_topics: Vec::new(),
            group_weight: vec![0.0; v],
        })
        .collect();
    for m in 0..model.n_topics() {
        let row = model.topic(m)?;
        let mut label = 0;
        for (i, &t) in seed_terms.iter().enumerate().skip(1) {
            if row[t] > row[seed_terms[label]] {
                label = i;
            }
        }
        let group = &mut groups[label];
        group.member_topics.push(m);
        for (acc, &w) in group.group_weight.iter_mut().zip(row) {
            *acc = match aggregation {
                GroupAggregation::Sum => *acc + w,
                GroupAggregation::Max => acc.max(w),
            };
        }
    }
    Ok(groups)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignatureTerm {
    pub term: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InducedTopic {
    pub seed: String,
    /// Seed first, then terms in the order they were claimed.
    pub signature: Vec<SignatureTerm>,
    pub member_topics: Vec<usize>,
}

impl InducedTopic {
    pub fn terms(&self) -> Vec<String> {
        self.signature.iter().map(|t| t.term.clone()).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.signature.iter().map(|t| t.weight).collect()
    }
}

/// A group ran out of candidate words before reaching `k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExhaustionWarning {
    pub seed: String,
    pub produced: usize,
    pub requested: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signatures {
    pub topics: Vec<InducedTopic>,
    pub warnings: Vec<ExhaustionWarning>,
}

/// Term positions claimed by each group, seed first, plus which groups
/// exhausted their pool.
pub fn allocate_signatures(groups: &[TopicGroup], k: usize) -> (Vec<Vec<usize>>, Vec<bool>) {
    let seeds: HashSet<usize> = groups.iter().map(|g| g.seed_term).collect();
    let mut assigned = seeds.clone();
    let mut signatures: Vec<Vec<usize>> = groups.iter().map(|g| vec![g.seed_term]).collect();
    let mut exhausted = vec![false; groups.len()];

    // candidate pools, heaviest first, lower position on ties
    let pools: Vec<Vec<usize>> = groups
        .iter()
        .map(|g| {
            let mut pool: Vec<usize> = (0..g.group_weight.len())
                .filter(|t| g.group_weight[*t] > 0.0 && !seeds.contains(t))
                .collect();
            pool.sort_by(|&a, &b| g.group_weight[b].total_cmp(&g.group_weight[a]).then(a.cmp(&b)));
            pool
        })
        .collect();
    let mut cursor = vec![0usize; groups.len()];

    let mut active: Vec<usize> = (0..groups.len()).filter(|&g| signatures[g].len() < k).collect();
    while !active.is_empty() {
        let mut pending = active.clone();
        while !pending.is_empty() {
            let mut nominations: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            pending.retain(|&g| {
                let pool = &pools[g];
                while cursor[g] < pool.len() && assigned.contains(&pool[cursor[g]]) {
                    cursor[g] += 1;
                }
                match pool.get(cursor[g]) {
                    Some(&term) => {
                        nominations.entry(term).or_default().push(g);
                        true
                    }
                    None => {
                        exhausted[g] = true;
                        false
                    }
                }
            });
            for (term, nominees) in nominations {
                // nominees are in group order, so the first maximum wins ties
                let winner = nominees
                    .iter()
                    .copied()
                    .reduce(|best, g| {
                        if groups[g].group_weight[term] > groups[best].group_weight[term] {
                            g
                        } else {
                            best
                        }
                    })
                    .expect("at least one nominee");
                assigned.insert(term);
                signatures[winner].push(term);
                pending.retain(|&g| g != winner);
            }
        }
        active.retain(|&g| !exhausted[g] && signatures[g].len() < k);
    }
    (signatures, exhausted)
}

pub fn build_signatures(groups: &[TopicGroup], k: usize, vocab: &Vocabulary) -> Signatures {
    let (allocated, exhausted) = allocate_signatures(groups, k);
    let mut warnings = Vec::new();
    let topics = groups
        .iter()
        .zip(allocated)
        .zip(exhausted)
        .map(|((group, terms), exhausted)| {
            if exhausted {
                warnings.push(ExhaustionWarning {
                    seed: group.seed.clone(),
                    produced: terms.len(),
                    requested: k,
                });
            }
            InducedTopic {
                seed: group.seed.clone(),
                signature: terms
                    .iter()
                    .map(|&t| SignatureTerm {
                        term: vocab.term(t).unwrap_or_default().to_owned(),
                        weight: group.group_weight[t],
                    })
                    .collect(),
                member_topics: group.member_topics.clone(),
            }
        })
        .collect();
    Signatures { topics, warnings }
}

/// One fit of the escalation loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscalationStep {
    pub n: usize,
    pub n_topics: usize,
    pub uncovered: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Induction {
    pub signatures: Signatures,
    pub final_n: usize,
    pub coverage: CoverageReport,
    pub steps: Vec<EscalationStep>,
    pub model: LdaModel,
}

pub fn induce_topics(
    docs: &[Document],
    vocab: &Vocabulary,
    spec: &SeedSpec,
    settings: &LdaSettings,
) -> Result<Induction> {
    induce_topics_with(vocab, spec, settings, |_, config| fit_lda(docs, vocab, config))
}

/// The escalation loop with a caller-supplied fitting step, so callers can
/// reuse a stored model or report progress. `fit` receives `n` and the
/// config for `M = n * N` topics.
pub fn induce_topics_with(
    vocab: &Vocabulary,
    spec: &SeedSpec,
    settings: &LdaSettings,
    mut fit: impl FnMut(usize, &LdaConfig) -> Result<LdaModel>,
) -> Result<Induction> {
    spec.validate()?;
    let n_seeds = spec.seeds.len();
    let mut steps = Vec::new();
    let mut last_uncovered = None;
    for n in spec.n_start..=spec.n_max {
        let config = settings.for_topics(n * n_seeds);
        let model = fit(n, &config)?;
        let coverage = check_seed_coverage(&model, vocab, spec);
        steps.push(EscalationStep {
            n,
            n_topics: config.n_topics,
            uncovered: coverage.uncovered().map(|s| s.seed.clone()).collect(),
        });
        if coverage.all_covered() {
            let groups = label_topics(&model, vocab, &spec.seeds, spec.aggregation)?;
            return Ok(Induction {
                signatures: build_signatures(&groups, spec.k, vocab),
                final_n: n,
                coverage,
                steps,
                model,
            });
        }
        // more topics cannot bring a word into the vocabulary
        if let Some(oov) = coverage.uncovered().find(|s| !s.in_vocabulary) {
            return Err(Error::SeedNeverCovered {
                seed: oov.seed.clone(),
                n_max: spec.n_max,
            });
        }
        last_uncovered = coverage.uncovered().next().map(|s| s.seed.clone());
    }
    Err(Error::SeedNeverCovered {
        seed: last_uncovered.unwrap_or_default(),
        n_max: spec.n_max,
    })
}
