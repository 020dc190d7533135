//! Latent Dirichlet allocation fitted by collapsed Gibbs sampling.
//!
//! The sampler keeps the usual three count tables (document-topic,
//! topic-word, topic totals) and resamples every token's topic once per
//! sweep. The reported topic-word matrix is the smoothed estimate
//! `(n_kw + beta) / (n_k + V beta)` averaged over post-burn-in snapshots.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::text::Document;
use crate::vector::Vocabulary;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub n_topics: usize,
    pub alpha: f64,
    pub beta: f64,
    pub iterations: usize,
    pub burn_in: usize,
    pub sample_lag: usize,
    /// Report the final sweep instead of the snapshot average.
    #[serde(default)]
    pub use_last_sweep: bool,
    pub rng_seed: u64,
}

impl LdaConfig {
    /// Defaults: alpha = 50/M, beta = 0.01, 1000 sweeps with 500 burn-in
    /// and a snapshot every 50.
    pub fn new(n_topics: usize) -> Self {
        LdaSettings::default().for_topics(n_topics)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidConfig(m));
        if self.n_topics < 1 {
            return fail("number of topics must be at least 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return fail(format!("alpha must be positive, got {}", self.alpha));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return fail(format!("beta must be positive, got {}", self.beta));
        }
        if self.iterations <= self.burn_in {
            return fail(format!(
                "iterations ({}) must exceed burn_in ({})",
                self.iterations, self.burn_in
            ));
        }
        if self.sample_lag < 1 {
            return fail("sample_lag must be at least 1".into());
        }
        Ok(())
    }
}

/// Sampler settings without a topic count; the induction loop stamps out one
/// [`LdaConfig`] per fragmentation factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LdaSettings {
    /// `None` means 50 / M.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub burn_in: usize,
    pub sample_lag: usize,
    pub use_last_sweep: bool,
    pub rng_seed: u64,
}

impl Default for LdaSettings {
    fn default() -> Self {
        Self {
            alpha: None,
            beta: 0.01,
            iterations: 1000,
            burn_in: 500,
            sample_lag: 50,
            use_last_sweep: false,
            rng_seed: 0,
        }
    }
}

impl LdaSettings {
    pub fn for_topics(&self, n_topics: usize) -> LdaConfig {
        LdaConfig {
            n_topics,
            alpha: self.alpha.unwrap_or(50.0 / n_topics.max(1) as f64),
            beta: self.beta,
            iterations: self.iterations,
            burn_in: self.burn_in,
            sample_lag: self.sample_lag,
            use_last_sweep: self.use_last_sweep,
            rng_seed: self.rng_seed,
        }
    }
}

/// Per-sweep diagnostics handed to an observer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepStats {
    /// 1-based sweep number.
    pub sweep: usize,
    pub iterations: usize,
    /// Sum of the topic-word count table after the sweep.
    pub assigned_tokens: u64,
    /// In-vocabulary tokens in the corpus.
    pub corpus_tokens: u64,
    /// `log p(w | z)` under the current assignment.
    pub log_likelihood: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel {
    config: LdaConfig,
    vocab_size: usize,
    /// Row-major `n_topics x vocab_size`.
    topic_word: Vec<f64>,
    /// Weight a never-assigned word gets in each topic.
    smoothing_floor: Vec<f64>,
    log_likelihood_trace: Vec<f64>,
}

impl LdaModel {
    /// Reassembles a stored model. Rows must be probability distributions.
    pub fn from_parts(
        config: LdaConfig,
        vocab_size: usize,
        topic_word: Vec<f64>,
        smoothing_floor: Vec<f64>,
        log_likelihood_trace: Vec<f64>,
    ) -> Result<Self> {
        config.validate()?;
        let m = config.n_topics;
        if topic_word.len() != m * vocab_size || smoothing_floor.len() != m {
            return Err(Error::InvalidConfig("model matrix has the wrong shape".into()));
        }
        if topic_word.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidConfig("model weights must be finite and non-negative".into()));
        }
        Ok(Self {
            config,
            vocab_size,
            topic_word,
            smoothing_floor,
            log_likelihood_trace,
        })
    }

    pub fn config(&self) -> &LdaConfig {
        &self.config
    }

    pub fn n_topics(&self) -> usize {
        self.config.n_topics
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn topic_word(&self) -> &[f64] {
        &self.topic_word
    }

    pub fn smoothing_floor(&self) -> &[f64] {
        &self.smoothing_floor
    }

    pub fn log_likelihood_trace(&self) -> &[f64] {
        &self.log_likelihood_trace
    }

    pub fn topic(&self, topic: usize) -> Result<&[f64]> {
        if topic >= self.n_topics() {
            return Err(Error::IndexOutOfRange {
                what: "topic",
                index: topic,
                len: self.n_topics(),
            });
        }
        let v = self.vocab_size;
        Ok(&self.topic_word[topic * v..(topic + 1) * v])
    }

    pub fn word_weight(&self, topic: usize, term: usize) -> Result<f64> {
        let row = self.topic(topic)?;
        row.get(term).copied().ok_or(Error::IndexOutOfRange {
            what: "term",
            index: term,
            len: self.vocab_size,
        })
    }

    /// The `k` heaviest terms of a topic; ties go to the lower position.
    pub fn top_words(&self, topic: usize, k: usize) -> Result<Vec<(usize, f64)>> {
        let row = self.topic(topic)?;
        let mut ranked: Vec<(usize, f64)> = row.iter().copied().enumerate().collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        ranked.truncate(k);
        Ok(ranked)
    }
}

pub fn fit_lda(docs: &[Document], vocab: &Vocabulary, config: &LdaConfig) -> Result<LdaModel> {
    fit_lda_with_observer(docs, vocab, config, |_| {})
}

/// Like [`fit_lda`], calling `observer` after every sweep.
pub fn fit_lda_with_observer(
    docs: &[Document],
    vocab: &Vocabulary,
    config: &LdaConfig,
    mut observer: impl FnMut(&SweepStats),
) -> Result<LdaModel> {
    config.validate()?;
    let corpus: Vec<Vec<usize>> = docs
        .iter()
        .map(|d| vocab.encode(&d.tokens))
        .filter(|d| !d.is_empty())
        .collect();
    if corpus.is_empty() || vocab.is_empty() {
        return Err(Error::EmptyCorpus);
    }

    let mut sampler = GibbsSampler::new(&corpus, vocab.len(), config);
    let (m, v) = (config.n_topics, vocab.len());
    let mut phi_sum = vec![0.0; m * v];
    let mut floor_sum = vec![0.0; m];
    let mut snapshots = 0usize;
    let mut trace = Vec::with_capacity(config.iterations);

    for sweep in 1..=config.iterations {
        sampler.sweep();
        let stats = SweepStats {
            sweep,
            iterations: config.iterations,
            assigned_tokens: sampler.assigned_tokens(),
            corpus_tokens: sampler.corpus_tokens(),
            log_likelihood: sampler.log_likelihood(),
        };
        trace.push(stats.log_likelihood);
        observer(&stats);

        let take = if config.use_last_sweep {
            sweep == config.iterations
        } else {
            (sweep > config.burn_in && (sweep - config.burn_in) % config.sample_lag == 0)
                || (sweep == config.iterations && snapshots == 0)
        };
        if take {
            sampler.accumulate_phi(&mut phi_sum, &mut floor_sum);
            snapshots += 1;
        }
    }

    let scale = 1.0 / snapshots as f64;
    phi_sum.iter_mut().for_each(|w| *w *= scale);
    floor_sum.iter_mut().for_each(|w| *w *= scale);
    LdaModel::from_parts(config.clone(), v, phi_sum, floor_sum, trace)
}

struct GibbsSampler<'a> {
    docs: &'a [Vec<usize>],
    n_topics: usize,
    vocab_size: usize,
    alpha: f64,
    beta: f64,
    /// Topic of every token, flattened in document order.
    assignment: Vec<u32>,
    /// `doc * M + topic`
    doc_topic: Vec<u32>,
    /// `word * M + topic`; word-major so one token's column is contiguous.
    word_topic: Vec<u32>,
    topic_total: Vec<u32>,
    rng: ChaCha8Rng,
    probs: Vec<f64>,
}

impl<'a> GibbsSampler<'a> {
    fn new(docs: &'a [Vec<usize>], vocab_size: usize, config: &LdaConfig) -> Self {
        let m = config.n_topics;
        let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
        let n_tokens: usize = docs.iter().map(Vec::len).sum();
        let mut s = Self {
            docs,
            n_topics: m,
            vocab_size,
            alpha: config.alpha,
            beta: config.beta,
            assignment: Vec::with_capacity(n_tokens),
            doc_topic: vec![0; docs.len() * m],
            word_topic: vec![0; vocab_size * m],
            topic_total: vec![0; m],
            rng: ChaCha8Rng::seed_from_u64(0),
            probs: vec![0.0; m],
        };
        for (d, doc) in docs.iter().enumerate() {
            for &w in doc {
                let k = rng.random_range(0..m);
                s.assignment.push(k as u32);
                s.doc_topic[d * m + k] += 1;
                s.word_topic[w * m + k] += 1;
                s.topic_total[k] += 1;
            }
        }
        s.rng = rng;
        s
    }

    fn sweep(&mut self) {
        let m = self.n_topics;
        let vbeta = self.vocab_size as f64 * self.beta;
        let mut pos = 0;
        for (d, doc) in self.docs.iter().enumerate() {
            let dt = &mut self.doc_topic[d * m..(d + 1) * m];
            for &w in doc {
                let old = self.assignment[pos] as usize;
                let wt = &mut self.word_topic[w * m..(w + 1) * m];
                dt[old] -= 1;
                wt[old] -= 1;
                self.topic_total[old] -= 1;

                let mut total = 0.0;
                for k in 0..m {
                    total += (dt[k] as f64 + self.alpha) * (wt[k] as f64 + self.beta)
                        / (self.topic_total[k] as f64 + vbeta);
                    self.probs[k] = total;
                }
                let u = self.rng.random::<f64>() * total;
                let new = self.probs.partition_point(|&c| c <= u).min(m - 1);

                dt[new] += 1;
                wt[new] += 1;
                self.topic_total[new] += 1;
                self.assignment[pos] = new as u32;
                pos += 1;
            }
        }
    }

    fn corpus_tokens(&self) -> u64 {
        self.assignment.len() as u64
    }

    fn assigned_tokens(&self) -> u64 {
        self.word_topic.iter().map(|&c| c as u64).sum()
    }

    fn log_likelihood(&self) -> f64 {
        let (m, v) = (self.n_topics, self.vocab_size);
        let vbeta = v as f64 * self.beta;
        let lg_beta = ln_gamma(self.beta);
        let mut ll = m as f64 * ln_gamma(vbeta);
        for k in 0..m {
            ll -= ln_gamma(self.topic_total[k] as f64 + vbeta);
        }
        for col in self.word_topic.chunks_exact(m) {
            for &c in col {
                if c > 0 {
                    ll += ln_gamma(c as f64 + self.beta) - lg_beta;
                }
            }
        }
        ll
    }

    fn accumulate_phi(&self, phi: &mut [f64], floor: &mut [f64]) {
        let (m, v) = (self.n_topics, self.vocab_size);
        for k in 0..m {
            let denom = self.topic_total[k] as f64 + v as f64 * self.beta;
            floor[k] += self.beta / denom;
            let row = &mut phi[k * v..(k + 1) * v];
            for (w, slot) in row.iter_mut().enumerate() {
                *slot += (self.word_topic[w * m + k] as f64 + self.beta) / denom;
            }
        }
    }
}
