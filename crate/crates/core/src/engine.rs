//! Pipeline stages over an experiment directory. The CLI subcommands and
//! the HTTP jobs are thin wrappers around these functions.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::evaluation::{self, EvaluationReport, GroundTruth};
use crate::induction::{self, GroupAggregation, SeedSpec};
use crate::lda::{self, LdaConfig, LdaModel, LdaSettings};
use crate::report::{DocumentView, ModelReference, SeedTerm, TopicsDocument};
use crate::retrieval::{self, RetrievalResult, TopicalQuery};
use crate::store::{Artifact, ArtifactKind, ExperimentDir, ExperimentLock};
use crate::text::{
    load_corpus, read_word_list, CorpusFormat, Document, LexiconTable, Pipeline, PipelineConfig,
    SuffixStemmer, Tokenizer,
};
use crate::vector::{self, TermDocumentIndex, Vocabulary};

/// Where the preprocessing configuration comes from: rule files plus
/// inline overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineOptions {
    pub stopwords_file: Option<PathBuf>,
    pub lexicon_file: Option<PathBuf>,
    pub stemmer_file: Option<PathBuf>,
    pub stopwords: Vec<String>,
    pub min_token_len: usize,
    pub lowercase: bool,
    pub strip_diacritics: bool,
    pub tokenizer: Tokenizer,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        let d = PipelineConfig::default();
        Self {
            stopwords_file: None,
            lexicon_file: None,
            stemmer_file: None,
            stopwords: Vec::new(),
            min_token_len: d.min_token_len,
            lowercase: d.lowercase,
            strip_diacritics: d.strip_diacritics,
            tokenizer: d.tokenizer,
        }
    }
}

impl PipelineOptions {
    pub fn build(&self) -> Result<Pipeline> {
        let mut config = PipelineConfig {
            min_token_len: self.min_token_len,
            lowercase: self.lowercase,
            strip_diacritics: self.strip_diacritics,
            tokenizer: self.tokenizer,
            ..PipelineConfig::default()
        };
        let mut stopwords = self.stopwords.clone();
        if let Some(path) = &self.stopwords_file {
            stopwords.extend(read_word_list(path)?);
        }
        // stopwords are compared against normalized tokens
        config.stopwords = stopwords
            .iter()
            .map(|w| crate::text::normalize_text(w, config.lowercase, config.strip_diacritics))
            .collect();
        if let Some(path) = &self.stemmer_file {
            config.stemmer = SuffixStemmer::from_file(path)?;
        }
        let lexicon = match &self.lexicon_file {
            Some(path) => LexiconTable::from_file(path)?,
            None => LexiconTable::default(),
        };
        Pipeline::new(config, lexicon)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub documents: usize,
    pub empty_documents: usize,
    pub tokens: usize,
}

/// Loads, preprocesses and stores a corpus together with its pipeline.
pub fn ingest(
    lock: &ExperimentLock,
    corpus: &Path,
    format: CorpusFormat,
    pipeline: &Pipeline,
) -> Result<IngestSummary> {
    let raw = load_corpus(corpus, format)?;
    let docs = pipeline.preprocess_all(&raw);
    lock.save_artifact(&Artifact::Pipeline(pipeline.clone()), json!({}))?;
    lock.save_artifact(
        &Artifact::Corpus(docs.clone()),
        json!({ "source": corpus.display().to_string(), "format": format }),
    )?;
    Ok(IngestSummary {
        documents: docs.len(),
        empty_documents: docs.iter().filter(|d| d.tokens.is_empty()).count(),
        tokens: docs.iter().map(|d| d.tokens.len()).sum(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IndexOptions {
    pub min_df: u32,
    pub max_df_ratio: f64,
}

impl Default for IndexOptions {
    fn default() -> Self {
        Self {
            min_df: vector::DEFAULT_MIN_DF,
            max_df_ratio: vector::DEFAULT_MAX_DF_RATIO,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexSummary {
    pub n_docs: usize,
    pub vocab_size: usize,
    pub nonzeros: usize,
}

pub fn build_index(lock: &ExperimentLock, options: IndexOptions) -> Result<(IndexSummary, TermDocumentIndex)> {
    let docs = lock.dir().load_corpus()?;
    let vocab = vector::build_vocabulary(&docs, options.min_df, options.max_df_ratio)?;
    let config = serde_json::to_value(options).expect("serializable");
    lock.save_artifact(&Artifact::Vocab(vocab.clone()), config.clone())?;
    let index = vector::build_index(&docs, vocab)?;
    lock.save_artifact(&Artifact::Index(index.clone()), config)?;
    let summary = IndexSummary {
        n_docs: index.n_docs(),
        vocab_size: index.vocabulary().len(),
        nonzeros: index.doc_vectors().iter().map(|v| v.nnz()).sum(),
    };
    Ok((summary, index))
}

/// Sampler options a user may set on the command line or in a request body.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LdaOverrides {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub iterations: Option<usize>,
    pub burn_in: Option<usize>,
    pub seed: Option<u64>,
}

impl LdaOverrides {
    pub fn is_empty(&self) -> bool {
        self == &Self::default()
    }

    /// A shorter run keeps the default proportions: half burn-in, and
    /// about ten snapshots but never further apart than the default lag.
    pub fn apply(&self, base: LdaSettings) -> LdaSettings {
        let mut s = base;
        if let Some(a) = self.alpha {
            s.alpha = Some(a);
        }
        if let Some(b) = self.beta {
            s.beta = b;
        }
        if let Some(it) = self.iterations {
            s.iterations = it;
            s.burn_in = self.burn_in.unwrap_or(it / 2);
            s.sample_lag = (it.saturating_sub(s.burn_in) / 10).clamp(1, LdaSettings::default().sample_lag);
        } else if let Some(b) = self.burn_in {
            s.burn_in = b;
        }
        if let Some(seed) = self.seed {
            s.rng_seed = seed;
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaRequest {
    pub topics_of_interest: usize,
    pub fragment: usize,
    #[serde(default)]
    pub settings: LdaSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaSummary {
    pub n_topics: usize,
    pub iterations: usize,
    pub final_log_likelihood: Option<f64>,
    pub model: ModelReference,
}

/// Fits `M = fragment * topics_of_interest` topics and stores the model.
/// `progress` receives the completed fraction after each sweep.
pub fn fit_model(
    lock: &ExperimentLock,
    request: &LdaRequest,
    mut progress: impl FnMut(f64),
) -> Result<LdaSummary> {
    if request.topics_of_interest < 1 || request.fragment < 1 {
        return Err(Error::InvalidConfig("N and n must both be at least 1".into()));
    }
    let config = request.settings.for_topics(request.topics_of_interest * request.fragment);
    config.validate()?;
    let docs = lock.dir().load_corpus()?;
    let vocab = lock.dir().load_vocab()?;
    let model = lda::fit_lda_with_observer(&docs, &vocab, &config, |s| {
        progress(s.sweep as f64 / s.iterations as f64)
    })?;
    let reference = save_model(lock, &model)?;
    Ok(LdaSummary {
        n_topics: model.n_topics(),
        iterations: config.iterations,
        final_log_likelihood: model.log_likelihood_trace().last().copied(),
        model: reference,
    })
}

fn save_model(lock: &ExperimentLock, model: &LdaModel) -> Result<ModelReference> {
    let config = serde_json::to_value(model.config()).expect("serializable");
    let entry = lock.save_artifact(&Artifact::Model(model.clone()), config)?;
    Ok(ModelReference {
        file: entry.file,
        sha256: entry.sha256,
        n_topics: model.n_topics(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InduceRequest {
    /// Seeds as typed; they go through the experiment's pipeline.
    pub seeds: Vec<String>,
    #[serde(default = "default_k", alias = "K")]
    pub k: usize,
    #[serde(default = "default_n_start")]
    pub n_start: usize,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default)]
    pub seed_floor: Option<f64>,
    #[serde(default)]
    pub aggregation: GroupAggregation,
    /// Sampler settings for refits; defaults to those of the stored model.
    #[serde(default)]
    pub settings: Option<LdaSettings>,
}

fn default_k() -> usize {
    induction::DEFAULT_SIGNATURE_SIZE
}
fn default_n_start() -> usize {
    induction::DEFAULT_N_START
}
fn default_n_max() -> usize {
    induction::DEFAULT_N_MAX
}

impl InduceRequest {
    pub fn new(seeds: Vec<String>) -> Self {
        Self {
            seeds,
            k: default_k(),
            n_start: default_n_start(),
            n_max: default_n_max(),
            seed_floor: None,
            aggregation: GroupAggregation::Sum,
            settings: None,
        }
    }

    /// Explicit sampler options start from the defaults; none at all means
    /// "reuse or mirror the stored model".
    pub fn with_overrides(mut self, overrides: &LdaOverrides) -> Self {
        self.settings = (!overrides.is_empty()).then(|| overrides.apply(LdaSettings::default()));
        self
    }

    /// Checks everything that does not need the experiment.
    pub fn validate(&self) -> Result<()> {
        SeedSpec {
            seeds: self.seeds.clone(),
            k: self.k,
            n_start: self.n_start,
            n_max: self.n_max,
            seed_floor: self.seed_floor,
            aggregation: self.aggregation,
        }
        .validate()?;
        if let Some(s) = &self.settings {
            s.for_topics(self.seeds.len() * self.n_start).validate()?;
        }
        Ok(())
    }
}

/// Maps user-typed words into index form: exact vocabulary matches are
/// kept, anything else goes through the pipeline.
pub fn resolve_terms(raw: &[String], pipeline: &Pipeline, vocab: &Vocabulary) -> Vec<SeedTerm> {
    raw.iter()
        .map(|input| {
            let term = if vocab.position(input).is_some() {
                input.clone()
            } else {
                pipeline.analyze_term(input).unwrap_or_else(|| input.clone())
            };
            SeedTerm {
                input: input.clone(),
                term,
            }
        })
        .collect()
}

fn settings_from(config: &LdaConfig) -> LdaSettings {
    let auto_alpha = 50.0 / config.n_topics as f64;
    LdaSettings {
        alpha: (config.alpha != auto_alpha).then_some(config.alpha),
        beta: config.beta,
        iterations: config.iterations,
        burn_in: config.burn_in,
        sample_lag: config.sample_lag,
        use_last_sweep: config.use_last_sweep,
        rng_seed: config.rng_seed,
    }
}


/// Runs the escalation loop and stores the model it settled on plus the
/// topics. A stored model with the right topic count is reused instead of
/// refitting. `progress` receives `(n, fraction of that fit)`.
pub fn induce(
    lock: &ExperimentLock,
    request: &InduceRequest,
    mut progress: impl FnMut(usize, f64),
) -> Result<TopicsDocument> {
    let dir = lock.dir();
    let pipeline = dir.load_pipeline()?;
    let docs = dir.load_corpus()?;
    let vocab = dir.load_vocab()?;
    let stored = if dir.has(&ArtifactKind::Model) {
        Some(dir.load_model()?)
    } else {
        None
    };

    let seeds = resolve_terms(&request.seeds, &pipeline, &vocab);
    let spec = SeedSpec {
        seeds: seeds.iter().map(|s| s.term.clone()).collect(),
        k: request.k,
        n_start: request.n_start,
        n_max: request.n_max,
        seed_floor: request.seed_floor,
        aggregation: request.aggregation,
    };
    spec.validate()?;
    let reuse = request.settings.is_none();
    let settings = match (&request.settings, &stored) {
        (Some(s), _) => s.clone(),
        (None, Some(m)) => settings_from(m.config()),
        (None, None) => LdaSettings::default(),
    };

    let mut reused = false;
    let outcome = induction::induce_topics_with(&vocab, &spec, &settings, |n, config| {
        if let Some(m) = stored.as_ref().filter(|m| reuse && m.n_topics() == config.n_topics) {
            reused = true;
            progress(n, 1.0);
            return Ok(m.clone());
        }
        reused = false;
        lda::fit_lda_with_observer(&docs, &vocab, config, |s| {
            progress(n, s.sweep as f64 / s.iterations as f64)
        })
    })?;

    let model_ref = if reused {
        let entry = dir.entry(&ArtifactKind::Model)?;
        ModelReference {
            file: entry.file,
            sha256: entry.sha256,
            n_topics: outcome.model.n_topics(),
        }
    } else {
        save_model(lock, &outcome.model)?
    };
    let topics = TopicsDocument {
        seeds,
        k: spec.k,
        final_n: outcome.final_n,
        n_topics: outcome.model.n_topics(),
        aggregation: spec.aggregation,
        model: model_ref,
        topics: outcome.signatures.topics,
        warnings: outcome.signatures.warnings,
        coverage: outcome.coverage,
        escalation: outcome.steps,
    };
    lock.save_artifact(
        &Artifact::Topics(topics.clone()),
        serde_json::to_value(request).expect("serializable"),
    )?;
    Ok(topics)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRequest {
    #[serde(default)]
    pub terms: Option<Vec<String>>,
    /// Seed of a stored induced topic whose signature becomes the query.
    #[serde(default, alias = "topic_ref")]
    pub topic: Option<String>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub min_terms: u32,
    #[serde(default)]
    pub limit: Option<usize>,
    /// Weight signature terms by their group weight (topic queries only).
    #[serde(default)]
    pub weighted: bool,
}

fn default_threshold() -> f64 {
    retrieval::DEFAULT_THRESHOLD
}

impl QueryRequest {
    /// Checks everything that does not need an index.
    pub fn validate(&self) -> Result<()> {
        match (&self.terms, &self.topic) {
            (Some(_), Some(_)) => {
                return Err(Error::InvalidConfig("give either terms or a topic, not both".into()))
            }
            (None, None) => return Err(Error::InvalidConfig("give terms or a topic".into())),
            (Some(t), None) if t.is_empty() => {
                return Err(Error::InvalidConfig("query needs at least one term".into()))
            }
            _ => {}
        }
        if self.weighted && self.topic.is_none() {
            return Err(Error::InvalidConfig("weighted queries need a topic".into()));
        }
        TopicalQuery::new(vec![String::new()], self.threshold, self.min_terms, self.limit).map(|_| ())
    }
}

pub fn run_query(
    index: &TermDocumentIndex,
    pipeline: &Pipeline,
    topics: Option<&TopicsDocument>,
    request: &QueryRequest,
) -> Result<RetrievalResult> {
    request.validate()?;
    let query = match (&request.terms, &request.topic) {
        (Some(terms), _) => {
            let resolved = resolve_terms(terms, pipeline, index.vocabulary());
            TopicalQuery::new(
                resolved.into_iter().map(|s| s.term).collect(),
                request.threshold,
                request.min_terms,
                request.limit,
            )?
        }
        (None, Some(seed)) => {
            let topics = topics.ok_or_else(|| Error::MissingArtifact("topics".into()))?;
            let topic = topics.topic(seed)?;
            let q = TopicalQuery::new(topic.terms(), request.threshold, request.min_terms, request.limit)?;
            if request.weighted {
                q.with_term_weights(topic.weights())?
            } else {
                q
            }
        }
        (None, None) => unreachable!("validated"),
    };
    retrieval::retrieve(&query, index)
}

pub fn document_view(doc: &Document) -> DocumentView {
    DocumentView {
        id: doc.id.clone(),
        date: doc.date,
        text: doc.raw_text.clone(),
        token_count: doc.tokens.len(),
    }
}

/// Scores a stored retrieval result against a ground-truth id list.
pub fn evaluate_result(
    result: &RetrievalResult,
    relevant: HashSet<String>,
    corpus_size: u64,
    top_k: usize,
) -> Result<EvaluationReport> {
    let truth = GroundTruth::new(relevant, corpus_size)?;
    let ranked: Vec<String> = result.hits.iter().map(|h| h.id.clone()).collect();
    evaluation::evaluate(&ranked, &truth, top_k)
}

/// Convenience for callers that only have a path.
pub fn open_experiment(root: &Path) -> Result<ExperimentDir> {
    ExperimentDir::open(root)
}
