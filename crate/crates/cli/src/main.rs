use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use topicnav_core::engine::{
    self, IndexOptions, InduceRequest, LdaOverrides, LdaRequest, PipelineOptions, QueryRequest,
};
use topicnav_core::evaluation::{evaluate, EvaluationReport, GroundTruth};
use topicnav_core::induction::GroupAggregation;
use topicnav_core::lda::LdaSettings;
use topicnav_core::report::{to_json, TopicsDocument};
use topicnav_core::retrieval::RetrievalResult;
use topicnav_core::store::{Artifact, ExperimentDir};
use topicnav_core::synthetic::{self, SyntheticSpec};
use topicnav_core::text::{CorpusFormat, Tokenizer};
use topicnav_core::{Error, ErrorClass, Result};

#[derive(Debug, Parser)]
#[command(name = "topicnav", version, about = "Seed-guided topic navigation over noisy text corpora")]
struct Cli {
    /// Print machine-readable JSON instead of a human summary.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load and preprocess a corpus into a new experiment directory.
    Ingest(IngestArgs),
    /// Build the vocabulary and TF-IDF index.
    Index(IndexArgs),
    /// Fit an LDA model with N * n topics.
    Lda(LdaArgs),
    /// Induce one signature per seed, refitting with more topics as needed.
    Induce(InduceArgs),
    /// Rank documents against an induced topic or a list of terms.
    Query(QueryArgs),
    /// Score a saved query result against ground-truth labels.
    Eval(EvalArgs),
    /// Recompute every artifact hash in an experiment.
    Verify(ExpArg),
    /// Serve experiments over HTTP.
    Serve(ServeArgs),
    /// Write a synthetic planted-topic corpus for demos and tests.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Jsonl,
    Dir,
}

impl From<FormatArg> for CorpusFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Jsonl => CorpusFormat::Jsonl,
            FormatArg::Dir => CorpusFormat::Dir,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TokenizerArg {
    Words,
    LettersOnly,
}

#[derive(Debug, Args)]
struct IngestArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, value_enum, default_value = "jsonl")]
    format: FormatArg,
    /// One stopword per line.
    #[arg(long)]
    stopwords: Option<PathBuf>,
    /// Tab-separated variant and canonical form per line.
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Tab-separated suffix and replacement per line.
    #[arg(long)]
    stemmer: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    min_token_len: usize,
    #[arg(long)]
    strip_diacritics: bool,
    #[arg(long)]
    keep_case: bool,
    #[arg(long, value_enum, default_value = "words")]
    tokenizer: TokenizerArg,
    /// Experiment directory to create or reset.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ExpArg {
    #[arg(long)]
    exp: PathBuf,
}

#[derive(Debug, Args)]
struct IndexArgs {
    #[arg(long)]
    exp: PathBuf,
    #[arg(long, default_value_t = 2)]
    min_df: u32,
    #[arg(long, default_value_t = 0.5)]
    max_df_ratio: f64,
}

#[derive(Debug, Args)]
struct SamplerArgs {
    /// Document-topic prior; defaults to 50 / topics.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

impl SamplerArgs {
    fn overrides(&self) -> LdaOverrides {
        LdaOverrides {
            alpha: self.alpha,
            beta: self.beta,
            iterations: self.iters,
            burn_in: self.burn_in,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Args)]
struct LdaArgs {
    #[arg(long)]
    exp: PathBuf,
    /// Number of topics the user cares about (N).
    #[arg(long = "n-topics-of-interest")]
    topics_of_interest: usize,
    /// Topics fitted per topic of interest (n).
    #[arg(long)]
    fragment: usize,
    #[command(flatten)]
    sampler: SamplerArgs,
}

#[derive(Debug, Args)]
struct InduceArgs {
    #[arg(long)]
    exp: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    seeds: Vec<String>,
    /// Signature size.
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 2)]
    n_start: usize,
    #[arg(long, default_value_t = 8)]
    n_max: usize,
    #[arg(long)]
    seed_floor: Option<f64>,
    #[arg(long, value_enum, default_value = "sum")]
    aggregation: AggregationArg,
    #[command(flatten)]
    sampler: SamplerArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AggregationArg {
    Sum,
    Max,
}

#[derive(Debug, Args)]
struct QueryArgs {
    #[arg(long)]
    exp: PathBuf,
    /// Seed of an induced topic.
    #[arg(long, conflicts_with = "terms", required_unless_present = "terms")]
    topic: Option<String>,
    #[arg(long, value_delimiter = ',')]
    terms: Option<Vec<String>>,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    #[arg(long, default_value_t = 0)]
    min_terms: u32,
    #[arg(long)]
    limit: Option<usize>,
    /// Weight signature terms by their group weight.
    #[arg(long, requires = "topic")]
    weighted: bool,
    /// Also write the JSON result to this file.
    #[arg(long)]
    save: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Experiment whose corpus bounds the ids; the report is stored there
    /// when `--name` is given.
    #[arg(long, required_unless_present = "corpus_size")]
    exp: Option<PathBuf>,
    /// Relevant document ids, one per line.
    #[arg(long)]
    truth: PathBuf,
    /// A saved `query --json` result.
    #[arg(long)]
    predictions: PathBuf,
    #[arg(long, default_value_t = 20)]
    top_k: usize,
    /// Corpus size, when the labels refer to a corpus other than the
    /// experiment's.
    #[arg(long)]
    corpus_size: Option<u64>,
    #[arg(long, requires = "exp")]
    name: Option<String>,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long, env = "TOPICNAV_EXP_ROOT")]
    exp_root: PathBuf,
    #[arg(long, env = "TOPICNAV_LISTEN", default_value = "127.0.0.1:8080")]
    listen: SocketAddr,
    /// Build jobs allowed to run at once.
    #[arg(long, env = "TOPICNAV_JOBS", default_value_t = 1)]
    jobs: usize,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// JSON-lines corpus to write.
    #[arg(long)]
    out: PathBuf,
    /// Directory for per-topic relevant-id files and the planted words.
    #[arg(long)]
    truth_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    docs: usize,
    #[arg(long, default_value_t = 3)]
    topics: usize,
    #[arg(long, default_value_t = 0.2)]
    noise: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

fn exit_code(e: &Error) -> u8 {
    match e.class() {
        ErrorClass::Validation => 2,
        ErrorClass::Engine => 3,
        ErrorClass::Io => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(exit_code(&e))
        }
    }
}

fn emit<T: Serialize>(json: bool, value: &T, human: impl FnOnce(&T) -> String) -> Result<()> {
    let text = if json { to_json(value) } else { human(value) };
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| Error::Io {
            context: "writing output".into(),
            source: e,
        })
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io {
        context: format!("writing {}", path.display()),
        source: e,
    })
}

fn run(cli: Cli) -> Result<()> {
    let json = cli.json;
    match cli.command {
        Command::Ingest(a) => {
            let pipeline = PipelineOptions {
                stopwords_file: a.stopwords,
                lexicon_file: a.lexicon,
                stemmer_file: a.stemmer,
                stopwords: Vec::new(),
                min_token_len: a.min_token_len,
                lowercase: !a.keep_case,
                strip_diacritics: a.strip_diacritics,
                tokenizer: match a.tokenizer {
                    TokenizerArg::Words => Tokenizer::Words,
                    TokenizerArg::LettersOnly => Tokenizer::LettersOnly,
                },
            }
            .build()?;
            let dir = ExperimentDir::create(&a.out)?;
            let lock = dir.lock()?;
            let summary = engine::ingest(&lock, &a.corpus, a.format.into(), &pipeline)?;
            emit(json, &summary, |s| {
                format!(
                    "ingested {} documents ({} empty after cleaning), {} tokens\n",
                    s.documents, s.empty_documents, s.tokens
                )
            })
        }
        Command::Index(a) => {
            let options = IndexOptions {
                min_df: a.min_df,
                max_df_ratio: a.max_df_ratio,
            };
            let dir = ExperimentDir::open(&a.exp)?;
            let lock = dir.lock()?;
            let (summary, _) = engine::build_index(&lock, options)?;
            emit(json, &summary, |s| {
                format!(
                    "indexed {} documents over {} terms ({} nonzero weights)\n",
                    s.n_docs, s.vocab_size, s.nonzeros
                )
            })
        }
        Command::Lda(a) => {
            let request = LdaRequest {
                topics_of_interest: a.topics_of_interest,
                fragment: a.fragment,
                settings: a.sampler.overrides().apply(LdaSettings::default()),
            };
            let dir = ExperimentDir::open(&a.exp)?;
            let lock = dir.lock()?;
            let summary = engine::fit_model(&lock, &request, |_| {})?;
            emit(json, &summary, |s| {
                format!(
                    "fitted {} topics in {} sweeps; final log-likelihood {}\n",
                    s.n_topics,
                    s.iterations,
                    s.final_log_likelihood.map_or("n/a".into(), |l| format!("{l:.1}"))
                )
            })
        }
        Command::Induce(a) => {
            let mut request = InduceRequest::new(a.seeds).with_overrides(&a.sampler.overrides());
            request.k = a.k;
            request.n_start = a.n_start;
            request.n_max = a.n_max;
            request.seed_floor = a.seed_floor;
            request.aggregation = match a.aggregation {
                AggregationArg::Sum => GroupAggregation::Sum,
                AggregationArg::Max => GroupAggregation::Max,
            };
            request.validate()?;
            let dir = ExperimentDir::open(&a.exp)?;
            let lock = dir.lock()?;
            let topics = engine::induce(&lock, &request, |_, _| {})?;
            emit(json, &topics, render_topics)
        }
        Command::Query(a) => {
            let request = QueryRequest {
                terms: a.terms,
                topic: a.topic,
                threshold: a.threshold,
                min_terms: a.min_terms,
                limit: a.limit,
                weighted: a.weighted,
            };
            // reject bad parameters before touching the experiment
            request.validate()?;
            let dir = ExperimentDir::open(&a.exp)?;
            let index = dir.load_index()?;
            let pipeline = dir.load_pipeline()?;
            let topics = match &request.topic {
                Some(_) => Some(dir.load_topics()?),
                None => None,
            };
            let result = engine::run_query(&index, &pipeline, topics.as_ref(), &request)?;
            if let Some(path) = &a.save {
                write_file(path, &to_json(&result))?;
            }
            emit(json, &result, render_hits)
        }
        Command::Eval(a) => {
            let text = fs::read_to_string(&a.predictions).map_err(|e| Error::Io {
                context: format!("reading {}", a.predictions.display()),
                source: e,
            })?;
            let result: RetrievalResult = serde_json::from_str(&text).map_err(|e| {
                Error::InvalidConfig(format!("{} is not a saved query result: {e}", a.predictions.display()))
            })?;
            let relevant = GroundTruth::read_ids(&a.truth)?;
            let dir = a.exp.as_ref().map(ExperimentDir::open).transpose()?;
            let truth = match (a.corpus_size, &dir) {
                (Some(n), _) => GroundTruth::new(relevant, n)?,
                (None, Some(dir)) => {
                    let ids: HashSet<String> = dir.load_index()?.doc_ids().iter().cloned().collect();
                    GroundTruth::with_corpus(relevant, ids)?
                }
                (None, None) => unreachable!("clap requires one of them"),
            };
            let ranked: Vec<String> = result.hits.iter().map(|h| h.id.clone()).collect();
            let report = evaluate(&ranked, &truth, a.top_k)?;
            if let (Some(name), Some(dir)) = (a.name, &dir) {
                let lock = dir.lock()?;
                lock.save_artifact(
                    &Artifact::Eval {
                        name,
                        report: report.clone(),
                    },
                    serde_json::json!({
                        "truth": a.truth.display().to_string(),
                        "predictions": a.predictions.display().to_string(),
                        "top_k": a.top_k,
                    }),
                )?;
            }
            emit(json, &report, render_eval)
        }
        Command::Verify(a) => {
            let report = ExperimentDir::open(&a.exp)?.verify()?;
            emit(json, &report, |r| {
                let mut s = String::new();
                for c in &r.artifacts {
                    s.push_str(&format!("{:<16} {:?}\n", c.artifact, c.status));
                }
                s
            })?;
            let first = report.failures().next().map(|f| Error::Corrupt {
                artifact: f.artifact.clone(),
                message: format!("{:?}", f.status),
            });
            first.map_or(Ok(()), Err)
        }
        Command::Serve(a) => {
            tracing_subscriber::fmt()
                .with_env_filter(
                    tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
                )
                .with_writer(std::io::stderr)
                .init();
            let runtime = tokio::runtime::Builder::new_multi_thread()
                .enable_all()
                .build()
                .map_err(|e| Error::Io {
                    context: "starting runtime".into(),
                    source: e,
                })?;
            let config = topicnav_service::ServiceConfig {
                root: a.exp_root,
                job_parallelism: a.jobs,
            };
            runtime
                .block_on(topicnav_service::serve(a.listen, config))
                .map_err(|e| Error::Io {
                    context: format!("serving on {}", a.listen),
                    source: e,
                })
        }
        Command::Synth(a) => {
            if !(0.0..1.0).contains(&a.noise) || a.topics == 0 || a.docs == 0 {
                return Err(Error::InvalidConfig("need docs >= 1, topics >= 1 and noise in [0, 1)".into()));
            }
            let corpus = synthetic::generate(&SyntheticSpec {
                n_docs: a.docs,
                n_topics: a.topics,
                noise_rate: a.noise,
                seed: a.seed,
                ..SyntheticSpec::default()
            });
            write_file(&a.out, &corpus.to_jsonl())?;
            #[derive(Serialize)]
            struct Planted<'a> {
                topic: usize,
                top_words: &'a [String],
                relevant: usize,
            }
            let mut planted = Vec::new();
            for (t, topic) in corpus.topics.iter().enumerate() {
                let mut ids: Vec<String> = corpus.relevant_ids(t).into_iter().collect();
                ids.sort();
                if let Some(dir) = &a.truth_dir {
                    fs::create_dir_all(dir).map_err(|e| Error::Io {
                        context: format!("creating {}", dir.display()),
                        source: e,
                    })?;
                    write_file(&dir.join(format!("topic{t}.txt")), &(ids.join("\n") + "\n"))?;
                }
                planted.push(Planted {
                    topic: t,
                    top_words: topic.top(10),
                    relevant: ids.len(),
                });
            }
            if let Some(dir) = &a.truth_dir {
                write_file(&dir.join("planted.json"), &to_json(&planted))?;
            }
            emit(json, &planted, |p| {
                let mut s = format!("wrote {} documents to {}\n", a.docs, a.out.display());
                for t in p {
                    s.push_str(&format!("topic {}: {}\n", t.topic, t.top_words.join(" ")));
                }
                s
            })
        }
    }
}

fn render_topics(t: &TopicsDocument) -> String {
    let mut s = format!("settled at n={} ({} LDA topics), K={}\n", t.final_n, t.n_topics, t.k);
    for topic in &t.topics {
        s.push_str(&format!("{}: {}\n", topic.seed, topic.terms().join(" ")));
    }
    for w in &t.warnings {
        s.push_str(&format!(
            "warning: `{}` ran out of candidates at {} of {} terms\n",
            w.seed, w.produced, w.requested
        ));
    }
    s
}

fn render_hits(r: &RetrievalResult) -> String {
    let mut s = String::new();
    for w in &r.warnings {
        s.push_str(&format!("warning: {w}\n"));
    }
    s.push_str(&format!("{} hits for [{}]\n", r.hits.len(), r.query.terms.join(", ")));
    for (rank, h) in r.hits.iter().enumerate() {
        s.push_str(&format!("{:>4}  {:.4}  {:>5}  {}\n", rank + 1, h.score, h.doc_length, h.id));
    }
    s
}

fn render_eval(r: &EvaluationReport) -> String {
    let m = &r.matrix;
    let mut s = format!(
        "tp={} fp={} fn={} tn={} (corpus {})\nprecision {:.4}\n",
        m.tp, m.fp, m.fn_, m.tn, r.corpus_size, r.precision
    );
    if let (Some(rec), Some(f1)) = (r.recall, r.f1) {
        s.push_str(&format!("recall {rec:.4}, f1 {f1:.4} (informational)\n"));
    }
    for row in &r.top_k {
        s.push_str(&format!("top-{}: {}/{} = {:.4}\n", row.k, row.relevant_in_top_k, row.k, row.precision));
    }
    s
}
