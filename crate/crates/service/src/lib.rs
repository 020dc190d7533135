//! HTTP facade over the topic navigation engine. Builds (ingest, index,
//! LDA) run as background jobs polled through `/jobs/{id}`; topic
//! induction, retrieval and document reads are request/response.

pub mod error;
pub mod jobs;
pub mod state;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::Response;
use axum::routing::{get, post};
use axum::Router;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use topicnav_core::engine::{
    self, IndexOptions, InduceRequest, LdaOverrides, LdaRequest, PipelineOptions, QueryRequest,
};
use topicnav_core::induction::GroupAggregation;
use topicnav_core::lda::LdaSettings;
use topicnav_core::report::to_json;
use topicnav_core::store::{ArtifactKind, ManifestEntry};
use topicnav_core::text::CorpusFormat;

pub use error::{codes, ApiError};
pub use jobs::{Job, JobKind, JobState};
pub use state::{AppState, ServiceConfig};

use error::{json_response, raw_json};

type ApiResult = Result<Response, ApiError>;
type Shared = State<Arc<AppState>>;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/experiments", get(list_experiments).post(create_experiment))
        .route("/experiments/{id}", get(experiment_status))
        .route("/experiments/{id}/index", post(reindex))
        .route("/experiments/{id}/lda", post(fit_lda))
        .route("/experiments/{id}/topics", get(stored_topics).post(induce))
        .route("/experiments/{id}/query", post(query))
        .route("/experiments/{id}/documents/{*doc_id}", get(document))
        .route("/jobs/{id}", get(job))
        .with_state(state)
}

pub async fn serve(listen: SocketAddr, config: ServiceConfig) -> std::io::Result<()> {
    std::fs::create_dir_all(&config.root)?;
    let app = router(AppState::new(config));
    let listener = tokio::net::TcpListener::bind(listen).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app).await
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    let text: &[u8] = if body.iter().all(u8::is_ascii_whitespace) { b"{}" } else { body };
    serde_json::from_slice(text).map_err(|e| ApiError::bad_request(format!("invalid request body: {e}")))
}

fn accepted(job: &Job) -> Response {
    json_response(StatusCode::ACCEPTED, job)
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(format!("worker failed: {e}")))?
}

#[derive(Debug, Serialize)]
struct ExperimentSummary {
    id: String,
    artifacts: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    building: Option<String>,
}

async fn list_experiments(State(state): Shared) -> ApiResult {
    let root = state.root().to_path_buf();
    let ids = blocking(move || {
        let mut ids = Vec::new();
        let entries = std::fs::read_dir(&root).map_err(|e| ApiError::internal(e.to_string()))?;
        for entry in entries.flatten() {
            let name = entry.file_name().to_string_lossy().into_owned();
            if entry.path().join("manifest.json").is_file() && state::valid_experiment_id(&name) {
                ids.push(name);
            }
        }
        ids.sort();
        Ok(ids)
    })
    .await?;
    let list: Vec<ExperimentSummary> = ids
        .into_iter()
        .filter_map(|id| {
            let dir = state.open(&id).ok()?;
            let artifacts = dir.manifest().ok()?.artifacts.into_keys().collect();
            Some(ExperimentSummary {
                building: state.building(&id),
                id,
                artifacts,
            })
        })
        .collect();
    Ok(json_response(StatusCode::OK, &list))
}

#[derive(Debug, Serialize)]
struct ExperimentStatus {
    id: String,
    artifacts: std::collections::BTreeMap<String, ManifestEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    building: Option<String>,
}

async fn experiment_status(State(state): Shared, Path(id): Path<String>) -> ApiResult {
    let dir = state.open(&id)?;
    let status = ExperimentStatus {
        artifacts: dir.manifest()?.artifacts,
        building: state.building(&id),
        id,
    };
    Ok(json_response(StatusCode::OK, &status))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateExperiment {
    id: String,
    /// Corpus on the server's filesystem.
    #[serde(default)]
    corpus_path: Option<PathBuf>,
    /// Inline JSON-lines corpus, for uploads.
    #[serde(default)]
    corpus_jsonl: Option<String>,
    #[serde(default)]
    format: Option<CorpusFormat>,
    #[serde(default)]
    pipeline: PipelineOptions,
    #[serde(default)]
    index: IndexOptions,
}

#[derive(Debug, Serialize)]
struct BuildSummary {
    ingest: engine::IngestSummary,
    index: engine::IndexSummary,
}

/// Ingest, preprocess and index a corpus into a (new or reset) experiment.
async fn create_experiment(State(state): Shared, body: Bytes) -> ApiResult {
    let req: CreateExperiment = parse(&body)?;
    let path = state.experiment_path(&req.id)?;
    let pipeline = req.pipeline.build()?;
    let (source, format) = match (req.corpus_path, req.corpus_jsonl) {
        (Some(p), None) => (Ok(p), req.format.unwrap_or(CorpusFormat::Jsonl)),
        (None, Some(text)) => {
            if req.format.is_some_and(|f| f != CorpusFormat::Jsonl) {
                return Err(ApiError::bad_request("inline corpora are JSON lines"));
            }
            (Err(text), CorpusFormat::Jsonl)
        }
        _ => return Err(ApiError::bad_request("give exactly one of corpus_path and corpus_jsonl")),
    };
    let options = req.index;
    let dir = topicnav_core::store::ExperimentDir::create(&path)?;
    let (job, _) = state.start_build(&req.id, JobKind::Ingest, dir, move |lock, progress| {
        let corpus = match source {
            Ok(p) => p,
            Err(text) => {
                let p = lock.dir().root().join("upload.jsonl");
                std::fs::write(&p, text)
                    .map_err(|e| topicnav_core::Error::Io { context: "writing uploaded corpus".into(), source: e })?;
                p
            }
        };
        let ingest = engine::ingest(lock, &corpus, format, &pipeline)?;
        progress(0.5);
        let (index, _) = engine::build_index(lock, options)?;
        Ok(to_json(&BuildSummary { ingest, index }))
    })?;
    Ok(accepted(&job))
}

async fn reindex(State(state): Shared, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let options: IndexOptions = parse(&body)?;
    let dir = state.open(&id)?;
    if !dir.has(&ArtifactKind::Corpus) {
        return Err(ApiError::conflict("CORPUS_NOT_READY", "ingest a corpus first"));
    }
    let (job, _) = state.start_build(&id, JobKind::Index, dir, move |lock, _| {
        let (summary, _) = engine::build_index(lock, options)?;
        Ok(to_json(&summary))
    })?;
    Ok(accepted(&job))
}

#[derive(Debug, Deserialize)]
struct LdaBody {
    #[serde(rename = "N", alias = "topics_of_interest")]
    topics_of_interest: usize,
    #[serde(rename = "n", alias = "fragment")]
    fragment: usize,
    #[serde(flatten)]
    overrides: LdaOverrides,
}

async fn fit_lda(State(state): Shared, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let body: LdaBody = parse(&body)?;
    let request = LdaRequest {
        topics_of_interest: body.topics_of_interest,
        fragment: body.fragment,
        settings: body.overrides.apply(LdaSettings::default()),
    };
    if request.topics_of_interest < 1 || request.fragment < 1 {
        return Err(ApiError::from(topicnav_core::Error::InvalidConfig(
            "N and n must both be at least 1".into(),
        )));
    }
    request
        .settings
        .for_topics(request.topics_of_interest * request.fragment)
        .validate()?;
    let dir = state.open(&id)?;
    if !dir.has(&ArtifactKind::Index) {
        return Err(ApiError::conflict(codes::INDEX_NOT_READY, "build the index first"));
    }
    let (job, _) = state.start_build(&id, JobKind::Lda, dir, move |lock, progress| {
        let summary = engine::fit_model(lock, &request, progress)?;
        Ok(to_json(&summary))
    })?;
    Ok(accepted(&job))
}

#[derive(Debug, Deserialize)]
struct TopicsBody {
    seeds: Vec<String>,
    #[serde(default, rename = "K", alias = "k")]
    k: Option<usize>,
    #[serde(default)]
    n_start: Option<usize>,
    #[serde(default)]
    n_max: Option<usize>,
    #[serde(default)]
    seed_floor: Option<f64>,
    #[serde(default)]
    aggregation: Option<GroupAggregation>,
    #[serde(flatten)]
    overrides: LdaOverrides,
}

impl TopicsBody {
    fn into_request(self) -> InduceRequest {
        let mut r = InduceRequest::new(self.seeds).with_overrides(&self.overrides);
        if let Some(k) = self.k {
            r.k = k;
        }
        if let Some(n) = self.n_start {
            r.n_start = n;
        }
        if let Some(n) = self.n_max {
            r.n_max = n;
        }
        r.seed_floor = self.seed_floor;
        r.aggregation = self.aggregation.unwrap_or_default();
        r
    }
}

/// Runs the escalation loop as a tracked job and answers with the induced
/// topics once it settles.
async fn induce(State(state): Shared, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let request = parse::<TopicsBody>(&body)?.into_request();
    request.validate()?;
    let dir = state.open(&id)?;
    if !dir.has(&ArtifactKind::Index) {
        return Err(ApiError::conflict(codes::INDEX_NOT_READY, "build the index first"));
    }
    let span = (request.n_max - request.n_start + 1) as f64;
    let n_start = request.n_start;
    let (_, handle) = state.start_build(&id, JobKind::Induce, dir, move |lock, progress| {
        let topics = engine::induce(lock, &request, |n, f| progress(((n - n_start) as f64 + f) / span))?;
        Ok(to_json(&topics))
    })?;
    let text = handle
        .await
        .map_err(|e| ApiError::internal(format!("induction task failed: {e}")))??;
    Ok(raw_json(StatusCode::OK, text))
}

async fn stored_topics(State(state): Shared, Path(id): Path<String>) -> ApiResult {
    let snap = blocking(move || state.snapshot(&id)).await?;
    match &snap.topics {
        Some(t) => Ok(json_response(StatusCode::OK, t)),
        None => Err(ApiError::conflict(codes::TOPICS_NOT_READY, "no topics induced yet")),
    }
}

async fn query(State(state): Shared, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let request: QueryRequest = parse(&body)?;
    request.validate()?;
    let result = blocking(move || {
        let snap = state.snapshot(&id)?;
        let (Some(index), Some(pipeline)) = (&snap.index, &snap.pipeline) else {
            return Err(ApiError::conflict(codes::INDEX_NOT_READY, "the index has not been built"));
        };
        if request.topic.is_some() && snap.topics.is_none() {
            return Err(ApiError::conflict(codes::TOPICS_NOT_READY, "no topics induced yet"));
        }
        Ok(engine::run_query(index, pipeline, snap.topics.as_ref(), &request)?)
    })
    .await?;
    Ok(json_response(StatusCode::OK, &result))
}

async fn document(State(state): Shared, Path((id, doc_id)): Path<(String, String)>) -> ApiResult {
    let snap = blocking(move || state.snapshot(&id)).await?;
    let doc = snap
        .documents
        .as_ref()
        .and_then(|docs| docs.get(&doc_id))
        .ok_or_else(|| ApiError::not_found(codes::DOCUMENT_NOT_FOUND, format!("no document `{doc_id}`")))?;
    Ok(json_response(StatusCode::OK, &engine::document_view(doc)))
}

async fn job(State(state): Shared, Path(id): Path<String>) -> ApiResult {
    let job = state
        .jobs
        .get(&id)
        .ok_or_else(|| ApiError::not_found(codes::JOB_NOT_FOUND, format!("no job `{id}`")))?;
    Ok(json_response(StatusCode::OK, &job))
}
