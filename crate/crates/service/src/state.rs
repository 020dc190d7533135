use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use tokio::sync::Semaphore;

use topicnav_core::report::TopicsDocument;
use topicnav_core::store::{ArtifactKind, ExperimentDir, ExperimentLock, Manifest};
use topicnav_core::text::{Document, Pipeline};
use topicnav_core::vector::TermDocumentIndex;

use crate::error::{codes, ApiError};
use crate::jobs::{Job, JobKind, JobRegistry};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Directory holding one sub-directory per experiment.
    pub root: PathBuf,
    /// Build jobs allowed to run at once across all experiments.
    pub job_parallelism: usize,
}

/// Everything a read request needs, loaded from one manifest state.
#[derive(Debug, Default)]
pub struct Snapshot {
    key: Vec<(String, String)>,
    pub pipeline: Option<Pipeline>,
    pub documents: Option<HashMap<String, Document>>,
    pub index: Option<TermDocumentIndex>,
    pub topics: Option<TopicsDocument>,
}

#[derive(Debug, Default)]
struct Slot {
    building: Option<String>,
    cache: Option<Arc<Snapshot>>,
}

#[derive(Debug)]
pub struct AppState {
    config: ServiceConfig,
    pub jobs: JobRegistry,
    slots: Mutex<HashMap<String, Slot>>,
    permits: Arc<Semaphore>,
}

fn manifest_key(m: &Manifest) -> Vec<(String, String)> {
    m.artifacts.iter().map(|(k, e)| (k.clone(), e.sha256.clone())).collect()
}

pub fn valid_experiment_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 128
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Arc<Self> {
        Arc::new(Self {
            permits: Arc::new(Semaphore::new(config.job_parallelism.max(1))),
            config,
            jobs: JobRegistry::default(),
            slots: Mutex::new(HashMap::new()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.config.root
    }

    pub fn experiment_path(&self, id: &str) -> Result<PathBuf, ApiError> {
        if !valid_experiment_id(id) {
            return Err(ApiError::bad_request(format!("invalid experiment id `{id}`")));
        }
        Ok(self.config.root.join(id))
    }

    pub fn open(&self, id: &str) -> Result<ExperimentDir, ApiError> {
        let path = self.experiment_path(id)?;
        ExperimentDir::open(path)
            .map_err(|_| ApiError::not_found(codes::EXPERIMENT_NOT_FOUND, format!("no experiment `{id}`")))
    }

    pub fn building(&self, id: &str) -> Option<String> {
        self.slots.lock().unwrap().get(id).and_then(|s| s.building.clone())
    }

    /// Artifacts as of the last completed build. While a build runs the
    /// previous snapshot keeps being served.
    pub fn snapshot(&self, id: &str) -> Result<Arc<Snapshot>, ApiError> {
        let dir = self.open(id)?;
        let (building, cached) = {
            let slots = self.slots.lock().unwrap();
            let slot = slots.get(id);
            (
                slot.is_some_and(|s| s.building.is_some()),
                slot.and_then(|s| s.cache.clone()),
            )
        };
        if let (true, Some(c)) = (building, &cached) {
            return Ok(c.clone());
        }
        let manifest = dir.manifest()?;
        let key = manifest_key(&manifest);
        if let Some(c) = cached.filter(|c| c.key == key) {
            return Ok(c);
        }
        let snapshot = match load_snapshot(&dir, key) {
            Ok(s) => Arc::new(s),
            // a build replaced files under us; nothing complete to serve
            Err(_) if building => {
                return Err(ApiError::conflict(codes::INDEX_NOT_READY, "artifacts are being rebuilt"))
            }
            Err(e) => return Err(e.into()),
        };
        let mut slots = self.slots.lock().unwrap();
        let slot = slots.entry(id.to_owned()).or_default();
        if slot.building.is_none() {
            slot.cache = Some(snapshot.clone());
        }
        Ok(snapshot)
    }

    /// Registers an exclusive build and runs `work` on the blocking pool.
    /// `work` returns the job summary rendered as JSON. The returned handle
    /// resolves to the same text, or the error body on failure.
    pub fn start_build<F>(
        self: &Arc<Self>,
        id: &str,
        kind: JobKind,
        dir: ExperimentDir,
        work: F,
    ) -> Result<(Job, tokio::task::JoinHandle<Result<String, ApiError>>), ApiError>
    where
        F: FnOnce(&ExperimentLock, &dyn Fn(f64)) -> topicnav_core::Result<String> + Send + 'static,
    {
        let (job, lock) = {
            let mut slots = self.slots.lock().unwrap();
            let slot = slots.entry(id.to_owned()).or_default();
            if let Some(running) = &slot.building {
                return Err(ApiError::conflict(
                    codes::BUILD_IN_PROGRESS,
                    format!("experiment `{id}` is already building ({running})"),
                ));
            }
            // another process (e.g. the CLI) may hold the directory
            let lock = dir.lock()?;
            let job = self.jobs.create(id, kind);
            slot.building = Some(job.id.clone());
            (job, lock)
        };

        let state = self.clone();
        let experiment = id.to_owned();
        let job_id = job.id.clone();
        let handle = tokio::spawn(async move {
            let _permit = state.permits.clone().acquire_owned().await.expect("semaphore open");
            state.jobs.start(&job_id);
            let progress_state = state.clone();
            let progress_id = job_id.clone();
            let outcome = tokio::task::spawn_blocking(move || {
                let report = move |f: f64| progress_state.jobs.progress(&progress_id, f);
                let out = work(&lock, &report);
                drop(lock);
                out
            })
            .await;
            let outcome = match outcome {
                Ok(Ok(text)) => Ok(text),
                Ok(Err(e)) => Err(ApiError::from(e)),
                Err(join) => Err(ApiError::internal(format!("build task failed: {join}"))),
            };
            state.finish_build(&experiment, &job_id, outcome)
        });
        Ok((job, handle))
    }

    fn finish_build(&self, id: &str, job_id: &str, outcome: Result<String, ApiError>) -> Result<String, ApiError> {
        match &outcome {
            Ok(text) => {
                let value = serde_json::from_str(text).unwrap_or(serde_json::Value::Null);
                self.jobs.finish(job_id, Ok(value));
            }
            Err(e) => {
                tracing::warn!(job = job_id, code = %e.body.error.code, "build failed: {}", e.body.error.message);
                self.jobs.finish(job_id, Err(e.body.error.clone()));
            }
        }
        let mut slots = self.slots.lock().unwrap();
        if let Some(slot) = slots.get_mut(id) {
            if slot.building.as_deref() == Some(job_id) {
                slot.building = None;
                slot.cache = None;
            }
        }
        outcome
    }
}

fn load_snapshot(dir: &ExperimentDir, key: Vec<(String, String)>) -> topicnav_core::Result<Snapshot> {
    let has = |k: &ArtifactKind| key.iter().any(|(name, _)| *name == k.name());
    let mut snap = Snapshot::default();
    if has(&ArtifactKind::Pipeline) {
        snap.pipeline = Some(dir.load_pipeline()?);
    }
    if has(&ArtifactKind::Corpus) {
        snap.documents = Some(dir.load_corpus()?.into_iter().map(|d| (d.id.clone(), d)).collect());
    }
    if has(&ArtifactKind::Index) {
        snap.index = Some(dir.load_index()?);
    }
    if has(&ArtifactKind::Topics) {
        snap.topics = Some(dir.load_topics()?);
    }
    snap.key = key;
    Ok(snap)
}
