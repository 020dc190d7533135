use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use topicnav_core::report::ErrorBody;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobKind {
    Ingest,
    Index,
    Lda,
    Induce,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobState {
    Queued,
    Running,
    Done,
    Failed,
}

impl JobState {
    pub fn is_finished(self) -> bool {
        matches!(self, JobState::Done | JobState::Failed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub id: String,
    pub experiment: String,
    pub kind: JobKind,
    pub state: JobState,
    /// Fraction of the work done, in `[0, 1]`.
    pub progress: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorBody>,
    /// Stage summary once done.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<serde_json::Value>,
}

#[derive(Debug, Default)]
pub struct JobRegistry {
    jobs: Mutex<BTreeMap<String, Job>>,
    next: AtomicU64,
}

impl JobRegistry {
    pub fn create(&self, experiment: &str, kind: JobKind) -> Job {
        let id = format!("job-{}", self.next.fetch_add(1, Ordering::Relaxed) + 1);
        let job = Job {
            id: id.clone(),
            experiment: experiment.to_owned(),
            kind,
            state: JobState::Queued,
            progress: 0.0,
            error: None,
            result: None,
        };
        self.jobs.lock().unwrap().insert(id, job.clone());
        job
    }

    pub fn get(&self, id: &str) -> Option<Job> {
        self.jobs.lock().unwrap().get(id).cloned()
    }

    /// Moves a job forward; backward transitions are ignored.
    fn advance(&self, id: &str, state: JobState, f: impl FnOnce(&mut Job)) {
        if let Some(job) = self.jobs.lock().unwrap().get_mut(id) {
            if state >= job.state && !job.state.is_finished() {
                job.state = state;
                f(job);
            }
        }
    }

    pub fn start(&self, id: &str) {
        self.advance(id, JobState::Running, |_| {});
    }

    pub fn progress(&self, id: &str, fraction: f64) {
        self.advance(id, JobState::Running, |j| {
            // progress never goes backwards either
            j.progress = j.progress.max(fraction.clamp(0.0, 1.0));
        });
    }

    pub fn finish(&self, id: &str, outcome: Result<serde_json::Value, ErrorBody>) {
        match outcome {
            Ok(result) => self.advance(id, JobState::Done, |j| {
                j.progress = 1.0;
                j.result = Some(result);
            }),
            Err(error) => self.advance(id, JobState::Failed, |j| j.error = Some(error)),
        }
    }
}
