//! JSON documents exchanged with the outside world. The CLI and the HTTP
//! service both render through [`to_json`], so the same input yields the
//! same bytes from either front end.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::induction::{
    CoverageReport, EscalationStep, ExhaustionWarning, GroupAggregation, InducedTopic,
};

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelReference {
    pub file: String,
    pub sha256: String,
    pub n_topics: usize,
}

/// A seed as the user typed it and as it appears in the index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedTerm {
    pub input: String,
    pub term: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicsDocument {
    pub seeds: Vec<SeedTerm>,
    pub k: usize,
    pub final_n: usize,
    pub n_topics: usize,
    pub aggregation: GroupAggregation,
    pub model: ModelReference,
    pub topics: Vec<InducedTopic>,
    pub warnings: Vec<ExhaustionWarning>,
    pub coverage: CoverageReport,
    pub escalation: Vec<EscalationStep>,
}

impl TopicsDocument {
    /// Finds a topic by its index-form seed or by the seed as typed.
    pub fn topic(&self, seed: &str) -> Result<&InducedTopic> {
        let term = self
            .seeds
            .iter()
            .find(|s| s.input == seed || s.term == seed)
            .map_or(seed, |s| s.term.as_str());
        self.topics
            .iter()
            .find(|t| t.seed == term)
            .ok_or_else(|| Error::UnknownTopic(seed.to_owned()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentView {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date: Option<chrono::NaiveDate>,
    pub text: String,
    pub token_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorResponse {
    pub error: ErrorBody,
}

impl ErrorResponse {
    pub fn new(code: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            error: ErrorBody {
                code: code.into(),
                message: message.into(),
            },
        }
    }
}

impl From<&Error> for ErrorResponse {
    fn from(e: &Error) -> Self {
        Self::new(e.code(), e.to_string())
    }
}
