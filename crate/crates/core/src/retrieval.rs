//! Topical queries: a signature projected into the TF-IDF term space and
//! matched against every document by cosine similarity.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::{cosine, SparseVector, TermDocumentIndex};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicalQuery {
    pub terms: Vec<String>,
    pub threshold: f64,
    pub min_terms: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<usize>,
    /// Per-term multipliers on the idf weight (e.g. induced-topic group
    /// weights). Absent means every term counts once.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub term_weights: Option<Vec<f64>>,
}

impl TopicalQuery {
    pub fn new(terms: Vec<String>, threshold: f64, min_terms: u32, limit: Option<usize>) -> Result<Self> {
        let q = Self {
            terms,
            threshold,
            min_terms,
            limit,
            term_weights: None,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn with_term_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        self.term_weights = Some(weights);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.terms.is_empty() {
            return Err(Error::InvalidConfig("query needs at least one term".into()));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::InvalidConfig(format!(
                "threshold must be within [0, 1], got {}",
                self.threshold
            )));
        }
        if let Some(w) = &self.term_weights {
            if w.len() != self.terms.len() {
                return Err(Error::InvalidConfig("one weight per query term is required".into()));
            }
            if w.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                return Err(Error::InvalidConfig("query term weights must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryVector {
    pub vector: SparseVector,
    pub unknown_terms: Vec<String>,
}

/// Each distinct in-vocabulary term gets `tf = 1`, i.e. its idf weight.
pub fn signature_to_query_vector(terms: &[String], index: &TermDocumentIndex) -> Result<QueryVector> {
    weighted_query_vector(terms, None, index)
}

fn weighted_query_vector(
    terms: &[String],
    multipliers: Option<&[f64]>,
    index: &TermDocumentIndex,
) -> Result<QueryVector> {
    let vocab = index.vocabulary();
    let mut seen = BTreeSet::new();
    let mut entries = Vec::new();
    let mut unknown_terms = Vec::new();
    for (i, term) in terms.iter().enumerate() {
        match vocab.position(term) {
            Some(pos) => {
                if seen.insert(pos) {
                    let m = multipliers.map_or(1.0, |w| w[i]);
                    entries.push((pos as u32, m * index.idf_weight(pos)));
                }
            }
            None => {
                if !unknown_terms.contains(term) {
                    unknown_terms.push(term.clone());
                }
            }
        }
    }
    if seen.is_empty() {
        return Err(Error::AllTermsUnknown {
            terms: terms.to_vec(),
        });
    }
    Ok(QueryVector {
        vector: SparseVector::new(entries),
        unknown_terms,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub id: String,
    pub score: f64,
    pub doc_length: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub query: TopicalQuery,
    pub warnings: Vec<String>,
    pub hits: Vec<Hit>,
}

impl RetrievalResult {
    pub fn ids(&self) -> Vec<&str> {
        self.hits.iter().map(|h| h.id.as_str()).collect()
    }
}

/// Documents with at least `min_terms` tokens and cosine at or above the
/// threshold, best first, ties by ascending id.
pub fn retrieve(query: &TopicalQuery, index: &TermDocumentIndex) -> Result<RetrievalResult> {
    query.validate()?;
    let qv = weighted_query_vector(&query.terms, query.term_weights.as_deref(), index)?;

    // with a positive threshold only documents sharing a term can score
    let candidates: Vec<usize> = if query.threshold > 0.0 {
        let mut set = BTreeSet::new();
        for &(pos, _) in qv.vector.entries() {
            set.extend(index.postings(pos as usize).iter().map(|&d| d as usize));
        }
        set.into_iter().collect()
    } else {
        (0..index.n_docs()).collect()
    };

    let mut hits: Vec<Hit> = candidates
        .into_iter()
        .filter(|&d| index.doc_length(d) >= query.min_terms)
        .filter_map(|d| {
            let score = cosine(&qv.vector, index.doc_vector(d));
            (score >= query.threshold).then(|| Hit {
                id: index.doc_ids()[d].clone(),
                score,
                doc_length: index.doc_length(d),
            })
        })
        .collect();
    hits.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.id.cmp(&b.id)));
    if let Some(limit) = query.limit {
        hits.truncate(limit);
    }

    let warnings = qv
        .unknown_terms
        .iter()
        .map(|t| format!("term `{t}` is not in the vocabulary and was ignored"))
        .collect();
    Ok(RetrievalResult {
        query: query.clone(),
        warnings,
        hits,
    })
}
