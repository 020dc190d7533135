//! Confusion matrices and precision figures for topical queries scored
//! against hand-labeled relevant sets.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    relevant: HashSet<String>,
    corpus_size: u64,
    /// When known, predictions and labels are checked against it.
    corpus_ids: Option<HashSet<String>>,
}

impl GroundTruth {
    pub fn new(relevant: HashSet<String>, corpus_size: u64) -> Result<Self> {
        if relevant.len() as u64 > corpus_size {
            return Err(Error::InvalidConfig(format!(
                "{} relevant documents exceed the corpus size {corpus_size}",
                relevant.len()
            )));
        }
        Ok(Self {
            relevant,
            corpus_size,
            corpus_ids: None,
        })
    }

    pub fn with_corpus(relevant: HashSet<String>, corpus_ids: HashSet<String>) -> Result<Self> {
        if let Some(stray) = relevant.iter().find(|id| !corpus_ids.contains(*id)) {
            return Err(Error::IdOutsideCorpus(stray.clone()));
        }
        Ok(Self {
            relevant,
            corpus_size: corpus_ids.len() as u64,
            corpus_ids: Some(corpus_ids),
        })
    }

    /// Reads one relevant id per line; blank lines and `#` comments skipped.
    pub fn read_ids(path: &Path) -> Result<HashSet<String>> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading ground truth {}", path.display()), e))?;
        Ok(text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_owned)
            .collect())
    }

    pub fn relevant(&self) -> &HashSet<String> {
        &self.relevant
    }

    pub fn corpus_size(&self) -> u64 {
        self.corpus_size
    }

    pub fn is_relevant(&self, id: &str) -> bool {
        self.relevant.contains(id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    /// Fills the four cells from marginal counts.
    pub fn from_marginals(predicted: u64, tp: u64, relevant: u64, corpus_size: u64) -> Result<Self> {
        if tp > predicted || tp > relevant || predicted + relevant - tp > corpus_size {
            return Err(Error::InvalidConfig(format!(
                "inconsistent marginals: predicted={predicted} tp={tp} relevant={relevant} corpus={corpus_size}"
            )));
        }
        Ok(Self {
            tp,
            fp: predicted - tp,
            fn_: relevant - tp,
            tn: corpus_size - (predicted + relevant - tp),
        })
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn predicted_positive(&self) -> u64 {
        self.tp + self.fp
    }

    pub fn actual_positive(&self) -> u64 {
        self.tp + self.fn_
    }
}

pub fn confusion(predicted_positive: &HashSet<String>, truth: &GroundTruth) -> Result<ConfusionMatrix> {
    if let Some(corpus) = &truth.corpus_ids {
        if let Some(stray) = predicted_positive.iter().find(|id| !corpus.contains(*id)) {
            return Err(Error::IdOutsideCorpus(stray.clone()));
        }
    }
    let tp = predicted_positive.iter().filter(|id| truth.relevant.contains(*id)).count() as u64;
    ConfusionMatrix::from_marginals(
        predicted_positive.len() as u64,
        tp,
        truth.relevant.len() as u64,
        truth.corpus_size,
    )
    .map_err(|_| {
        Error::InvalidConfig(format!(
            "{} predicted and {} relevant documents do not fit in a corpus of {}",
            predicted_positive.len(),
            truth.relevant.len(),
            truth.corpus_size
        ))
    })
}

pub fn precision(cm: &ConfusionMatrix) -> Result<f64> {
    match cm.predicted_positive() {
        0 => Err(Error::NoPositivePredictions),
        p => Ok(cm.tp as f64 / p as f64),
    }
}

/// Informational only: with a handful of hits against thousands of
/// relevant fragments, recall is tiny by construction.
pub fn recall(cm: &ConfusionMatrix) -> Option<f64> {
    (cm.actual_positive() > 0).then(|| cm.tp as f64 / cm.actual_positive() as f64)
}

pub fn f1(cm: &ConfusionMatrix) -> Option<f64> {
    let p = precision(cm).ok()?;
    let r = recall(cm)?;
    (p + r > 0.0).then(|| 2.0 * p * r / (p + r))
}

/// Relevant ids among the first `k` ranked, divided by `k`.
pub fn top_k_precision(ranked_ids: &[impl AsRef<str>], truth: &GroundTruth, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    let hits = ranked_ids.iter().take(k).filter(|id| truth.is_relevant(id.as_ref())).count();
    Ok(hits as f64 / k as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopKRow {
    pub k: usize,
    pub relevant_in_top_k: usize,
    pub precision: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub matrix: ConfusionMatrix,
    pub corpus_size: u64,
    pub precision: f64,
    /// Informational.
    pub recall: Option<f64>,
    /// Informational.
    pub f1: Option<f64>,
    pub top_k: Vec<TopKRow>,
}

/// Full report for a ranked prediction list. `top_k` rows are produced for
/// 5, 10 and every multiple of 10 up to `max_k`, plus `max_k` itself.
pub fn evaluate(ranked_ids: &[String], truth: &GroundTruth, max_k: usize) -> Result<EvaluationReport> {
    let predicted: HashSet<String> = ranked_ids.iter().cloned().collect();
    if predicted.len() != ranked_ids.len() {
        return Err(Error::InvalidConfig("ranked predictions contain duplicate ids".into()));
    }
    let matrix = confusion(&predicted, truth)?;
    let mut ks: Vec<usize> = [5, 10].into_iter().chain((20..=max_k).step_by(10)).filter(|&k| k <= max_k).collect();
    if max_k > 0 && !ks.contains(&max_k) {
        ks.push(max_k);
    }
    let top_k = ks
        .into_iter()
        .map(|k| {
            let relevant_in_top_k = ranked_ids.iter().take(k).filter(|id| truth.is_relevant(id)).count();
            TopKRow {
                k,
                relevant_in_top_k,
                precision: relevant_in_top_k as f64 / k as f64,
            }
        })
        .collect();
    Ok(EvaluationReport {
        precision: precision(&matrix)?,
        recall: recall(&matrix),
        f1: f1(&matrix),
        corpus_size: truth.corpus_size,
        matrix,
        top_k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(prefix: &str, range: std::ops::Range<usize>) -> HashSet<String> {
        range.map(|i| format!("{prefix}{i}")).collect()
    }

    #[test]
    fn perfect_prediction() {
        let rel = ids("r", 0..5);
        let truth = GroundTruth::new(rel.clone(), 100).unwrap();
        let cm = confusion(&rel, &truth).unwrap();
        assert_eq!((cm.tp, cm.fp, cm.fn_, cm.tn), (5, 0, 0, 95));
        assert_eq!(precision(&cm).unwrap(), 1.0);
    }

    #[test]
    fn empty_prediction_has_no_precision() {
        let truth = GroundTruth::new(ids("r", 0..5), 100).unwrap();
        let cm = confusion(&HashSet::new(), &truth).unwrap();
        assert!(matches!(precision(&cm), Err(Error::NoPositivePredictions)));
        assert_eq!(cm.total(), 100);
    }

    #[test]
    fn predictions_outside_corpus() {
        let corpus = ids("d", 0..10);
        let truth = GroundTruth::with_corpus(ids("d", 0..3), corpus).unwrap();
        assert!(matches!(confusion(&ids("x", 0..1), &truth), Err(Error::IdOutsideCorpus(_))));
        assert!(GroundTruth::with_corpus(ids("x", 0..1), ids("d", 0..2)).is_err());
        let small = GroundTruth::new(ids("r", 0..3), 4).unwrap();
        assert!(confusion(&ids("p", 0..2), &small).is_err());
    }

    #[test]
    fn top_k() {
        let truth = GroundTruth::new(ids("r", 0..20), 1000).unwrap();
        let mut ranked: Vec<String> = (0..15).map(|i| format!("r{i}")).collect();
        ranked.extend((0..5).map(|i| format!("n{i}")));
        assert_eq!(top_k_precision(&ranked, &truth, 20).unwrap(), 0.75);
        assert_eq!(top_k_precision(&ranked, &truth, 10).unwrap(), 1.0);
        // a short list still divides by k
        assert_eq!(top_k_precision(&ranked[..10], &truth, 20).unwrap(), 0.5);
        assert_eq!(top_k_precision(&Vec::<String>::new(), &truth, 20).unwrap(), 0.0);
        assert!(top_k_precision(&ranked, &truth, 0).is_err());
    }

    #[test]
    fn recall_and_f1_are_informational() {
        let cm = ConfusionMatrix::from_marginals(10, 5, 20, 100).unwrap();
        assert_eq!(recall(&cm), Some(0.25));
        let f = f1(&cm).unwrap();
        assert!((f - 2.0 * 0.5 * 0.25 / 0.75).abs() < 1e-12);
        let none = ConfusionMatrix::from_marginals(0, 0, 0, 10).unwrap();
        assert_eq!((recall(&none), f1(&none)), (None, None));
    }

    #[test]
    fn report_rows() {
        let truth = GroundTruth::new(ids("r", 0..30), 1000).unwrap();
        let ranked: Vec<String> = (0..25).map(|i| format!("r{i}")).collect();
        let rep = evaluate(&ranked, &truth, 20).unwrap();
        let ks: Vec<_> = rep.top_k.iter().map(|r| r.k).collect();
        assert_eq!(ks, [5, 10, 20]);
        assert_eq!(rep.precision, 1.0);
        let json = serde_json::to_value(&rep).unwrap();
        assert_eq!(json["matrix"]["fn"], 5);
    }
}
