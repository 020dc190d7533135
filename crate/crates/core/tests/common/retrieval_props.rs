//! Retrieval property bodies, shared by the proptest suite and the
//! acceptance runner.

use std::collections::HashSet;

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use topicnav_core::retrieval::{retrieve, Hit, TopicalQuery};
use topicnav_core::text::Document;
use topicnav_core::vector::{build_index, build_vocabulary, cosine, SparseVector, TermDocumentIndex};

const TERMS: &[&str] = &["ta", "tb", "tc", "td", "te", "tf", "tg", "th"];

pub fn corpus() -> impl Strategy<Value = Vec<Document>> {
    prop::collection::vec(prop::collection::vec(0..TERMS.len(), 0..12), 1..=50).prop_map(|docs| {
        docs.into_iter()
            .enumerate()
            .map(|(i, toks)| {
                let toks: Vec<&str> = toks.into_iter().map(|t| TERMS[t]).collect();
                Document::from_tokens(format!("d{i:02}"), &toks)
            })
            .collect()
    })
}

pub fn query_terms() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(0..TERMS.len(), 1..5).prop_map(|q| q.into_iter().map(|t| TERMS[t].to_owned()).collect())
}

pub fn sparse() -> impl Strategy<Value = SparseVector> {
    prop::collection::btree_map(0u32..10, 0.01f64..5.0, 0..6).prop_map(|m| SparseVector::new(m.into_iter().collect()))
}

pub fn index_of(docs: &[Document]) -> TermDocumentIndex {
    build_index(docs, build_vocabulary(docs, 1, 1.0).unwrap()).unwrap()
}

fn hit_set(q: &TopicalQuery, index: &TermDocumentIndex) -> Option<HashSet<String>> {
    retrieve(q, index).ok().map(|r| r.hits.into_iter().map(|h| h.id).collect())
}

pub fn threshold_monotone(docs: &[Document], q: Vec<String>, a: f64, b: f64) -> Result<(), TestCaseError> {
    let index = index_of(docs);
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let low = hit_set(&TopicalQuery::new(q.clone(), lo, 0, None).unwrap(), &index);
    let high = hit_set(&TopicalQuery::new(q, hi, 0, None).unwrap(), &index);
    if let (Some(low), Some(high)) = (low, high) {
        prop_assert!(high.is_subset(&low));
    }
    Ok(())
}

pub fn min_terms_monotone(docs: &[Document], q: Vec<String>, t: f64, a: u32, b: u32) -> Result<(), TestCaseError> {
    let index = index_of(docs);
    let (lo, hi) = (a.min(b), a.max(b));
    let low = hit_set(&TopicalQuery::new(q.clone(), t, lo, None).unwrap(), &index);
    let high = hit_set(&TopicalQuery::new(q, t, hi, None).unwrap(), &index);
    if let (Some(low), Some(high)) = (low, high) {
        prop_assert!(high.is_subset(&low));
        let index_len = |id: &String| index.doc_length(index.doc_position(id).unwrap());
        prop_assert!(high.iter().all(|id| index_len(id) >= hi));
    }
    Ok(())
}

pub fn matches_dense_scorer(docs: &[Document], q: Vec<String>, t: f64, min_terms: u32) -> Result<(), TestCaseError> {
    let index = index_of(docs);
    let expected = super::brute_force_ranking(docs, &q, t, min_terms);
    match retrieve(&TopicalQuery::new(q.clone(), t, min_terms, None).unwrap(), &index) {
        Ok(result) => {
            // scores within rounding of the threshold may land on either side
            let near = |s: f64| (s - t).abs() < 1e-9;
            let got: Vec<&Hit> = result.hits.iter().filter(|h| !near(h.score)).collect();
            let want: Vec<&(String, f64)> = expected.iter().filter(|(_, s)| !near(*s)).collect();
            prop_assert_eq!(got.len(), want.len());
            for (h, (id, s)) in got.iter().zip(&want) {
                prop_assert!((h.score - s).abs() < 1e-9, "{} vs {}", h.score, s);
                if h.id != *id {
                    // only a near-tie may reorder
                    let other = result.hits.iter().find(|x| &x.id == id).unwrap();
                    prop_assert!((other.score - h.score).abs() < 1e-9);
                }
            }
        }
        Err(e) => {
            prop_assert_eq!(e.code(), "ALL_TERMS_UNKNOWN");
            prop_assert!(q.iter().all(|t| index.vocabulary().position(t).is_none()));
        }
    }
    Ok(())
}

pub fn cosine_symmetric_in_range(x: &SparseVector, y: &SparseVector, scale: f64) -> Result<(), TestCaseError> {
    let c = cosine(x, y);
    prop_assert!((0.0..=1.0).contains(&c));
    prop_assert_eq!(c, cosine(y, x));
    prop_assert!((cosine(&x.scaled(scale), y) - c).abs() < 1e-12);
    Ok(())
}

pub fn scaling_keeps_ranking(docs: &[Document], q: Vec<String>, scale: f64) -> Result<(), TestCaseError> {
    let index = index_of(docs);
    let base = TopicalQuery::new(q.clone(), 0.0, 0, None).unwrap();
    let scaled = base.clone().with_term_weights(vec![scale; q.len()]).unwrap();
    if let (Ok(a), Ok(b)) = (retrieve(&base, &index), retrieve(&scaled, &index)) {
        prop_assert_eq!(a.hits.len(), b.hits.len());
        for (x, y) in a.hits.iter().zip(&b.hits) {
            prop_assert!((x.score - y.score).abs() < 1e-12);
        }
        let pos = |r: &[Hit], id: &str| r.iter().position(|h| h.id == id).unwrap();
        for i in 0..a.hits.len() {
            for j in i + 1..a.hits.len() {
                if a.hits[i].score - a.hits[j].score > 1e-9 {
                    prop_assert!(pos(&b.hits, &a.hits[i].id) < pos(&b.hits, &a.hits[j].id));
                }
            }
        }
    }
    Ok(())
}
