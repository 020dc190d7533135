//! Vocabulary, sparse TF-IDF term-document matrix and cosine similarity.

use std::collections::{HashMap, HashSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::text::Document;

pub const DEFAULT_MIN_DF: u32 = 2;
pub const DEFAULT_MAX_DF_RATIO: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
    df: Vec<u32>,
}

impl Vocabulary {
    /// Rebuilds a vocabulary from stored `(term, df)` pairs.
    pub fn from_parts(entries: Vec<(String, u32)>) -> Result<Self> {
        let mut vocab = Vocabulary::default();
        for (term, df) in entries {
            if df == 0 {
                return Err(Error::InvalidConfig(format!("term `{term}` has zero document frequency")));
            }
            if vocab.index.insert(term.clone(), vocab.terms.len()).is_some() {
                return Err(Error::InvalidConfig(format!("term `{term}` listed twice")));
            }
            vocab.terms.push(term);
            vocab.df.push(df);
        }
        Ok(vocab)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn term(&self, pos: usize) -> Option<&str> {
        self.terms.get(pos).map(String::as_str)
    }

    pub fn position(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn df(&self, pos: usize) -> u32 {
        self.df[pos]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u32)> {
        self.terms.iter().map(String::as_str).zip(self.df.iter().copied())
    }

    /// Vocabulary positions of a document's in-vocabulary tokens, in order.
    pub fn encode(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().filter_map(|t| self.position(t)).collect()
    }
}

/// Keeps terms with `min_df <= df <= max_df_ratio * n_docs`, in order of
/// first appearance.
pub fn build_vocabulary(docs: &[Document], min_df: u32, max_df_ratio: f64) -> Result<Vocabulary> {
    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if min_df < 1 {
        return Err(Error::InvalidConfig("min_df must be at least 1".into()));
    }
    if !(max_df_ratio > 0.0 && max_df_ratio <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "max_df_ratio must be in (0, 1], got {max_df_ratio}"
        )));
    }
    let mut order: Vec<&str> = Vec::new();
    let mut counts: HashMap<&str, u32> = HashMap::new();
    for doc in docs {
        let mut seen_here = HashSet::with_capacity(doc.tokens.len());
        for t in &doc.tokens {
            if seen_here.insert(t.as_str()) {
                let c = counts.entry(t.as_str()).or_insert_with(|| {
                    order.push(t.as_str());
                    0
                });
                *c += 1;
            }
        }
    }
    let max_df = max_df_ratio * docs.len() as f64;
    let kept = order
        .into_iter()
        .map(|t| (t, counts[t]))
        .filter(|&(_, df)| df >= min_df && df as f64 <= max_df)
        .map(|(t, df)| (t.to_owned(), df))
        .collect();
    Vocabulary::from_parts(kept)
}

/// `tf * ln(n_docs / df)` with raw term counts.
pub fn tfidf_weight(tf: u32, df: u32, n_docs: u32) -> Result<f64> {
    if tf < 1 || df < 1 || df > n_docs {
        return Err(Error::InvalidConfig(format!(
            "tf-idf domain violated: tf={tf}, df={df}, n_docs={n_docs}"
        )));
    }
    Ok(tf as f64 * (n_docs as f64 / df as f64).ln())
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct SparseVector {
    entries: Vec<(u32, f64)>,
}

impl SparseVector {
    /// Sorts by position and drops zero weights. Panics on duplicate
    /// positions or negative/non-finite weights.
    pub fn new(mut entries: Vec<(u32, f64)>) -> Self {
        entries.retain(|&(_, w)| w != 0.0);
        entries.sort_by_key(|&(p, _)| p);
        assert!(
            entries.windows(2).all(|w| w[0].0 < w[1].0),
            "duplicate positions in sparse vector"
        );
        assert!(
            entries.iter().all(|&(_, w)| w.is_finite() && w > 0.0),
            "sparse vector weights must be finite and non-negative"
        );
        Self { entries }
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, pos: u32) -> f64 {
        self.entries
            .binary_search_by_key(&pos, |&(p, _)| p)
            .map_or(0.0, |i| self.entries[i].1)
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|&(_, w)| w * w).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.entries, &other.entries);
        let mut sum = 0.0;
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    sum += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        sum
    }

    pub fn scaled(&self, c: f64) -> SparseVector {
        SparseVector::new(self.entries.iter().map(|&(p, w)| (p, w * c)).collect())
    }
}

/// Cosine similarity; 0 when either vector has zero norm.
pub fn cosine(x: &SparseVector, y: &SparseVector) -> f64 {
    let denom = x.norm() * y.norm();
    if denom == 0.0 {
        return 0.0;
    }
    (x.dot(y) / denom).clamp(0.0, 1.0)
}

/// The corpus as TF-IDF document vectors, plus per-term postings for
/// query-time candidate lookup.
#[derive(Debug, Clone)]
pub struct TermDocumentIndex {
    vocabulary: Vocabulary,
    doc_ids: Vec<String>,
    doc_vectors: Vec<SparseVector>,
    doc_lengths: Vec<u32>,
    positions: HashMap<String, usize>,
    postings: Vec<Vec<u32>>,
}

impl PartialEq for TermDocumentIndex {
    fn eq(&self, other: &Self) -> bool {
        // positions and postings are derived
        self.vocabulary == other.vocabulary
            && self.doc_ids == other.doc_ids
            && self.doc_vectors == other.doc_vectors
            && self.doc_lengths == other.doc_lengths
    }
}

impl TermDocumentIndex {
    /// Assembles an index from stored parts, re-deriving lookups.
    pub fn from_parts(
        vocabulary: Vocabulary,
        doc_ids: Vec<String>,
        doc_vectors: Vec<SparseVector>,
        doc_lengths: Vec<u32>,
    ) -> Result<Self> {
        if doc_ids.len() != doc_vectors.len() || doc_ids.len() != doc_lengths.len() {
            return Err(Error::InvalidConfig("index parts have mismatched lengths".into()));
        }
        let v = vocabulary.len();
        let mut postings = vec![Vec::new(); v];
        for (d, vec) in doc_vectors.iter().enumerate() {
            for &(p, _) in vec.entries() {
                let list = postings.get_mut(p as usize).ok_or(Error::IndexOutOfRange {
                    what: "term",
                    index: p as usize,
                    len: v,
                })?;
                list.push(d as u32);
            }
        }
        let mut positions = HashMap::with_capacity(doc_ids.len());
        for (i, id) in doc_ids.iter().enumerate() {
            if positions.insert(id.clone(), i).is_some() {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        Ok(Self {
            vocabulary,
            doc_ids,
            doc_vectors,
            doc_lengths,
            positions,
            postings,
        })
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn n_docs(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn doc_position(&self, id: &str) -> Option<usize> {
        self.positions.get(id).copied()
    }

    pub fn doc_vector(&self, doc: usize) -> &SparseVector {
        &self.doc_vectors[doc]
    }

    pub fn doc_vectors(&self) -> &[SparseVector] {
        &self.doc_vectors
    }

    /// Preprocessed token count, including out-of-vocabulary tokens.
    pub fn doc_length(&self, doc: usize) -> u32 {
        self.doc_lengths[doc]
    }

    pub fn doc_lengths(&self) -> &[u32] {
        &self.doc_lengths
    }

    /// Documents whose vector has a nonzero weight for `term`.
    pub fn postings(&self, term: usize) -> &[u32] {
        &self.postings[term]
    }

    pub fn idf_weight(&self, term: usize) -> f64 {
        tfidf_weight(1, self.vocabulary.df(term), self.n_docs() as u32)
            .expect("vocabulary df within corpus size")
    }
}

pub fn build_index(docs: &[Document], vocab: Vocabulary) -> Result<TermDocumentIndex> {
    let n_docs = docs.len() as u32;
    let mut vectors = Vec::with_capacity(docs.len());
    let mut lengths = Vec::with_capacity(docs.len());
    for doc in docs {
        let mut tf: HashMap<usize, u32> = HashMap::new();
        for pos in vocab.encode(&doc.tokens) {
            *tf.entry(pos).or_default() += 1;
        }
        let entries = tf
            .into_iter()
            .map(|(pos, count)| Ok((pos as u32, tfidf_weight(count, vocab.df(pos), n_docs)?)))
            .collect::<Result<Vec<_>>>()?;
        vectors.push(SparseVector::new(entries));
        lengths.push(doc.tokens.len() as u32);
    }
    let ids = docs.iter().map(|d| d.id.clone()).collect();
    TermDocumentIndex::from_parts(vocab, ids, vectors, lengths)
}
