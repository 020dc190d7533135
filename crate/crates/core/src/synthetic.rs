//! Planted-topic corpora with known word distributions, for recovery tests
//! and demos. Raw text mimics OCR output: stopwords, punctuation, broken
//! hyphenation and a share of garbage tokens.

use std::collections::HashSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::text::Document;

pub const STOPWORDS: &[&str] = &[
    "a", "o", "e", "de", "da", "do", "das", "dos", "em", "no", "na", "um", "uma", "que", "para",
    "com", "por", "os", "as", "se", "ao",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n_docs: usize,
    pub n_topics: usize,
    pub words_per_topic: usize,
    /// Rank-r word weight is proportional to `r^-zipf_exponent`.
    pub zipf_exponent: f64,
    /// Inclusive range of content tokens per document.
    pub doc_len: (usize, usize),
    /// Probability that a content token comes from the document's dominant
    /// topic; the rest is spread uniformly over the other topics.
    pub dominant_share: f64,
    /// Fraction of emitted tokens that are OCR garbage.
    pub noise_rate: f64,
    /// Stopwords emitted per content token, on average.
    pub stopword_rate: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_docs: 1000,
            n_topics: 3,
            words_per_topic: 60,
            zipf_exponent: 0.6,
            doc_len: (30, 60),
            dominant_share: 0.9,
            noise_rate: 0.2,
            stopword_rate: 0.3,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedTopic {
    /// Heaviest first.
    pub words: Vec<String>,
    pub weights: Vec<f64>,
}

impl PlantedTopic {
    pub fn top(&self, k: usize) -> &[String] {
        &self.words[..k.min(self.words.len())]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDoc {
    pub doc: Document,
    /// Topic words in emission order, without stopwords or noise.
    pub content: Vec<String>,
    pub dominant: usize,
    pub noise_tokens: usize,
    pub total_tokens: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub topics: Vec<PlantedTopic>,
    pub docs: Vec<SyntheticDoc>,
}

impl SyntheticCorpus {
    pub fn raw_documents(&self) -> Vec<Document> {
        self.docs.iter().map(|d| d.doc.clone()).collect()
    }

    /// Documents whose tokens are already the clean content words.
    pub fn clean_documents(&self) -> Vec<Document> {
        self.docs
            .iter()
            .map(|d| Document {
                tokens: d.content.clone(),
                ..d.doc.clone()
            })
            .collect()
    }

    /// Ids of the documents dominated by `topic`.
    pub fn relevant_ids(&self, topic: usize) -> HashSet<String> {
        self.docs
            .iter()
            .filter(|d| d.dominant == topic)
            .map(|d| d.doc.id.clone())
            .collect()
    }

    /// One JSON object per line, in the corpus input format.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for d in &self.docs {
            let line = serde_json::json!({ "id": d.doc.id, "text": d.doc.raw_text });
            out.push_str(&line.to_string());
            out.push('\n');
        }
        out
    }
}

const ONSETS: &[&str] = &[
    "b", "c", "d", "f", "g", "l", "m", "n", "p", "r", "s", "t", "v", "br", "cr", "pr", "tr",
];
const VOWELS: &[&str] = &["a", "e", "i", "o", "u"];

fn pseudo_word(rng: &mut ChaCha8Rng) -> String {
    let syllables = rng.random_range(3..=4);
    (0..syllables)
        .map(|_| format!("{}{}", ONSETS.choose(rng).unwrap(), VOWELS.choose(rng).unwrap()))
        .collect()
}

fn noise_token(rng: &mut ChaCha8Rng) -> String {
    const SYMBOLS: &[char] = &['#', '@', '%', '&', '*', '~', '^', '|', '/'];
    match rng.random_range(0..5) {
        // short letter/digit mix
        0 => format!(
            "{}{}{}",
            rng.random_range(b'a'..=b'z') as char,
            rng.random_range(0..10),
            rng.random_range(b'a'..=b'z') as char
        ),
        // symbol debris inside a word
        1 => {
            let mut w = pseudo_word(rng);
            let at = rng.random_range(1..w.len());
            w.insert(at, *SYMBOLS.choose(rng).unwrap());
            w
        }
        // stray digits
        2 => rng.random_range(0..10_000).to_string(),
        // single letters
        3 => (rng.random_range(b'a'..=b'z') as char).to_string(),
        // misread letters that pass every noise rule
        _ => (0..rng.random_range(5..9))
            .map(|_| rng.random_range(b'a'..=b'z') as char)
            .collect(),
    }
}

pub fn generate(spec: &SyntheticSpec) -> SyntheticCorpus {
    assert!(spec.n_topics >= 1 && spec.words_per_topic >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut used: HashSet<String> = STOPWORDS.iter().map(|s| s.to_string()).collect();
    let topics: Vec<PlantedTopic> = (0..spec.n_topics)
        .map(|_| {
            let words: Vec<String> = std::iter::from_fn(|| Some(pseudo_word(&mut rng)))
                .filter(|w| used.insert(w.clone()))
                .take(spec.words_per_topic)
                .collect();
            let raw: Vec<f64> = (1..=words.len())
                .map(|r| (r as f64).powf(-spec.zipf_exponent))
                .collect();
            let total: f64 = raw.iter().sum();
            PlantedTopic {
                words,
                weights: raw.iter().map(|w| w / total).collect(),
            }
        })
        .collect();
    let cumulative: Vec<Vec<f64>> = topics
        .iter()
        .map(|t| {
            t.weights
                .iter()
                .scan(0.0, |acc, w| {
                    *acc += w;
                    Some(*acc)
                })
                .collect()
        })
        .collect();

    let width = spec.n_docs.to_string().len();
    let docs = (0..spec.n_docs)
        .map(|i| {
            let dominant = i % spec.n_topics;
            let n_content = rng.random_range(spec.doc_len.0..=spec.doc_len.1);
            let mut content = Vec::with_capacity(n_content);
            for _ in 0..n_content {
                let topic = if spec.n_topics == 1 || rng.random::<f64>() < spec.dominant_share {
                    dominant
                } else {
                    let other = rng.random_range(0..spec.n_topics - 1);
                    if other >= dominant { other + 1 } else { other }
                };
                let u = rng.random::<f64>();
                let w = cumulative[topic].partition_point(|&c| c < u).min(topics[topic].words.len() - 1);
                content.push(topics[topic].words[w].clone());
            }

            let mut emitted: Vec<String> = Vec::new();
            let mut noise_tokens = 0;
            for word in &content {
                if rng.random::<f64>() < spec.stopword_rate {
                    emitted.push(STOPWORDS.choose(&mut rng).unwrap().to_string());
                }
                emitted.push(word.clone());
            }
            // noise share of the final token stream
            let n_noise = if spec.noise_rate > 0.0 {
                (emitted.len() as f64 * spec.noise_rate / (1.0 - spec.noise_rate)).round() as usize
            } else {
                0
            };
            for _ in 0..n_noise {
                let at = rng.random_range(0..=emitted.len());
                emitted.insert(at, noise_token(&mut rng));
                noise_tokens += 1;
            }
            let total_tokens = emitted.len();

            let text = render(&emitted, &mut rng);
            SyntheticDoc {
                doc: Document::new(format!("doc{:0width$}", i, width = width), text),
                content,
                dominant,
                noise_tokens,
                total_tokens,
            }
        })
        .collect();

    SyntheticCorpus { topics, docs }
}

/// Joins tokens into text with sentence punctuation, capitalization and an
/// occasional line-break hyphenation.
fn render(tokens: &[String], rng: &mut ChaCha8Rng) -> String {
    let mut text = String::new();
    let mut sentence_start = true;
    for (i, tok) in tokens.iter().enumerate() {
        if i > 0 {
            text.push(if rng.random::<f64>() < 0.1 { '\n' } else { ' ' });
        }
        let mut word = tok.clone();
        if sentence_start {
            let mut chars = word.chars();
            if let Some(first) = chars.next() {
                word = first.to_uppercase().chain(chars).collect();
            }
            sentence_start = false;
        }
        let n = word.chars().count();
        if n >= 6 && word.chars().all(char::is_alphabetic) && rng.random::<f64>() < 0.05 {
            let cut: usize = word.char_indices().nth(n / 2).map(|(b, _)| b).unwrap();
            word = format!("{}-\n{}", &word[..cut], &word[cut..]);
        }
        text.push_str(&word);
        if rng.random::<f64>() < 0.08 {
            text.push(',');
        } else if rng.random::<f64>() < 0.07 {
            text.push('.');
            sentence_start = true;
        }
    }
    text.push('.');
    text
}
