//! Corpus loading and the preprocessing chain that turns raw OCR text into
//! index terms.
//!
//! The chain runs in a fixed order: character normalization, tokenization,
//! noise and stopword filtering, lexical standardization, stemming.

mod corpus;
mod lexicon;
mod normalize;
mod stem;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub use corpus::{load_corpus, parse_jsonl, parse_word_list, read_word_list, CorpusFormat, Document};
pub use lexicon::{standardize, LexiconTable};
pub use normalize::{normalize_text, Tokenizer};
pub use stem::{SuffixRule, SuffixStemmer};

use crate::error::{Error, Result};

/// Predicate marking a token as OCR debris.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule", content = "value")]
pub enum NoiseRule {
    /// Fewer than this many letters.
    MinLetters(usize),
    /// Letters and digits mixed in a token shorter than this.
    ShortAlnumMix(usize),
    /// Any character that is not a letter, digit or inner hyphen.
    ContainsSymbol,
}

impl NoiseRule {
    pub fn is_noise(&self, token: &str) -> bool {
        match *self {
            NoiseRule::MinLetters(n) => token.chars().filter(|c| c.is_alphabetic()).count() < n,
            NoiseRule::ShortAlnumMix(n) => {
                token.chars().any(char::is_alphabetic)
                    && token.chars().any(|c| c.is_numeric())
                    && token.chars().count() < n
            }
            NoiseRule::ContainsSymbol => token.chars().any(|c| !c.is_alphanumeric() && c != '-'),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub stopwords: BTreeSet<String>,
    pub min_token_len: usize,
    pub noise_rules: Vec<NoiseRule>,
    pub stemmer: SuffixStemmer,
    pub tokenizer: Tokenizer,
    pub lowercase: bool,
    pub strip_diacritics: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            stopwords: BTreeSet::new(),
            min_token_len: 2,
            noise_rules: vec![
                NoiseRule::MinLetters(2),
                NoiseRule::ShortAlnumMix(5),
                NoiseRule::ContainsSymbol,
            ],
            stemmer: SuffixStemmer::default(),
            tokenizer: Tokenizer::Words,
            lowercase: true,
            strip_diacritics: false,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_token_len == 0 {
            return Err(Error::InvalidConfig("min_token_len must be at least 1".into()));
        }
        Ok(())
    }

    pub fn with_stopwords<I, S>(mut self, words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.stopwords.extend(words.into_iter().map(Into::into));
        self
    }

    fn keep(&self, token: &str) -> bool {
        token.chars().count() >= self.min_token_len
            && !self.stopwords.contains(token)
            && !self.noise_rules.iter().any(|r| r.is_noise(token))
    }

    /// Drops stopwords, short tokens and noise.
    pub fn filter_noise_and_stopwords(&self, tokens: Vec<String>) -> Vec<String> {
        tokens.into_iter().filter(|t| self.keep(t)).collect()
    }
}

/// Runs the full chain on a document; the result carries the tokens and an
/// untouched copy of the raw text.
///
/// The filter runs once more after stemming: a lexicon entry or stem can map
/// a surviving token onto a stopword or below the length floor.
pub fn preprocess(doc: &Document, config: &PipelineConfig, lexicon: &LexiconTable) -> Document {
    let text = normalize_text(&doc.raw_text, config.lowercase, config.strip_diacritics);
    let tokens = config.filter_noise_and_stopwords(config.tokenizer.tokenize(&text));
    let tokens: Vec<String> = standardize(&tokens, lexicon)
        .iter()
        .map(|t| config.stemmer.stem(t))
        .collect();
    Document {
        id: doc.id.clone(),
        date: doc.date,
        raw_text: doc.raw_text.clone(),
        tokens: config.filter_noise_and_stopwords(tokens),
    }
}

/// Configuration and lexicon bundled together, as persisted with an
/// experiment.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Pipeline {
    pub config: PipelineConfig,
    #[serde(default)]
    pub lexicon: LexiconTable,
}

impl Pipeline {
    pub fn new(config: PipelineConfig, lexicon: LexiconTable) -> Result<Self> {
        config.validate()?;
        Ok(Self { config, lexicon })
    }

    pub fn preprocess(&self, doc: &Document) -> Document {
        preprocess(doc, &self.config, &self.lexicon)
    }

    pub fn preprocess_all(&self, docs: &[Document]) -> Vec<Document> {
        docs.iter().map(|d| self.preprocess(d)).collect()
    }

    /// Maps a user-typed term (a seed or query word) into index form.
    /// Returns `None` when the chain filters the term out.
    pub fn analyze_term(&self, term: &str) -> Option<String> {
        let doc = self.preprocess(&Document::new("", term));
        match doc.tokens.as_slice() {
            [single] => Some(single.clone()),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn eleicao_pipeline() -> Pipeline {
        let config = PipelineConfig {
            stemmer: SuffixStemmer::parse("ição\tic\nições\tic\n").unwrap(),
            ..PipelineConfig::default()
        }
        .with_stopwords(["a", "das"]);
        Pipeline::new(config, LexiconTable::default()).unwrap()
    }

    #[test]
    fn five_stage_trace() {
        // normalize: "a eleição das eleições"; tokenize: 4 tokens;
        // filter: drops a, das; standardize: identity; stem: both → eleic
        let p = eleicao_pipeline();
        let out = p.preprocess(&Document::new("d", "A eleição das eleições"));
        assert_eq!(out.tokens, vec!["eleic", "eleic"]);
        assert_eq!(out.raw_text, "A eleição das eleições");
    }

    #[test]
    fn only_stopwords_yields_empty_tokens() {
        let p = eleicao_pipeline();
        assert!(p.preprocess(&Document::new("d", "A das a")).tokens.is_empty());
    }

    #[test]
    fn noise_token_removed() {
        let p = eleicao_pipeline();
        let out = p.preprocess(&Document::new("d", "voto xj7##q urna"));
        assert_eq!(out.tokens, vec!["voto", "urna"]);
    }

    #[test]
    fn default_noise_rules() {
        let cfg = PipelineConfig::default();
        let kept = cfg.filter_noise_and_stopwords(
            ["a1b", "ab12cd", "1922", "x", "mesa", "guarda-chuva", "b@d"]
                .map(String::from)
                .to_vec(),
        );
        assert_eq!(kept, vec!["ab12cd", "mesa", "guarda-chuva"]);
    }

    #[test]
    fn lexicon_applies_before_stemming() {
        let config = PipelineConfig {
            stemmer: SuffixStemmer::parse("ia\t\n").unwrap(),
            ..PipelineConfig::default()
        };
        let lex = LexiconTable::parse_tsv("pharmacia\tfarmacia\n").unwrap();
        let p = Pipeline::new(config, lex).unwrap();
        assert_eq!(p.preprocess(&Document::new("d", "Pharmacia")).tokens, vec!["farmac"]);
    }

    #[test]
    fn lexicon_mapping_onto_stopword_is_filtered() {
        let config = PipelineConfig::default().with_stopwords(["de"]);
        let lex = LexiconTable::parse_tsv("dee\tde\n").unwrap();
        let p = Pipeline::new(config, lex).unwrap();
        assert!(p.preprocess(&Document::new("d", "dee")).tokens.is_empty());
    }

    #[test]
    fn analyze_term_uses_the_chain() {
        let p = eleicao_pipeline();
        assert_eq!(p.analyze_term("Eleição").as_deref(), Some("eleic"));
        assert_eq!(p.analyze_term("das"), None);
    }

    #[test]
    fn zero_min_token_len_rejected() {
        let config = PipelineConfig {
            min_token_len: 0,
            ..PipelineConfig::default()
        };
        assert!(Pipeline::new(config, LexiconTable::default()).is_err());
    }

    #[test]
    fn config_json_round_trip() {
        let p = eleicao_pipeline();
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(serde_json::from_str::<Pipeline>(&json).unwrap(), p);
    }

    proptest! {
        #[test]
        fn output_tokens_respect_filters(raw in "[a-zç0-9#@ \\n\\-,.]{0,80}") {
            let p = eleicao_pipeline();
            let a = p.preprocess(&Document::new("d", raw.clone()));
            let b = p.preprocess(&Document::new("d", raw));
            prop_assert_eq!(&a.tokens, &b.tokens);
            for t in &a.tokens {
                prop_assert!(t.chars().count() >= p.config.min_token_len);
                prop_assert!(!p.config.stopwords.contains(t));
                prop_assert!(!p.config.noise_rules.iter().any(|r| r.is_noise(t)));
            }
        }

        #[test]
        fn tokens_never_contain_whitespace_or_controls(raw in "\\PC{0,60}|[\\x00-\\x20a-z\\-]{0,60}") {
            for tokenizer in [Tokenizer::Words, Tokenizer::LettersOnly] {
                for t in tokenizer.tokenize(&normalize_text(&raw, true, true)) {
                    prop_assert!(!t.is_empty());
                    prop_assert!(!t.chars().any(|c| c.is_whitespace() || c.is_control()), "{:?}", t);
                }
            }
        }
    }
}
