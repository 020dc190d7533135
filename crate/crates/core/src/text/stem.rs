use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuffixRule {
    pub suffix: String,
    pub replacement: String,
}

/// Rule-driven suffix stripper. Rules are kept longest-suffix-first and
/// only the first matching rule is applied.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SuffixStemmer {
    rules: Vec<SuffixRule>,
    /// Minimum number of characters that must remain before the suffix.
    min_stem_len: usize,
}

impl SuffixStemmer {
    pub fn new(mut rules: Vec<SuffixRule>, min_stem_len: usize) -> Self {
        // stable sort keeps file order among equal-length suffixes
        rules.sort_by_key(|r| std::cmp::Reverse(r.suffix.chars().count()));
        Self {
            rules,
            min_stem_len,
        }
    }

    /// Parses `suffix<TAB>replacement` lines; the replacement column may be
    /// empty. `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rules = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let (suffix, replacement) = line.split_once('\t').unwrap_or((line, ""));
            let suffix = suffix.trim();
            if suffix.is_empty() {
                return Err(Error::InvalidConfig(format!(
                    "stemmer rules line {}: empty suffix",
                    n + 1
                )));
            }
            rules.push(SuffixRule {
                suffix: suffix.to_owned(),
                replacement: replacement.trim().to_owned(),
            });
        }
        Ok(Self::new(rules, 2))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading stemmer rules {}", path.display()), e))?;
        Self::parse(&text)
    }

    pub fn rules(&self) -> &[SuffixRule] {
        &self.rules
    }

    pub fn stem(&self, token: &str) -> String {
        for rule in &self.rules {
            if let Some(stem) = token.strip_suffix(rule.suffix.as_str()) {
                if stem.chars().count() >= self.min_stem_len.max(1) {
                    return format!("{stem}{}", rule.replacement);
                }
            }
        }
        token.to_owned()
    }
}
