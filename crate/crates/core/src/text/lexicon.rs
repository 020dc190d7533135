use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spelling-variant table mapping historical forms to a canonical spelling.
///
/// Construction rejects chains (`a → b`, `b → c`), so a single lookup is
/// already a fixed point.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, String>", into = "BTreeMap<String, String>")]
pub struct LexiconTable {
    entries: BTreeMap<String, String>,
}

impl LexiconTable {
    pub fn new(entries: impl IntoIterator<Item = (String, String)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (variant, canonical) in entries {
            if let Some(prev) = map.insert(variant.clone(), canonical.clone()) {
                if prev != canonical {
                    return Err(Error::InvalidLexicon(format!(
                        "variant `{variant}` maps to both `{prev}` and `{canonical}`"
                    )));
                }
            }
        }
        for (variant, canonical) in &map {
            if let Some(next) = map.get(canonical) {
                if next != canonical {
                    return Err(Error::InvalidLexicon(format!(
                        "canonical form `{canonical}` (from `{variant}`) is itself mapped to `{next}`"
                    )));
                }
            }
        }
        Ok(Self { entries: map })
    }

    /// Parses `variant<TAB>canonical` lines. Blank lines and `#` comments
    /// are skipped.
    pub fn parse_tsv(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let Some((variant, canonical)) = line.split_once('\t') else {
                return Err(Error::InvalidLexicon(format!(
                    "line {}: expected `variant<TAB>canonical`",
                    n + 1
                )));
            };
            let (variant, canonical) = (variant.trim(), canonical.trim());
            if variant.is_empty() || canonical.is_empty() || canonical.contains('\t') {
                return Err(Error::InvalidLexicon(format!(
                    "line {}: expected exactly two non-empty columns",
                    n + 1
                )));
            }
            entries.push((variant.to_owned(), canonical.to_owned()));
        }
        Self::new(entries)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading lexicon {}", path.display()), e))?;
        Self::parse_tsv(&text)
    }

    pub fn get(&self, term: &str) -> Option<&str> {
        self.entries.get(term).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl TryFrom<BTreeMap<String, String>> for LexiconTable {
    type Error = Error;

    fn try_from(map: BTreeMap<String, String>) -> Result<Self> {
        Self::new(map)
    }
}

impl From<LexiconTable> for BTreeMap<String, String> {
    fn from(table: LexiconTable) -> Self {
        table.entries
    }
}

/// Replaces every token that has a canonical form; length is preserved.
pub fn standardize(tokens: &[String], lexicon: &LexiconTable) -> Vec<String> {
    tokens
        .iter()
        .map(|t| lexicon.get(t).map_or_else(|| t.clone(), str::to_owned))
        .collect()
}
