use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One OCR-extracted text fragment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date: Option<NaiveDate>,
    #[serde(rename = "text")]
    pub raw_text: String,
    #[serde(default)]
    pub tokens: Vec<String>,
}

impl Document {
    pub fn new(id: impl Into<String>, raw_text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            date: None,
            raw_text: raw_text.into(),
            tokens: Vec::new(),
        }
    }

    /// A document that skips preprocessing, mostly for tests and synthetic
    /// corpora.
    pub fn from_tokens(id: impl Into<String>, tokens: &[&str]) -> Self {
        Self {
            id: id.into(),
            date: None,
            raw_text: tokens.join(" "),
            tokens: tokens.iter().map(|t| t.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Jsonl,
    /// Every `*.txt` file under a directory is one document.
    Dir,
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(CorpusFormat::Jsonl),
            "dir" | "text-directory" => Ok(CorpusFormat::Dir),
            other => Err(Error::InvalidConfig(format!(
                "unknown corpus format `{other}` (expected jsonl or dir)"
            ))),
        }
    }
}

impl fmt::Display for CorpusFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorpusFormat::Jsonl => "jsonl",
            CorpusFormat::Dir => "dir",
        })
    }
}

#[derive(Deserialize)]
struct JsonlRecord {
    id: String,
    text: String,
    #[serde(default)]
    date: Option<String>,
}

pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Vec<Document>> {
    let docs = match format {
        CorpusFormat::Jsonl => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::io(format!("reading corpus {}", path.display()), e))?;
            parse_jsonl(&text, path)?
        }
        CorpusFormat::Dir => load_text_dir(path)?,
    };
    let mut seen = HashSet::with_capacity(docs.len());
    for doc in &docs {
        if !seen.insert(doc.id.as_str()) {
            return Err(Error::DuplicateId(doc.id.clone()));
        }
    }
    Ok(docs)
}

/// `path` is only used for error messages.
pub fn parse_jsonl(text: &str, path: &Path) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |message: String| Error::MalformedRecord {
            path: path.to_owned(),
            line: n + 1,
            message,
        };
        let record: JsonlRecord =
            serde_json::from_str(line).map_err(|e| malformed(e.to_string()))?;
        let date = record
            .date
            .as_deref()
            .map(parse_date)
            .transpose()
            .map_err(malformed)?;
        docs.push(Document {
            id: record.id,
            date,
            raw_text: record.text,
            tokens: Vec::new(),
        });
    }
    Ok(docs)
}

fn parse_date(s: &str) -> std::result::Result<NaiveDate, String> {
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Ok(d);
    }
    // full timestamps: keep the calendar date
    s.get(..10)
        .filter(|_| s.as_bytes().get(10) == Some(&b'T'))
        .and_then(|p| NaiveDate::parse_from_str(p, "%Y-%m-%d").ok())
        .ok_or_else(|| format!("invalid ISO-8601 date `{s}`"))
}

fn load_text_dir(root: &Path) -> Result<Vec<Document>> {
    if !root.is_dir() {
        return Err(Error::io(
            format!("reading corpus directory {}", root.display()),
            std::io::Error::new(std::io::ErrorKind::NotFound, "not a directory"),
        ));
    }
    let mut docs = Vec::new();
    for entry in walkdir::WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| {
            let context = format!("walking {}", root.display());
            Error::io(context, e.into())
        })?;
        let path = entry.path();
        if !entry.file_type().is_file() || path.extension().is_none_or(|ext| ext != "txt") {
            continue;
        }
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let rel = path.strip_prefix(root).unwrap_or(path);
        let id = rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        docs.push(Document::new(id, text));
    }
    Ok(docs)
}

/// Reads a stopword list: one term per line, `#` comments.
pub fn read_word_list(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading word list {}", path.display()), e))?;
    Ok(parse_word_list(&text))
}

pub fn parse_word_list(text: &str) -> Vec<String> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(str::to_owned)
        .collect()
}
