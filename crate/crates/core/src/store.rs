//! Versioned experiment directories.
//!
//! ```text
//! <root>/
//!   manifest.json   artifact -> file, sha256, producing config, dependency hashes
//!   pipeline.json   preprocessing config and lexicon
//!   corpus.tokens   JSONL, one preprocessed document per line
//!   vocab.tsv       term<TAB>df
//!   index.bin       TF-IDF document vectors
//!   lda.bin         topic-word matrix
//!   topics.json     induced topics
//!   eval/<name>.json
//! ```
//!
//! Binary artifacts start with an 8-byte magic and a little-endian `u32`
//! format version; every number after that is little-endian too.
//!
//! `index.bin`: `u64 n_docs, u64 vocab_size`, then per document
//! `u32 id_len, id bytes, u32 doc_length, u32 nnz, nnz x (u32 term, f64 weight)`.
//!
//! `lda.bin`: `u64 M, u64 V`, `M*V f64` row-major topic-word weights,
//! `M f64` smoothing floors, `u64 T, T f64` log-likelihood trace,
//! `u32 len` + JSON sampler config.
//!
//! Saving an artifact drops everything downstream of it from the manifest,
//! so a loaded chain is always consistent.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::evaluation::EvaluationReport;
use crate::lda::{LdaConfig, LdaModel};
use crate::report::TopicsDocument;
use crate::text::{Document, Pipeline};
use crate::vector::{SparseVector, TermDocumentIndex, Vocabulary};

pub const MANIFEST_VERSION: u32 = 1;
pub const BINARY_VERSION: u32 = 1;
const INDEX_MAGIC: &[u8; 8] = b"TNAVIDX\0";
const LDA_MAGIC: &[u8; 8] = b"TNAVLDA\0";
const MANIFEST: &str = "manifest.json";
const LOCK: &str = ".lock";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ArtifactKind {
    Pipeline,
    Corpus,
    Vocab,
    Index,
    Model,
    Topics,
    Eval(String),
}

impl ArtifactKind {
    pub fn name(&self) -> String {
        match self {
            ArtifactKind::Pipeline => "pipeline".into(),
            ArtifactKind::Corpus => "corpus".into(),
            ArtifactKind::Vocab => "vocab".into(),
            ArtifactKind::Index => "index".into(),
            ArtifactKind::Model => "lda".into(),
            ArtifactKind::Topics => "topics".into(),
            ArtifactKind::Eval(name) => format!("eval/{name}"),
        }
    }

    pub fn file_name(&self) -> String {
        match self {
            ArtifactKind::Pipeline => "pipeline.json".into(),
            ArtifactKind::Corpus => "corpus.tokens".into(),
            ArtifactKind::Vocab => "vocab.tsv".into(),
            ArtifactKind::Index => "index.bin".into(),
            ArtifactKind::Model => "lda.bin".into(),
            ArtifactKind::Topics => "topics.json".into(),
            ArtifactKind::Eval(name) => format!("eval/{name}.json"),
        }
    }

    pub fn dependencies(&self) -> Vec<ArtifactKind> {
        match self {
            ArtifactKind::Pipeline => vec![],
            ArtifactKind::Corpus => vec![ArtifactKind::Pipeline],
            ArtifactKind::Vocab => vec![ArtifactKind::Corpus],
            ArtifactKind::Index => vec![ArtifactKind::Corpus, ArtifactKind::Vocab],
            ArtifactKind::Model => vec![ArtifactKind::Index],
            ArtifactKind::Topics => vec![ArtifactKind::Model],
            ArtifactKind::Eval(_) => vec![ArtifactKind::Index],
        }
    }

    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "pipeline" => ArtifactKind::Pipeline,
            "corpus" => ArtifactKind::Corpus,
            "vocab" => ArtifactKind::Vocab,
            "index" => ArtifactKind::Index,
            "lda" => ArtifactKind::Model,
            "topics" => ArtifactKind::Topics,
            other => ArtifactKind::Eval(other.strip_prefix("eval/")?.to_owned()),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Artifact {
    Pipeline(Pipeline),
    Corpus(Vec<Document>),
    Vocab(Vocabulary),
    Index(TermDocumentIndex),
    Model(LdaModel),
    Topics(TopicsDocument),
    Eval { name: String, report: EvaluationReport },
}

impl Artifact {
    pub fn kind(&self) -> ArtifactKind {
        match self {
            Artifact::Pipeline(_) => ArtifactKind::Pipeline,
            Artifact::Corpus(_) => ArtifactKind::Corpus,
            Artifact::Vocab(_) => ArtifactKind::Vocab,
            Artifact::Index(_) => ArtifactKind::Index,
            Artifact::Model(_) => ArtifactKind::Model,
            Artifact::Topics(_) => ArtifactKind::Topics,
            Artifact::Eval { name, .. } => ArtifactKind::Eval(name.clone()),
        }
    }

    /// The exact bytes `save_artifact` writes.
    pub fn encode(&self) -> Result<Vec<u8>> {
        Ok(match self {
            Artifact::Pipeline(p) => to_json(p)?,
            Artifact::Corpus(docs) => {
                let mut out = Vec::new();
                for d in docs {
                    serde_json::to_writer(&mut out, d).map_err(json_err("corpus"))?;
                    out.push(b'\n');
                }
                out
            }
            Artifact::Vocab(v) => encode_vocab(v),
            Artifact::Index(idx) => encode_index(idx),
            Artifact::Model(m) => encode_model(m)?,
            Artifact::Topics(t) => to_json(t)?,
            Artifact::Eval { report, .. } => to_json(report)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
    #[serde(default)]
    pub config: serde_json::Value,
    /// Dependency name -> its sha256 when this artifact was written.
    #[serde(default)]
    pub depends_on: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub artifacts: BTreeMap<String, ManifestEntry>,
}

impl Default for Manifest {
    fn default() -> Self {
        Self {
            format_version: MANIFEST_VERSION,
            artifacts: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum ArtifactStatus {
    Ok,
    MissingFile,
    HashMismatch { expected: String, actual: String },
    MissingDependency { dependency: String },
    StaleDependency { dependency: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactCheck {
    pub artifact: String,
    pub file: String,
    #[serde(flatten)]
    pub status: ArtifactStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub ok: bool,
    pub artifacts: Vec<ArtifactCheck>,
}

impl VerifyReport {
    pub fn failures(&self) -> impl Iterator<Item = &ArtifactCheck> {
        self.artifacts.iter().filter(|c| c.status != ArtifactStatus::Ok)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentDir {
    root: PathBuf,
}

impl ExperimentDir {
    /// Creates the directory and an empty manifest if needed.
    pub fn create(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| Error::io(format!("creating {}", root.display()), e))?;
        let dir = Self { root };
        if !dir.manifest_path().exists() {
            write_atomic(&dir.manifest_path(), &to_json(&Manifest::default())?)?;
        }
        Ok(dir)
    }

    /// Opens an existing experiment; fails without a manifest.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let dir = Self { root: root.into() };
        dir.manifest()?;
        Ok(dir)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn manifest_path(&self) -> PathBuf {
        self.root.join(MANIFEST)
    }

    pub fn manifest(&self) -> Result<Manifest> {
        let path = self.manifest_path();
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(Error::ManifestMissing(path))
            }
            Err(e) => return Err(Error::io(format!("reading {}", path.display()), e)),
        };
        let manifest: Manifest = serde_json::from_slice(&bytes).map_err(|e| Error::Corrupt {
            artifact: "manifest".into(),
            message: e.to_string(),
        })?;
        if manifest.format_version != MANIFEST_VERSION {
            return Err(Error::VersionMismatch {
                artifact: "manifest".into(),
                found: manifest.format_version,
                expected: MANIFEST_VERSION,
            });
        }
        Ok(manifest)
    }

    pub fn has(&self, kind: &ArtifactKind) -> bool {
        self.manifest().is_ok_and(|m| m.artifacts.contains_key(&kind.name()))
    }

    pub fn entry(&self, kind: &ArtifactKind) -> Result<ManifestEntry> {
        self.manifest()?
            .artifacts
            .get(&kind.name())
            .cloned()
            .ok_or_else(|| Error::MissingArtifact(kind.name()))
    }

    /// Takes the single-writer lock. Released on drop.
    pub fn lock(&self) -> Result<ExperimentLock> {
        let path = self.root.join(LOCK);
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(ExperimentLock {
                    dir: self.clone(),
                    path,
                })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::Locked(path)),
            Err(e) => Err(Error::io(format!("creating {}", path.display()), e)),
        }
    }

    pub fn is_locked(&self) -> bool {
        self.root.join(LOCK).exists()
    }

    fn read_verified(&self, kind: &ArtifactKind) -> Result<Vec<u8>> {
        let manifest = self.manifest()?;
        let name = kind.name();
        let entry = manifest
            .artifacts
            .get(&name)
            .ok_or_else(|| Error::MissingArtifact(name.clone()))?;
        for dep in kind.dependencies() {
            let dep_name = dep.name();
            let Some(dep_entry) = manifest.artifacts.get(&dep_name) else {
                return Err(Error::MissingDependency {
                    artifact: name,
                    requires: dep_name,
                });
            };
            if entry.depends_on.get(&dep_name) != Some(&dep_entry.sha256) {
                return Err(Error::Corrupt {
                    artifact: name,
                    message: format!("built from a different `{dep_name}`"),
                });
            }
        }
        let path = self.root.join(&entry.file);
        let bytes = fs::read(&path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let actual = sha256_hex(&bytes);
        if actual != entry.sha256 {
            return Err(Error::HashMismatch {
                artifact: name,
                expected: entry.sha256.clone(),
                actual,
            });
        }
        Ok(bytes)
    }

    pub fn load_artifact(&self, kind: &ArtifactKind) -> Result<Artifact> {
        let bytes = self.read_verified(kind)?;
        let name = kind.name();
        Ok(match kind {
            ArtifactKind::Pipeline => Artifact::Pipeline(from_json(&bytes, &name)?),
            ArtifactKind::Corpus => Artifact::Corpus(decode_corpus(&bytes)?),
            ArtifactKind::Vocab => Artifact::Vocab(decode_vocab(&bytes)?),
            ArtifactKind::Index => {
                let vocab = decode_vocab(&self.read_verified(&ArtifactKind::Vocab)?)?;
                Artifact::Index(decode_index(&bytes, vocab)?)
            }
            ArtifactKind::Model => Artifact::Model(decode_model(&bytes)?),
            ArtifactKind::Topics => Artifact::Topics(from_json(&bytes, &name)?),
            ArtifactKind::Eval(n) => Artifact::Eval {
                name: n.clone(),
                report: from_json(&bytes, &name)?,
            },
        })
    }

    pub fn load_pipeline(&self) -> Result<Pipeline> {
        match self.load_artifact(&ArtifactKind::Pipeline)? {
            Artifact::Pipeline(p) => Ok(p),
            _ => unreachable!(),
        }
    }

    pub fn load_corpus(&self) -> Result<Vec<Document>> {
        match self.load_artifact(&ArtifactKind::Corpus)? {
            Artifact::Corpus(c) => Ok(c),
            _ => unreachable!(),
        }
    }

    pub fn load_vocab(&self) -> Result<Vocabulary> {
        match self.load_artifact(&ArtifactKind::Vocab)? {
            Artifact::Vocab(v) => Ok(v),
            _ => unreachable!(),
        }
    }

    pub fn load_index(&self) -> Result<TermDocumentIndex> {
        match self.load_artifact(&ArtifactKind::Index)? {
            Artifact::Index(i) => Ok(i),
            _ => unreachable!(),
        }
    }

    pub fn load_model(&self) -> Result<LdaModel> {
        match self.load_artifact(&ArtifactKind::Model)? {
            Artifact::Model(m) => Ok(m),
            _ => unreachable!(),
        }
    }

    pub fn load_topics(&self) -> Result<TopicsDocument> {
        match self.load_artifact(&ArtifactKind::Topics)? {
            Artifact::Topics(t) => Ok(t),
            _ => unreachable!(),
        }
    }

    /// Recomputes every hash and dependency link without modifying anything.
    pub fn verify(&self) -> Result<VerifyReport> {
        let manifest = self.manifest()?;
        let mut artifacts = Vec::new();
        for (name, entry) in &manifest.artifacts {
            let status = self.check_entry(&manifest, name, entry);
            artifacts.push(ArtifactCheck {
                artifact: name.clone(),
                file: entry.file.clone(),
                status,
            });
        }
        Ok(VerifyReport {
            ok: artifacts.iter().all(|a| a.status == ArtifactStatus::Ok),
            artifacts,
        })
    }

    fn check_entry(&self, manifest: &Manifest, name: &str, entry: &ManifestEntry) -> ArtifactStatus {
        let Ok(bytes) = fs::read(self.root.join(&entry.file)) else {
            return ArtifactStatus::MissingFile;
        };
        let actual = sha256_hex(&bytes);
        if actual != entry.sha256 {
            return ArtifactStatus::HashMismatch {
                expected: entry.sha256.clone(),
                actual,
            };
        }
        let deps = ArtifactKind::parse(name).map(|k| k.dependencies()).unwrap_or_default();
        for dep in deps {
            let dep_name = dep.name();
            match manifest.artifacts.get(&dep_name) {
                None => return ArtifactStatus::MissingDependency { dependency: dep_name },
                Some(d) if entry.depends_on.get(&dep_name) != Some(&d.sha256) => {
                    return ArtifactStatus::StaleDependency { dependency: dep_name }
                }
                Some(_) => {}
            }
        }
        ArtifactStatus::Ok
    }
}

/// Exclusive writer handle on an experiment directory.
#[derive(Debug)]
pub struct ExperimentLock {
    dir: ExperimentDir,
    path: PathBuf,
}

impl ExperimentLock {
    pub fn dir(&self) -> &ExperimentDir {
        &self.dir
    }

    /// Writes an artifact and records it in the manifest. `config` is kept
    /// verbatim as the producing configuration.
    pub fn save_artifact(&self, artifact: &Artifact, config: serde_json::Value) -> Result<ManifestEntry> {
        let kind = artifact.kind();
        let name = kind.name();
        let mut manifest = self.dir.manifest()?;

        let mut depends_on = BTreeMap::new();
        for dep in kind.dependencies() {
            let dep_name = dep.name();
            let entry = manifest.artifacts.get(&dep_name).ok_or_else(|| Error::MissingDependency {
                artifact: name.clone(),
                requires: dep_name.clone(),
            })?;
            depends_on.insert(dep_name, entry.sha256.clone());
        }
        if let Artifact::Index(idx) = artifact {
            let vocab_hash = sha256_hex(&encode_vocab(idx.vocabulary()));
            if depends_on.get("vocab") != Some(&vocab_hash) {
                return Err(Error::InvalidConfig(
                    "index vocabulary differs from the stored vocabulary".into(),
                ));
            }
        }

        let bytes = artifact.encode()?;
        let file = kind.file_name();
        write_atomic(&self.dir.root.join(&file), &bytes)?;
        let entry = ManifestEntry {
            file,
            sha256: sha256_hex(&bytes),
            bytes: bytes.len() as u64,
            config,
            depends_on,
        };
        manifest.artifacts.insert(name.clone(), entry.clone());
        invalidate_downstream(&mut manifest, &name);
        write_atomic(&self.dir.manifest_path(), &to_json(&manifest)?)?;
        Ok(entry)
    }
}

impl Drop for ExperimentLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// Removes entries whose recorded dependency hash no longer matches,
/// transitively.
fn invalidate_downstream(manifest: &mut Manifest, changed: &str) {
    loop {
        let stale: Vec<String> = manifest
            .artifacts
            .iter()
            .filter(|(name, _)| name.as_str() != changed)
            .filter(|(_, entry)| {
                entry.depends_on.iter().any(|(dep, hash)| {
                    manifest.artifacts.get(dep).is_none_or(|d| &d.sha256 != hash)
                })
            })
            .map(|(name, _)| name.clone())
            .collect();
        if stale.is_empty() {
            return;
        }
        for name in stale {
            manifest.artifacts.remove(&name);
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(format!("creating {}", parent.display()), e))?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| Error::io(format!("writing {}", tmp.display()), e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(format!("renaming to {}", path.display()), e))
}

fn json_err(artifact: &str) -> impl Fn(serde_json::Error) -> Error + '_ {
    move |e| Error::Corrupt {
        artifact: artifact.to_owned(),
        message: e.to_string(),
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value).map_err(json_err("json"))?;
    out.push(b'\n');
    Ok(out)
}

fn from_json<T: for<'de> Deserialize<'de>>(bytes: &[u8], artifact: &str) -> Result<T> {
    serde_json::from_slice(bytes).map_err(json_err(artifact))
}

fn decode_corpus(bytes: &[u8]) -> Result<Vec<Document>> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Corrupt {
        artifact: "corpus".into(),
        message: e.to_string(),
    })?;
    text.lines()
        .filter(|l| !l.is_empty())
        .map(|l| serde_json::from_str(l).map_err(json_err("corpus")))
        .collect()
}

fn encode_vocab(vocab: &Vocabulary) -> Vec<u8> {
    let mut out = String::new();
    for (term, df) in vocab.iter() {
        out.push_str(term);
        out.push('\t');
        out.push_str(&df.to_string());
        out.push('\n');
    }
    out.into_bytes()
}

fn decode_vocab(bytes: &[u8]) -> Result<Vocabulary> {
    let corrupt = |message: String| Error::Corrupt {
        artifact: "vocab".into(),
        message,
    };
    let text = std::str::from_utf8(bytes).map_err(|e| corrupt(e.to_string()))?;
    let mut entries = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let (term, df) = line
            .split_once('\t')
            .ok_or_else(|| corrupt(format!("line {}: expected term<TAB>df", n + 1)))?;
        let df = df.parse().map_err(|_| corrupt(format!("line {}: bad df", n + 1)))?;
        entries.push((term.to_owned(), df));
    }
    Vocabulary::from_parts(entries).map_err(|e| corrupt(e.to_string()))
}

fn header(magic: &[u8; 8]) -> Vec<u8> {
    let mut out = magic.to_vec();
    out.extend_from_slice(&BINARY_VERSION.to_le_bytes());
    out
}

fn encode_index(idx: &TermDocumentIndex) -> Vec<u8> {
    let mut out = header(INDEX_MAGIC);
    out.extend_from_slice(&(idx.n_docs() as u64).to_le_bytes());
    out.extend_from_slice(&(idx.vocabulary().len() as u64).to_le_bytes());
    for d in 0..idx.n_docs() {
        let id = idx.doc_ids()[d].as_bytes();
        out.extend_from_slice(&(id.len() as u32).to_le_bytes());
        out.extend_from_slice(id);
        out.extend_from_slice(&idx.doc_length(d).to_le_bytes());
        let entries = idx.doc_vector(d).entries();
        out.extend_from_slice(&(entries.len() as u32).to_le_bytes());
        for &(p, w) in entries {
            out.extend_from_slice(&p.to_le_bytes());
            out.extend_from_slice(&w.to_le_bytes());
        }
    }
    out
}

fn decode_index(bytes: &[u8], vocab: Vocabulary) -> Result<TermDocumentIndex> {
    let mut r = Reader::new(bytes, "index");
    r.header(INDEX_MAGIC)?;
    let n_docs = r.u64()? as usize;
    let v = r.u64()? as usize;
    if v != vocab.len() {
        return Err(r.corrupt(format!("index has {v} terms, vocabulary has {}", vocab.len())));
    }
    let mut ids = Vec::with_capacity(n_docs.min(1 << 20));
    let mut vectors = Vec::with_capacity(n_docs.min(1 << 20));
    let mut lengths = Vec::with_capacity(n_docs.min(1 << 20));
    for _ in 0..n_docs {
        let len = r.u32()? as usize;
        let id = String::from_utf8(r.take(len)?.to_vec()).map_err(|e| r.corrupt(e.to_string()))?;
        lengths.push(r.u32()?);
        let nnz = r.u32()? as usize;
        let mut entries = Vec::with_capacity(nnz.min(1 << 16));
        for _ in 0..nnz {
            let p = r.u32()?;
            let w = r.f64()?;
            if (p as usize) >= v || !(w.is_finite() && w > 0.0) {
                return Err(r.corrupt(format!("bad entry ({p}, {w}) in document `{id}`")));
            }
            if entries.last().is_some_and(|&(q, _)| q >= p) {
                return Err(r.corrupt(format!("unsorted vector for document `{id}`")));
            }
            entries.push((p, w));
        }
        ids.push(id);
        vectors.push(SparseVector::new(entries));
    }
    r.finish()?;
    TermDocumentIndex::from_parts(vocab, ids, vectors, lengths).map_err(|e| Error::Corrupt {
        artifact: "index".into(),
        message: e.to_string(),
    })
}

fn encode_model(model: &LdaModel) -> Result<Vec<u8>> {
    let mut out = header(LDA_MAGIC);
    out.extend_from_slice(&(model.n_topics() as u64).to_le_bytes());
    out.extend_from_slice(&(model.vocab_size() as u64).to_le_bytes());
    for w in model.topic_word().iter().chain(model.smoothing_floor()) {
        out.extend_from_slice(&w.to_le_bytes());
    }
    let trace = model.log_likelihood_trace();
    out.extend_from_slice(&(trace.len() as u64).to_le_bytes());
    for w in trace {
        out.extend_from_slice(&w.to_le_bytes());
    }
    let config = serde_json::to_vec(model.config()).map_err(json_err("lda"))?;
    out.extend_from_slice(&(config.len() as u32).to_le_bytes());
    out.extend_from_slice(&config);
    Ok(out)
}

fn decode_model(bytes: &[u8]) -> Result<LdaModel> {
    let mut r = Reader::new(bytes, "lda");
    r.header(LDA_MAGIC)?;
    let m = r.u64()? as usize;
    let v = r.u64()? as usize;
    let cells = m
        .checked_mul(v)
        .filter(|c| c.saturating_mul(8) <= bytes.len())
        .ok_or_else(|| r.corrupt(format!("implausible shape {m} x {v}")))?;
    let topic_word = (0..cells).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    let floors = (0..m).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    let t = r.u64()? as usize;
    if t.saturating_mul(8) > bytes.len() {
        return Err(r.corrupt(format!("implausible trace length {t}")));
    }
    let trace = (0..t).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    let len = r.u32()? as usize;
    let config: LdaConfig = serde_json::from_slice(r.take(len)?).map_err(json_err("lda"))?;
    r.finish()?;
    if config.n_topics != m {
        return Err(r.corrupt(format!("config says {} topics, matrix has {m}", config.n_topics)));
    }
    LdaModel::from_parts(config, v, topic_word, floors, trace).map_err(|e| r.corrupt(e.to_string()))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    artifact: &'static str,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8], artifact: &'static str) -> Self {
        Self { bytes, pos: 0, artifact }
    }

    fn corrupt(&self, message: String) -> Error {
        Error::Corrupt {
            artifact: self.artifact.into(),
            message,
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| self.corrupt(format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn header(&mut self, magic: &[u8; 8]) -> Result<()> {
        if self.take(8)? != magic {
            return Err(self.corrupt("bad magic".into()));
        }
        let found = self.u32()?;
        if found != BINARY_VERSION {
            return Err(Error::VersionMismatch {
                artifact: self.artifact.into(),
                found,
                expected: BINARY_VERSION,
            });
        }
        Ok(())
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(self.corrupt(format!("{} trailing bytes", self.bytes.len() - self.pos)));
        }
        Ok(())
    }
}
