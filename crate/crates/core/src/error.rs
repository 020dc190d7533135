use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad class of a failure, used by front ends to pick exit codes and
/// HTTP statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// The caller supplied something invalid; nothing was attempted.
    Validation,
    /// The engine ran and hit a domain failure.
    Engine,
    /// Filesystem or artifact-integrity failure.
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: malformed record: {message}")]
    MalformedRecord {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate document id `{0}`")]
    DuplicateId(String),

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid lexicon: {0}")]
    InvalidLexicon(String),

    #[error("{what} index {index} out of range (size {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("seed `{seed}` never reached a relevant weight up to fragmentation factor n = {n_max}")]
    SeedNeverCovered { seed: String, n_max: usize },

    #[error("none of the query terms are in the vocabulary: {}", terms.join(", "))]
    AllTermsUnknown { terms: Vec<String> },

    #[error("no topic with seed `{0}` in the induced topics")]
    UnknownTopic(String),

    #[error("precision is undefined without positive predictions")]
    NoPositivePredictions,

    #[error("document id `{0}` is not part of the corpus")]
    IdOutsideCorpus(String),

    #[error("artifact `{artifact}` failed its integrity check (expected {expected}, found {actual})")]
    HashMismatch {
        artifact: String,
        expected: String,
        actual: String,
    },

    #[error("artifact `{artifact}` has format version {found}, expected {expected}")]
    VersionMismatch {
        artifact: String,
        found: u32,
        expected: u32,
    },

    #[error("artifact `{0}` has not been built")]
    MissingArtifact(String),

    #[error("artifact `{artifact}` requires `{requires}`, which has not been built")]
    MissingDependency { artifact: String, requires: String },

    #[error("no experiment manifest at {0}")]
    ManifestMissing(PathBuf),

    #[error("experiment is locked by another writer ({0})")]
    Locked(PathBuf),

    #[error("artifact `{artifact}` is corrupt: {message}")]
    Corrupt { artifact: String, message: String },
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    /// Stable machine-readable code shared by the CLI and the HTTP service.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Io { .. } => "IO_ERROR",
            Error::MalformedRecord { .. } => "MALFORMED_RECORD",
            Error::DuplicateId(_) => "DUPLICATE_ID",
            Error::EmptyCorpus => "EMPTY_CORPUS",
            Error::InvalidConfig(_) => "VALIDATION",
            Error::InvalidLexicon(_) => "INVALID_LEXICON",
            Error::IndexOutOfRange { .. } => "INDEX_OUT_OF_RANGE",
            Error::SeedNeverCovered { .. } => "SEED_NEVER_COVERED",
            Error::AllTermsUnknown { .. } => "ALL_TERMS_UNKNOWN",
            Error::UnknownTopic(_) => "UNKNOWN_TOPIC",
            Error::NoPositivePredictions => "NO_POSITIVE_PREDICTIONS",
            Error::IdOutsideCorpus(_) => "ID_OUTSIDE_CORPUS",
            Error::HashMismatch { .. } => "HASH_MISMATCH",
            Error::VersionMismatch { .. } => "VERSION_MISMATCH",
            Error::MissingArtifact(_) => "MISSING_ARTIFACT",
            Error::MissingDependency { .. } => "MISSING_DEPENDENCY",
            Error::ManifestMissing(_) => "MANIFEST_MISSING",
            Error::Locked(_) => "EXPERIMENT_LOCKED",
            Error::Corrupt { .. } => "CORRUPT_ARTIFACT",
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidConfig(_)
            | Error::InvalidLexicon(_)
            | Error::IndexOutOfRange { .. }
            | Error::UnknownTopic(_) => ErrorClass::Validation,
            Error::Io { .. }
            | Error::HashMismatch { .. }
            | Error::VersionMismatch { .. }
            | Error::ManifestMissing(_)
            | Error::Locked(_)
            | Error::Corrupt { .. } => ErrorClass::Io,
            _ => ErrorClass::Engine,
        }
    }
}
