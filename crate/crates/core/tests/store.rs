mod common;

use std::fs;

use common::{fixture, persistence};
use topicnav_core::store::{Artifact, ArtifactKind, ArtifactStatus, ExperimentDir};
use topicnav_core::text::Document;
use topicnav_core::vector::{build_index, build_vocabulary};
use topicnav_core::Error;

#[test]
fn every_kind_round_trips_and_detects_tampering() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = fixture::full_experiment(tmp.path());
    assert!(dir.verify().unwrap().ok);
    persistence::round_trip(&dir).unwrap();
    persistence::corruption_detected(&dir).unwrap();
}

fn three_docs() -> Vec<Document> {
    vec![
        Document::from_tokens("d1", &["a", "b"]),
        Document::from_tokens("d2", &["b"]),
        Document::from_tokens("d3", &["c"]),
    ]
}

#[test]
fn three_document_index_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = ExperimentDir::create(tmp.path()).unwrap();
    let docs = three_docs();
    let vocab = build_vocabulary(&docs, 1, 1.0).unwrap();
    let index = build_index(&docs, vocab.clone()).unwrap();
    {
        let lock = dir.lock().unwrap();
        lock.save_artifact(&Artifact::Pipeline(Default::default()), serde_json::json!({})).unwrap();
        lock.save_artifact(&Artifact::Corpus(docs.clone()), serde_json::json!({})).unwrap();
        lock.save_artifact(&Artifact::Vocab(vocab), serde_json::json!({})).unwrap();
        lock.save_artifact(&Artifact::Index(index.clone()), serde_json::json!({"min_df": 1})).unwrap();
    }
    let reopened = ExperimentDir::open(tmp.path()).unwrap();
    assert_eq!(reopened.load_index().unwrap(), index);
    assert_eq!(reopened.load_corpus().unwrap(), docs);
    assert_eq!(reopened.entry(&ArtifactKind::Index).unwrap().config["min_df"], 1);
}

#[test]
fn missing_manifest_is_a_clear_error() {
    let tmp = tempfile::tempdir().unwrap();
    let err = ExperimentDir::open(tmp.path()).unwrap_err();
    assert!(matches!(err, Error::ManifestMissing(_)), "{err}");
    assert_eq!(err.code(), "MANIFEST_MISSING");
    // nothing was created by the failed open
    assert_eq!(fs::read_dir(tmp.path()).unwrap().count(), 0);
}

#[test]
fn missing_dependency_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = ExperimentDir::create(tmp.path()).unwrap();
    let lock = dir.lock().unwrap();
    let err = lock.save_artifact(&Artifact::Corpus(three_docs()), serde_json::json!({})).unwrap_err();
    assert!(matches!(err, Error::MissingDependency { .. }), "{err}");
    assert!(matches!(dir.load_corpus(), Err(Error::MissingArtifact(_))));
}

#[test]
fn single_writer() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = ExperimentDir::create(tmp.path()).unwrap();
    let lock = dir.lock().unwrap();
    assert!(matches!(dir.lock(), Err(Error::Locked(_))));
    assert!(dir.is_locked());
    drop(lock);
    assert!(!dir.is_locked());
    dir.lock().unwrap();
}

#[test]
fn replacing_an_artifact_drops_what_was_built_from_it() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = fixture::full_experiment(tmp.path());
    let lock = dir.lock().unwrap();
    let mut docs = dir.load_corpus().unwrap();
    docs.pop();
    lock.save_artifact(&Artifact::Corpus(docs), serde_json::json!({})).unwrap();
    for kind in [ArtifactKind::Vocab, ArtifactKind::Index, ArtifactKind::Model, ArtifactKind::Topics] {
        assert!(!dir.has(&kind), "{} survived", kind.name());
    }
    assert!(dir.has(&ArtifactKind::Pipeline) && dir.has(&ArtifactKind::Corpus));
    assert!(dir.verify().unwrap().ok);
}

#[test]
fn deleted_file_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = fixture::full_experiment(tmp.path());
    fs::remove_file(dir.root().join("lda.bin")).unwrap();
    let report = dir.verify().unwrap();
    let check = report.artifacts.iter().find(|c| c.artifact == "lda").unwrap();
    assert_eq!(check.status, ArtifactStatus::MissingFile);
    assert!(matches!(dir.load_model(), Err(Error::Io { .. })));
}

#[test]
fn future_manifest_version_is_refused() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = ExperimentDir::create(tmp.path()).unwrap();
    let path = tmp.path().join("manifest.json");
    let mut m: serde_json::Value = serde_json::from_slice(&fs::read(&path).unwrap()).unwrap();
    m["format_version"] = 99.into();
    fs::write(&path, m.to_string()).unwrap();
    assert!(matches!(dir.manifest(), Err(Error::VersionMismatch { found: 99, .. })));
}

#[test]
fn binary_header_version_is_checked() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = fixture::full_experiment(tmp.path());
    let path = dir.root().join("lda.bin");
    let mut bytes = fs::read(&path).unwrap();
    assert_eq!(&bytes[..8], b"TNAVLDA\0");
    bytes[8] = 0x7f;
    // rewrite the manifest hash so only the version check can catch it
    fs::write(&path, &bytes).unwrap();
    let mpath = dir.root().join("manifest.json");
    let mut m: serde_json::Value = serde_json::from_slice(&fs::read(&mpath).unwrap()).unwrap();
    m["artifacts"]["lda"]["sha256"] = topicnav_core::store::sha256_hex(&bytes).into();
    fs::write(&mpath, m.to_string()).unwrap();
    assert!(matches!(dir.load_model(), Err(Error::VersionMismatch { .. })));
}
