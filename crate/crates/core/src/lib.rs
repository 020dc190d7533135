//! Topic navigation over large, noisy OCR corpora.
//!
//! Raw text goes through a configurable cleanup chain into a TF-IDF
//! term-document index. An LDA model with deliberately more topics than the
//! user cares about is then post-processed into seed-anchored "induced
//! topics": each seed word claims the LDA topics it dominates, and the
//! merged groups take turns picking signature words. A signature is used as
//! an expanded query and documents are ranked by cosine similarity.

pub mod engine;
pub mod error;
pub mod evaluation;
pub mod induction;
pub mod lda;
pub mod report;
pub mod retrieval;
pub mod store;
pub mod synthetic;
pub mod text;
pub mod vector;

pub use error::{Error, ErrorClass, Result};
