//! Annotation-quality engine for multi-label technical text.
//!
//! A corpus of short technical records and their (weakly supervised) label
//! assignments is profiled with a surrogate classifier. The resulting
//! probabilities, co-occurrence statistics and label densities point at
//! duplicate, wrong and missing labels; relabel operations are collected in
//! a history and replayed into new annotation snapshots.

pub mod corpus;
pub mod error;
pub mod explain;

pub use error::{Error, Result};
pub mod projector;
pub mod quality;
pub mod relabel;
pub mod serde_ext;
pub mod sparse;
pub mod surrogate;
pub mod synth;
pub mod vectorizer;
