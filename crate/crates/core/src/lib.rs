//! Retrieval engine pairing a recursive summary tree with a sentence-level
//! entity co-occurrence graph.
//!
//! Indexing splits a document into overlapping chunks, summarizes groups of
//! chunks into a tree, and (in parallel) extracts entities per chunk into a
//! co-occurrence graph with entity↔chunk indexes. Retrieval picks between
//! graph-guided local evidence and tree-guided global context per query,
//! without calling a language model.

pub mod backends;
pub mod chunker;
pub mod error;
pub mod eval;
pub mod formatter;
pub mod graph;
pub mod persistence;
pub mod pipeline;
pub mod query;
pub mod scaling;
pub mod synth;
pub mod tree;

pub use error::{Error, Result};
