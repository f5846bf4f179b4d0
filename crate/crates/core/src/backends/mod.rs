//! Summarizer, embedder and entity-extractor interfaces.
//!
//! Each role has a deterministic offline implementation used by tests and the
//! default CLI configuration. Summarizer and embedder additionally have HTTP
//! implementations speaking the OpenAI-compatible JSON shapes, see
//! [`http`] and `docs/http-protocol.md`.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub mod config;
pub mod http;
pub mod offline;
pub mod subprocess;

pub use config::{BackendConfig, BackendKind, BackendsConfig};
pub use offline::{HashedBowEmbedder, TruncatingSummarizer};

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("request timed out")]
    Timeout,
    #[error("http status {status}")]
    Status { status: u16 },
    #[error("unexpected response: {0}")]
    Protocol(String),
    #[error("backend configuration: {0}")]
    Config(String),
    #[error("entity extractor: {0}")]
    Extractor(String),
    #[error("{0}")]
    Other(String),
}

impl BackendError {
    /// Whether repeating the same request may succeed.
    pub fn is_transient(&self) -> bool {
        match self {
            BackendError::Transport(_) | BackendError::Timeout | BackendError::Other(_) => true,
            BackendError::Status { status } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

pub trait Summarizer: Send + Sync {
    /// Identifier recorded in the index metadata. Never contains credentials.
    fn id(&self) -> String;

    fn summarize(&self, texts: &[&str]) -> Result<String, BackendError>;
}

pub trait Embedder: Send + Sync {
    fn id(&self) -> String;

    fn embed(&self, texts: &[&str]) -> Result<Vec<Vec<f32>>, BackendError>;
}

/// Splits one sentence into surface mentions of entities, in order of
/// appearance. Repeated mentions are returned repeatedly.
pub trait EntityExtractor: Send + Sync {
    fn id(&self) -> String;

    fn extract(&self, sentence: &str) -> Result<Vec<String>, BackendError>;
}

impl<T: Summarizer + ?Sized> Summarizer for &T {
    fn id(&self) -> String {
        (**self).id()
    }
    fn summarize(&self, texts: &[&str]) -> Result<String, BackendError> {
        (**self).summarize(texts)
    }
}

impl<T: Embedder + ?Sized> Embedder for &T {
    fn id(&self) -> String {
        (**self).id()
    }
    fn embed(&self, texts: &[&str]) -> Result<Vec<Vec<f32>>, BackendError> {
        (**self).embed(texts)
    }
}

impl<T: Summarizer + ?Sized> Summarizer for Arc<T> {
    fn id(&self) -> String {
        (**self).id()
    }
    fn summarize(&self, texts: &[&str]) -> Result<String, BackendError> {
        (**self).summarize(texts)
    }
}

impl<T: Embedder + ?Sized> Embedder for Arc<T> {
    fn id(&self) -> String {
        (**self).id()
    }
    fn embed(&self, texts: &[&str]) -> Result<Vec<Vec<f32>>, BackendError> {
        (**self).embed(texts)
    }
}

impl<T: EntityExtractor + ?Sized> EntityExtractor for Arc<T> {
    fn id(&self) -> String {
        (**self).id()
    }
    fn extract(&self, sentence: &str) -> Result<Vec<String>, BackendError> {
        (**self).extract(sentence)
    }
}

/// Monotone call counters shared between clones.
#[derive(Debug, Clone, Default)]
pub struct CallCounter {
    summarizer: Arc<AtomicU64>,
    embedder: Arc<AtomicU64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallCounts {
    pub summarizer_calls: u64,
    pub embedder_calls: u64,
}

impl CallCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn summarizer_calls(&self) -> u64 {
        self.summarizer.load(Ordering::SeqCst)
    }

    pub fn embedder_calls(&self) -> u64 {
        self.embedder.load(Ordering::SeqCst)
    }

    pub fn snapshot(&self) -> CallCounts {
        CallCounts {
            summarizer_calls: self.summarizer_calls(),
            embedder_calls: self.embedder_calls(),
        }
    }
}

/// Wraps a backend and counts every call made through it.
#[derive(Debug, Clone)]
pub struct Metered<B> {
    inner: B,
    counter: CallCounter,
}

impl<B> Metered<B> {
    pub fn new(inner: B, counter: CallCounter) -> Self {
        Self { inner, counter }
    }

    pub fn counter(&self) -> &CallCounter {
        &self.counter
    }

    pub fn inner(&self) -> &B {
        &self.inner
    }
}

impl<B: Summarizer> Summarizer for Metered<B> {
    fn id(&self) -> String {
        self.inner.id()
    }

    fn summarize(&self, texts: &[&str]) -> Result<String, BackendError> {
        self.counter.summarizer.fetch_add(1, Ordering::SeqCst);
        self.inner.summarize(texts)
    }
}

impl<B: Embedder> Embedder for Metered<B> {
    fn id(&self) -> String {
        self.inner.id()
    }

    fn embed(&self, texts: &[&str]) -> Result<Vec<Vec<f32>>, BackendError> {
        self.counter.embedder.fetch_add(1, Ordering::SeqCst);
        self.inner.embed(texts)
    }
}

/// True for the all-zero vector an embedder returns for text it cannot embed.
pub fn is_degenerate(vector: &[f32]) -> bool {
    vector.iter().all(|x| *x == 0.0)
}

/// Unit vector with equal mass in every coordinate.
pub fn uniform_vector(dimension: usize) -> Vec<f32> {
    let value = 1.0 / (dimension as f32).sqrt();
    vec![value; dimension]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counter_increments_once_per_call() {
        let counter = CallCounter::new();
        let summarizer = Metered::new(TruncatingSummarizer::default(), counter.clone());
        let embedder = Metered::new(HashedBowEmbedder::default(), counter.clone());

        summarizer.summarize(&["x", "y"]).unwrap();
        assert_eq!(counter.summarizer_calls(), 1);
        summarizer.summarize(&["z"]).unwrap();
        assert_eq!(counter.summarizer_calls(), 2);

        embedder.embed(&["a", "b", "c"]).unwrap();
        assert_eq!(
            counter.snapshot(),
            CallCounts {
                summarizer_calls: 2,
                embedder_calls: 1
            }
        );
    }

    #[test]
    fn transient_classification() {
        assert!(BackendError::Timeout.is_transient());
        assert!(BackendError::Status { status: 503 }.is_transient());
        assert!(BackendError::Status { status: 429 }.is_transient());
        assert!(!BackendError::Status { status: 401 }.is_transient());
        assert!(!BackendError::Protocol("x".into()).is_transient());
    }

    #[test]
    fn uniform_vector_is_unit_length() {
        let v = uniform_vector(256);
        let norm: f32 = v.iter().map(|x| x * x).sum::<f32>().sqrt();
        assert!((norm - 1.0).abs() < 1e-5);
        assert!(is_degenerate(&[0.0, 0.0]));
        assert!(!is_degenerate(&v));
    }
}
