//! Deterministic offline backends.

use super::{BackendError, Embedder, Summarizer};
use crate::chunker::{Tokenizer, WordPunctTokenizer};

pub const SUMMARY_PREFIX: &str = "[SUM]";
pub const DEFAULT_SUMMARY_BUDGET: usize = 200;
pub const DEFAULT_EMBEDDING_DIM: usize = 256;

/// Stand-in summarizer: prefixes `[SUM]` and keeps the first `budget` tokens
/// of the concatenated inputs. Preserves tree structure and call counts, not
/// summary quality.
#[derive(Debug, Clone)]
pub struct TruncatingSummarizer {
    pub budget: usize,
}

impl Default for TruncatingSummarizer {
    fn default() -> Self {
        Self {
            budget: DEFAULT_SUMMARY_BUDGET,
        }
    }
}

impl Summarizer for TruncatingSummarizer {
    fn id(&self) -> String {
        format!("offline-truncate:{}", self.budget)
    }

    fn summarize(&self, texts: &[&str]) -> Result<String, BackendError> {
        if texts.is_empty() {
            return Err(BackendError::Other("nothing to summarize".into()));
        }
        let tokenizer = WordPunctTokenizer;
        let mut tokens = Vec::new();
        for text in texts {
            let mut split = tokenizer.split(text);
            if let Some(first) = split.first_mut() {
                first.space_before = true;
            }
            tokens.extend(split);
            if tokens.len() >= self.budget {
                break;
            }
        }
        tokens.truncate(self.budget);
        let body = tokenizer.join(&tokens);
        if body.is_empty() {
            Ok(SUMMARY_PREFIX.to_string())
        } else {
            Ok(format!("{SUMMARY_PREFIX} {body}"))
        }
    }
}

/// L2-normalized hashed bag of words. Tokens are lowercased word tokens of
/// the default splitter; punctuation is ignored. Bucket = FNV-1a(token) mod d.
#[derive(Debug, Clone)]
pub struct HashedBowEmbedder {
    pub dimension: usize,
}

impl Default for HashedBowEmbedder {
    fn default() -> Self {
        Self {
            dimension: DEFAULT_EMBEDDING_DIM,
        }
    }
}

pub(crate) fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

impl HashedBowEmbedder {
    pub fn new(dimension: usize) -> Self {
        Self { dimension }
    }

    pub fn bucket(&self, token: &str) -> usize {
        (fnv1a64(token.as_bytes()) % self.dimension as u64) as usize
    }

    /// Raw bucket counts before normalization.
    pub fn counts(&self, text: &str) -> Vec<f32> {
        let mut v = vec![0.0f32; self.dimension];
        for tok in WordPunctTokenizer.split(text) {
            if !tok.text.chars().any(char::is_alphanumeric) {
                continue;
            }
            v[self.bucket(&tok.text.to_lowercase())] += 1.0;
        }
        v
    }

    /// Normalized embedding; the zero vector when `text` has no word tokens.
    pub fn embed_one(&self, text: &str) -> Vec<f32> {
        let mut v = self.counts(text);
        let norm = v.iter().map(|x| x * x).sum::<f32>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }
}

impl Embedder for HashedBowEmbedder {
    fn id(&self) -> String {
        format!("offline-hashed-bow:{}", self.dimension)
    }

    fn embed(&self, texts: &[&str]) -> Result<Vec<Vec<f32>>, BackendError> {
        if self.dimension == 0 {
            return Err(BackendError::Config("embedding dimension must be positive".into()));
        }
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }
}
