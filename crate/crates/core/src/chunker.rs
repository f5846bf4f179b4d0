//! Tokenization and fixed-size overlapping chunking.
//!
//! Every downstream structure (tree leaves, entity index, formatter) refers to
//! chunks by their ordinal `chunk_id`, so the chunk list is the spine of the
//! whole index.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_CHUNK_SIZE: usize = 1200;
pub const DEFAULT_OVERLAP: usize = 100;

/// A token together with whether whitespace preceded it in the source.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    pub text: String,
    pub space_before: bool,
}

/// Pluggable token splitter.
pub trait Tokenizer: Send + Sync {
    fn name(&self) -> &str;

    fn split(&self, text: &str) -> Vec<Token>;

    /// Inverse of [`Tokenizer::split`] modulo whitespace normalization: every
    /// run of source whitespace becomes a single space.
    fn join(&self, tokens: &[Token]) -> String {
        let mut out = String::with_capacity(tokens.iter().map(|t| t.text.len() + 1).sum());
        for (i, tok) in tokens.iter().enumerate() {
            if i > 0 && tok.space_before {
                out.push(' ');
            }
            out.push_str(&tok.text);
        }
        out
    }
}

/// Default splitter: runs of alphanumeric characters (plus `_`) form one
/// token, every other non-whitespace character is a token on its own.
#[derive(Debug, Clone, Copy, Default)]
pub struct WordPunctTokenizer;

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

impl Tokenizer for WordPunctTokenizer {
    fn name(&self) -> &str {
        "word-punct"
    }

    fn split(&self, text: &str) -> Vec<Token> {
        let mut tokens = Vec::new();
        let mut space_before = false;
        let mut word_start: Option<usize> = None;

        for (i, c) in text.char_indices() {
            if is_word_char(c) {
                if word_start.is_none() {
                    word_start = Some(i);
                }
                continue;
            }
            if let Some(start) = word_start.take() {
                tokens.push(Token {
                    text: text[start..i].to_string(),
                    space_before,
                });
                space_before = false;
            }
            if c.is_whitespace() {
                space_before = true;
            } else {
                tokens.push(Token {
                    text: c.to_string(),
                    space_before,
                });
                space_before = false;
            }
        }
        if let Some(start) = word_start {
            tokens.push(Token {
                text: text[start..].to_string(),
                space_before,
            });
        }
        tokens
    }
}

/// Token strings only, via the default splitter.
pub fn word_tokens(text: &str) -> Vec<String> {
    WordPunctTokenizer
        .split(text)
        .into_iter()
        .map(|t| t.text)
        .collect()
}

/// Tokenized document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenStream {
    pub tokens: Vec<Token>,
    pub provenance: String,
}

impl TokenStream {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.text.as_str())
    }
}

pub fn tokenize(text: &str, provenance: &str, tokenizer: &dyn Tokenizer) -> Result<TokenStream> {
    let tokens = tokenizer.split(text);
    if tokens.is_empty() {
        return Err(Error::EmptyDocument);
    }
    Ok(TokenStream {
        tokens,
        provenance: provenance.to_string(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkConfig {
    pub chunk_size: usize,
    pub overlap: usize,
}

impl Default for ChunkConfig {
    fn default() -> Self {
        Self {
            chunk_size: DEFAULT_CHUNK_SIZE,
            overlap: DEFAULT_OVERLAP,
        }
    }
}

impl ChunkConfig {
    pub fn new(chunk_size: usize, overlap: usize) -> Result<Self> {
        let config = Self {
            chunk_size,
            overlap,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.overlap >= self.chunk_size {
            return Err(Error::InvalidChunkConfig {
                chunk_size: self.chunk_size,
                overlap: self.overlap,
            });
        }
        Ok(())
    }

    pub fn stride(&self) -> usize {
        self.chunk_size - self.overlap
    }

    /// Number of chunks produced for a stream of `len` tokens.
    pub fn chunk_count(&self, len: usize) -> usize {
        if len == 0 {
            0
        } else if len <= self.chunk_size {
            1
        } else {
            (len - self.overlap).div_ceil(self.stride())
        }
    }
}

/// A window of the token stream, materialized as text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub chunk_id: usize,
    /// Half-open token range `[start, end)`.
    pub start: usize,
    pub end: usize,
    pub text: String,
}

impl Chunk {
    pub fn token_count(&self) -> usize {
        self.end - self.start
    }

    /// Tokens shared with the chunk that precedes this one.
    pub fn shared_prefix(&self, previous: &Chunk) -> usize {
        previous.end.saturating_sub(self.start)
    }
}

/// Splits the stream into windows of `chunk_size` tokens advancing by
/// `chunk_size - overlap`. The final window may be shorter and is kept as is.
pub fn split_into_chunks(
    ts: &TokenStream,
    config: ChunkConfig,
    tokenizer: &dyn Tokenizer,
) -> Result<Vec<Chunk>> {
    config.validate()?;
    if ts.is_empty() {
        return Err(Error::EmptyDocument);
    }

    let len = ts.len();
    let mut chunks = Vec::with_capacity(config.chunk_count(len));
    let mut start = 0;
    loop {
        let end = (start + config.chunk_size).min(len);
        chunks.push(Chunk {
            chunk_id: chunks.len(),
            start,
            end,
            text: tokenizer.join(&ts.tokens[start..end]),
        });
        if end == len {
            break;
        }
        start += config.stride();
    }
    Ok(chunks)
}
