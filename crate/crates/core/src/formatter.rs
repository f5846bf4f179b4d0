//! Turns retrieval results into a context string.
//!
//! Local evidence is rendered as one block per entity group:
//!
//! ```text
//! harry-ron:
//! <merged chunk text>
//! ---
//! <next non-adjacent segment>
//! ```
//!
//! A chunk reached through several pairs appears once, under the union of
//! their entities. Chunk texts never contain newlines (the tokenizer joins
//! with single spaces), so every segment is exactly one line.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::chunker::{Chunk, Tokenizer};
use crate::error::{Error, Result};
use crate::query::{PairEvidence, RetrievalResult};
use crate::tree::SummaryTree;

pub const SEGMENT_SEPARATOR: &str = "---";

/// Chunks sharing the same set of query entities.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceBlock {
    /// Sorted, distinct canonical names.
    pub entity_group: Vec<String>,
    /// Ascending chunk ids.
    pub chunk_ids: Vec<usize>,
    pub merged_text: String,
}

/// Groups chunks by the union of the entity pairs that selected them.
/// Returns `(entity_group, chunk_ids)` ordered by group size descending, then
/// lexicographically.
pub fn dedup_and_group(pairs: &[PairEvidence]) -> Vec<(Vec<String>, Vec<usize>)> {
    let mut entities_of: BTreeMap<usize, BTreeSet<&str>> = BTreeMap::new();
    for p in pairs {
        for &c in &p.chunks {
            let set = entities_of.entry(c).or_default();
            set.insert(&p.entities.0);
            set.insert(&p.entities.1);
        }
    }
    let mut groups: BTreeMap<Vec<String>, Vec<usize>> = BTreeMap::new();
    for (chunk, set) in entities_of {
        let key: Vec<String> = set.into_iter().map(str::to_string).collect();
        groups.entry(key).or_default().push(chunk);
    }
    let mut out: Vec<_> = groups.into_iter().collect();
    out.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
    out
}

/// Concatenates chunk texts, dropping the overlap at each join of adjacent
/// chunks and putting a separator line between non-adjacent runs.
pub fn merge_contiguous(chunk_ids: &[usize], chunks: &[Chunk], tokenizer: &dyn Tokenizer) -> Result<String> {
    let get = |id: usize| chunks.get(id).ok_or(Error::NodeNotFound(id));
    let mut out = String::new();
    let mut prev: Option<&Chunk> = None;
    for &id in chunk_ids {
        let cur = get(id)?;
        match prev {
            Some(p) if p.chunk_id + 1 == cur.chunk_id => {
                let tokens = tokenizer.split(&cur.text);
                let shared = cur.shared_prefix(p).min(tokens.len());
                if let Some(first) = tokens.get(shared) {
                    if shared == 0 || first.space_before {
                        out.push(' ');
                    }
                    out.push_str(&tokenizer.join(&tokens[shared..]));
                }
            }
            Some(_) => {
                out.push('\n');
                out.push_str(SEGMENT_SEPARATOR);
                out.push('\n');
                out.push_str(&cur.text);
            }
            None => out.push_str(&cur.text),
        }
        prev = Some(cur);
    }
    Ok(out)
}

pub fn build_blocks(pairs: &[PairEvidence], chunks: &[Chunk], tokenizer: &dyn Tokenizer) -> Result<Vec<EvidenceBlock>> {
    dedup_and_group(pairs)
        .into_iter()
        .map(|(entity_group, chunk_ids)| {
            Ok(EvidenceBlock {
                merged_text: merge_contiguous(&chunk_ids, chunks, tokenizer)?,
                entity_group,
                chunk_ids,
            })
        })
        .collect()
}

pub fn render(blocks: &[EvidenceBlock]) -> String {
    let mut out = String::new();
    for b in blocks {
        out.push_str(&b.entity_group.join("-"));
        out.push_str(":\n");
        out.push_str(&b.merged_text);
        out.push('\n');
    }
    out
}

/// Node texts in result order, one per line, separated by `---` lines.
pub fn render_plain<'a>(texts: impl IntoIterator<Item = &'a str>) -> String {
    let mut out = String::new();
    for (i, t) in texts.into_iter().enumerate() {
        if i > 0 {
            out.push_str(SEGMENT_SEPARATOR);
            out.push('\n');
        }
        out.push_str(t);
        out.push('\n');
    }
    out
}

/// Formats any retrieval result: entity blocks for local modes, plain node
/// texts for global ones.
pub fn format_result(
    result: &RetrievalResult,
    tree: &SummaryTree,
    chunks: &[Chunk],
    tokenizer: &dyn Tokenizer,
) -> Result<String> {
    if result.mode.is_local() {
        Ok(render(&build_blocks(&result.pairs, chunks, tokenizer)?))
    } else {
        let texts = result
            .nodes
            .iter()
            .map(|&id| tree.node(id).map(|n| n.text.as_str()))
            .collect::<Result<Vec<_>>>()?;
        Ok(render_plain(texts))
    }
}
