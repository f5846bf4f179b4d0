//! Index mapping and the three ranking strategies.

use std::cmp::Reverse;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graph::BiIndex;
use crate::tree::SummaryTree;

/// Chunks containing both entities of a pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairEvidence {
    pub entities: (String, String),
    pub chunks: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Mapping {
    pub per_pair: Vec<PairEvidence>,
    /// Sorted union of all per-pair sets.
    pub candidates: Vec<usize>,
}

fn intersect_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Intersects the entity→chunk sets of every pair and unions the results.
pub fn index_mapping(pairs: &[(String, String)], index: &BiIndex) -> Mapping {
    let per_pair: Vec<PairEvidence> = pairs
        .iter()
        .map(|(a, b)| PairEvidence {
            entities: (a.clone(), b.clone()),
            chunks: intersect_sorted(index.chunks_of(a), index.chunks_of(b)),
        })
        .collect();
    let mut candidates: Vec<usize> = per_pair.iter().flat_map(|p| p.chunks.iter().copied()).collect();
    candidates.sort_unstable();
    candidates.dedup();
    Mapping { per_pair, candidates }
}

/// Total occurrences of `entities` in chunk `chunk`.
pub fn occurrence_weight(index: &BiIndex, chunk: usize, entities: &[String]) -> u64 {
    entities
        .iter()
        .map(|e| u64::from(index.frequency(chunk, e)))
        .sum()
}

/// Ranks dense-retrieval candidates (given in similarity order) by query
/// entity occurrences. A summary weighs the sum of its subtree's chunks.
/// Ties keep similarity order, then lower node id.
pub fn occurrence_rank(
    candidates: &[usize],
    entities: &[String],
    index: &BiIndex,
    tree: &SummaryTree,
    k: usize,
) -> Result<Vec<usize>> {
    let mut scored = Vec::with_capacity(candidates.len());
    for (rank, &node) in candidates.iter().enumerate() {
        let weight: u64 = tree
            .subtree_leaf_ids(node)?
            .into_iter()
            .map(|c| occurrence_weight(index, c, entities))
            .sum();
        scored.push((Reverse(weight), rank, node));
    }
    scored.sort_unstable();
    Ok(scored.into_iter().take(k).map(|(_, _, node)| node).collect())
}

/// Ranks chunks by distinct query entities covered, then total occurrences,
/// then document order.
pub fn entity_aware_rank(chunks: &[usize], entities: &[String], index: &BiIndex, k: usize) -> Vec<usize> {
    let mut scored: Vec<(Reverse<usize>, Reverse<u64>, usize)> = chunks
        .iter()
        .map(|&c| {
            let coverage = entities.iter().filter(|e| index.frequency(c, e) > 0).count();
            (Reverse(coverage), Reverse(occurrence_weight(index, c, entities)), c)
        })
        .collect();
    scored.sort_unstable();
    scored.dedup_by_key(|s| s.2);
    scored.into_iter().take(k).map(|(_, _, c)| c).collect()
}
