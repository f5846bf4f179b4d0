//! Recursive summary tree over the chunk sequence.
//!
//! Round 0 is the chunk sequence. Each round cuts the current sequence into
//! consecutive groups of exactly `g` nodes and summarizes every group; the
//! `m mod g` nodes left over at the end are carried into the next round
//! unchanged. Rounds stop once `g` or fewer nodes remain. Every summary thus
//! has exactly `g` children and each call removes `g - 1` nodes from the
//! sequence, which bounds the number of summarizer calls by `⌈n/(g-1)⌉`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backends::{is_degenerate, uniform_vector, BackendError, Embedder, Summarizer};
use crate::chunker::Chunk;
use crate::error::{Error, Result};

pub const DEFAULT_GROUP_SIZE: usize = 8;
pub const DEFAULT_MAX_ATTEMPTS: u32 = 3;
const EMBED_BATCH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeConfig {
    pub group_size: usize,
    /// Keep summarizing until a single root remains. The final group may
    /// then have fewer than `g` children.
    pub build_to_root: bool,
    pub max_attempts: u32,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            group_size: DEFAULT_GROUP_SIZE,
            build_to_root: false,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
        }
    }
}

impl TreeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.group_size < 2 {
            return Err(Error::InvalidConfig(format!(
                "group size must be at least 2, got {}",
                self.group_size
            )));
        }
        if self.max_attempts == 0 {
            return Err(Error::InvalidConfig("max_attempts must be at least 1".into()));
        }
        Ok(())
    }

    fn continues(&self, len: usize) -> bool {
        len > self.group_size || (self.build_to_root && len > 1)
    }

    /// Summarizer calls a build over `n` leaves will make.
    pub fn planned_calls(&self, n: usize) -> usize {
        let mut len = n;
        let mut calls = 0;
        while self.continues(len) {
            let groups = (len / self.group_size).max(1);
            let consumed = if len <= self.group_size { len } else { groups * self.group_size };
            calls += groups;
            len = groups + (len - consumed);
        }
        calls
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeNode {
    pub node_id: usize,
    /// 0 for chunks; otherwise the round that produced the summary.
    pub level: usize,
    /// Consecutive entries of the previous round's sequence, in document order.
    pub children: Vec<usize>,
    pub parent: Option<usize>,
    pub text: String,
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        self.level == 0
    }

    /// Row of this node in the [`VectorStore`].
    pub fn embedding_ref(&self) -> usize {
        self.node_id
    }
}

/// Chunks `0..n` are nodes `0..n`; summaries follow in creation order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SummaryTree {
    nodes: Vec<TreeNode>,
    leaf_count: usize,
    /// Node sequence of every round; `rounds[0]` is the chunk sequence and
    /// the last entry holds the top-level nodes.
    rounds: Vec<Vec<usize>>,
}

impl SummaryTree {
    /// Assembles a tree from leaf texts and `(children, text)` summaries in
    /// creation order, validating the structure.
    pub fn from_parts(leaves: Vec<String>, summaries: Vec<(Vec<usize>, String)>, group_size: usize) -> Result<Self> {
        let corrupt = |msg: String| Error::CorruptIndex(msg);
        let leaf_count = leaves.len();
        if leaf_count == 0 {
            return Err(corrupt("tree has no leaves".into()));
        }
        let mut nodes: Vec<TreeNode> = leaves
            .into_iter()
            .enumerate()
            .map(|(i, text)| TreeNode {
                node_id: i,
                level: 0,
                children: Vec::new(),
                parent: None,
                text,
            })
            .collect();
        for (children, text) in summaries {
            let id = nodes.len();
            if children.is_empty() || children.len() > group_size {
                return Err(corrupt(format!("summary {id} has {} children", children.len())));
            }
            let mut level = 0;
            for &c in &children {
                let child = nodes
                    .get_mut(c)
                    .ok_or_else(|| corrupt(format!("summary {id} references unknown node {c}")))?;
                if child.parent.is_some() {
                    return Err(corrupt(format!("node {c} has two parents")));
                }
                child.parent = Some(id);
                level = level.max(child.level);
            }
            nodes.push(TreeNode {
                node_id: id,
                level: 0,
                children,
                parent: None,
                text,
            });
            nodes[id].level = level + 1;
        }
        let mut tree = Self {
            nodes,
            leaf_count,
            rounds: Vec::new(),
        };
        tree.rounds = tree.derive_rounds()?;
        Ok(tree)
    }

    /// Replays the rounds: round `r` holds the round-`r` summaries followed
    /// by the nodes carried over from round `r - 1`.
    fn derive_rounds(&self) -> Result<Vec<Vec<usize>>> {
        let mut rounds = vec![(0..self.leaf_count).collect::<Vec<_>>()];
        let max_level = self.nodes.iter().map(|n| n.level).max().unwrap_or(0);
        for level in 1..=max_level {
            let prev = rounds.last().expect("round 0 exists");
            let summaries: Vec<usize> = self
                .nodes
                .iter()
                .filter(|n| n.level == level)
                .map(|n| n.node_id)
                .collect();
            let mut cursor = 0;
            for &s in &summaries {
                let children = &self.nodes[s].children;
                if prev.get(cursor..cursor + children.len()) != Some(children.as_slice()) {
                    return Err(Error::CorruptIndex(format!(
                        "children of summary {s} are not consecutive in round {}",
                        level - 1
                    )));
                }
                cursor += children.len();
            }
            let mut next = summaries;
            next.extend_from_slice(&prev[cursor..]);
            rounds.push(next);
        }
        Ok(rounds)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn leaf_count(&self) -> usize {
        self.leaf_count
    }

    pub fn summary_count(&self) -> usize {
        self.nodes.len() - self.leaf_count
    }

    pub fn node(&self, id: usize) -> Result<&TreeNode> {
        self.nodes.get(id).ok_or(Error::NodeNotFound(id))
    }

    /// Every node (chunks and summaries) ordered by node id.
    pub fn collapsed_nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn rounds(&self) -> &[Vec<usize>] {
        &self.rounds
    }

    pub fn top_level(&self) -> &[usize] {
        self.rounds.last().map_or(&[], Vec::as_slice)
    }

    pub fn summaries(&self) -> &[TreeNode] {
        &self.nodes[self.leaf_count..]
    }

    /// Sorted chunk ids under `node_id`; a leaf yields itself.
    pub fn subtree_leaf_ids(&self, node_id: usize) -> Result<Vec<usize>> {
        self.node(node_id)?;
        let mut leaves = Vec::new();
        let mut stack = vec![node_id];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if node.is_leaf() {
                leaves.push(id);
            } else {
                stack.extend(node.children.iter().copied());
            }
        }
        leaves.sort_unstable();
        Ok(leaves)
    }
}

fn summarize_with_retry(
    summarizer: &dyn Summarizer,
    texts: &[&str],
    attempts: u32,
) -> std::result::Result<String, BackendError> {
    let mut attempt = 1;
    loop {
        match summarizer.summarize(texts) {
            Ok(s) => return Ok(s),
            Err(e) if attempt >= attempts => return Err(e),
            Err(_) => attempt += 1,
        }
    }
}

/// Builds the tree bottom-up. Summaries within one round are requested
/// concurrently; rounds are sequential.
pub fn build_summary_tree(
    chunks: &[Chunk],
    config: TreeConfig,
    summarizer: &dyn Summarizer,
) -> Result<SummaryTree> {
    config.validate()?;
    if chunks.is_empty() {
        return Err(Error::EmptyDocument);
    }
    let g = config.group_size;
    let mut texts: Vec<String> = chunks.iter().map(|c| c.text.clone()).collect();
    let mut summaries: Vec<(Vec<usize>, String)> = Vec::new();
    let mut current: Vec<usize> = (0..chunks.len()).collect();
    let mut round = 0;

    while config.continues(current.len()) {
        round += 1;
        let grouped = if current.len() <= g {
            current.len()
        } else {
            current.len() / g * g
        };
        let groups: Vec<&[usize]> = current[..grouped].chunks(g).collect();
        let results: Vec<std::result::Result<String, BackendError>> = groups
            .par_iter()
            .map(|group| {
                let inputs: Vec<&str> = group.iter().map(|&id| texts[id].as_str()).collect();
                summarize_with_retry(summarizer, &inputs, config.max_attempts)
            })
            .collect();

        let mut next = Vec::with_capacity(groups.len() + current.len() - grouped);
        for (i, (group, result)) in groups.iter().zip(results).enumerate() {
            let text = result.map_err(|source| Error::IndexingFailed {
                progress: format!(
                    "round {round}: group {i} of {} failed after {} attempts; {} summaries completed in earlier rounds",
                    groups.len(),
                    config.max_attempts,
                    summaries.len()
                ),
                source,
            })?;
            let id = chunks.len() + summaries.len();
            texts.push(text.clone());
            summaries.push((group.to_vec(), text));
            next.push(id);
        }
        next.extend_from_slice(&current[grouped..]);
        current = next;
    }

    let leaves = chunks.iter().map(|c| c.text.clone()).collect();
    SummaryTree::from_parts(leaves, summaries, g)
}

/// One dense vector per tree node, all of the same dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorStore {
    dimension: usize,
    data: Vec<f32>,
    norms: Vec<f32>,
}

impl VectorStore {
    pub fn from_rows(dimension: usize, rows: Vec<Vec<f32>>) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * dimension);
        for row in rows {
            if row.len() != dimension {
                return Err(Error::EmbeddingDimensionMismatch {
                    expected: dimension,
                    actual: row.len(),
                });
            }
            data.extend(row);
        }
        Self::from_flat(dimension, data)
    }

    pub fn from_flat(dimension: usize, data: Vec<f32>) -> Result<Self> {
        if dimension == 0 || !data.len().is_multiple_of(dimension) {
            return Err(Error::CorruptIndex(format!(
                "{} values do not form rows of dimension {dimension}",
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::CorruptIndex("vector store contains non-finite values".into()));
        }
        let norms = data
            .chunks(dimension)
            .map(|r| r.iter().map(|x| x * x).sum::<f32>().sqrt())
            .collect();
        Ok(Self {
            dimension,
            data,
            norms,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.norms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.norms.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dimension..(i + 1) * self.dimension]
    }

    pub fn as_flat(&self) -> &[f32] {
        &self.data
    }

    /// Cosine similarity of `query` with row `i`; 0 when either is zero.
    pub fn cosine(&self, query: &[f32], query_norm: f32, i: usize) -> f32 {
        let denom = query_norm * self.norms[i];
        if denom == 0.0 {
            return 0.0;
        }
        let dot: f32 = self.row(i).iter().zip(query).map(|(a, b)| a * b).sum();
        dot / denom
    }
}

/// Checks a batch of embeddings and substitutes the uniform vector for
/// degenerate (all-zero) rows.
pub(crate) fn sanitize_embeddings(
    rows: Vec<Vec<f32>>,
    expected_dim: &mut Option<usize>,
) -> Result<Vec<Vec<f32>>> {
    rows.into_iter()
        .map(|row| {
            let dim = *expected_dim.get_or_insert(row.len());
            if row.len() != dim {
                return Err(Error::EmbeddingDimensionMismatch {
                    expected: dim,
                    actual: row.len(),
                });
            }
            if dim == 0 || row.iter().any(|x| !x.is_finite()) {
                return Err(Error::Backend(BackendError::Protocol(
                    "embedding is empty or not finite".into(),
                )));
            }
            Ok(if is_degenerate(&row) { uniform_vector(dim) } else { row })
        })
        .collect()
}

/// Embeds every node in batches, in node-id order.
pub fn embed_all(tree: &SummaryTree, embedder: &dyn Embedder) -> Result<VectorStore> {
    if tree.is_empty() {
        return Err(Error::IndexNotBuilt);
    }
    let mut dim = None;
    let mut rows = Vec::with_capacity(tree.len());
    for batch in tree.collapsed_nodes().chunks(EMBED_BATCH) {
        let texts: Vec<&str> = batch.iter().map(|n| n.text.as_str()).collect();
        let vectors = embedder.embed(&texts).map_err(|source| Error::IndexingFailed {
            progress: format!("embedded {} of {} nodes", rows.len(), tree.len()),
            source,
        })?;
        if vectors.len() != texts.len() {
            return Err(Error::IndexingFailed {
                progress: format!("embedded {} of {} nodes", rows.len(), tree.len()),
                source: BackendError::Protocol(format!(
                    "asked for {} embeddings, got {}",
                    texts.len(),
                    vectors.len()
                )),
            });
        }
        rows.extend(sanitize_embeddings(vectors, &mut dim)?);
    }
    VectorStore::from_rows(dim.expect("tree is non-empty"), rows)
}
