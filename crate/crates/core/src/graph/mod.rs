//! Sentence-level entity co-occurrence graph and the entity/chunk indexes.
//!
//! Each chunk is scanned independently: its sentences are split, entities
//! extracted, and every unordered pair of distinct entities in a sentence
//! gains one unit of edge weight. The per-chunk fragments are then merged by
//! canonical name into the document graph.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backends::{BackendError, EntityExtractor};
use crate::chunker::Chunk;
use crate::error::{Error, Result};

pub mod extract;
pub mod sentences;

pub use extract::{canonicalize, extract_entities, EntityCount, NounLexicon, RuleBasedExtractor};
pub use sentences::split_sentences;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entity {
    pub canonical: String,
    pub surface_forms: BTreeSet<String>,
}

fn ordered_pair(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

/// String-keyed graph piece produced for one chunk.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GraphFragment {
    pub vertices: BTreeMap<String, BTreeSet<String>>,
    /// Keyed by `(min, max)` canonical names.
    pub edges: BTreeMap<(String, String), u32>,
}

impl GraphFragment {
    pub fn add_vertex(&mut self, canonical: &str, surface_forms: impl IntoIterator<Item = String>) {
        self.vertices
            .entry(canonical.to_string())
            .or_default()
            .extend(surface_forms);
    }

    pub fn add_edge(&mut self, a: &str, b: &str, weight: u32) {
        assert_ne!(a, b, "self-loops are not allowed");
        self.add_vertex(a, []);
        self.add_vertex(b, []);
        *self.edges.entry(ordered_pair(a, b)).or_insert(0) += weight;
    }
}

/// Per-chunk entity occurrence counts.
pub type FrequencyMap = BTreeMap<String, u32>;

/// Builds the co-occurrence fragment and occurrence counts for one chunk.
pub fn build_chunk_subgraph(
    text: &str,
    extractor: &dyn EntityExtractor,
) -> Result<(GraphFragment, FrequencyMap), BackendError> {
    let mut fragment = GraphFragment::default();
    let mut freq = FrequencyMap::new();
    for sentence in split_sentences(text) {
        let entities = extract_entities(sentence, extractor)?;
        for e in &entities {
            *freq.entry(e.canonical.clone()).or_insert(0) += e.count;
            fragment.add_vertex(&e.canonical, e.surface_forms.iter().cloned());
        }
        for (i, a) in entities.iter().enumerate() {
            for b in &entities[i + 1..] {
                fragment.add_edge(&a.canonical, &b.canonical, 1);
            }
        }
    }
    Ok((fragment, freq))
}

/// Undirected weighted graph over canonical entity names. Vertices are
/// numbered in lexicographic order of their canonical names.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EntityGraph {
    entities: Vec<Entity>,
    ids: HashMap<String, u32>,
    /// Sorted `(neighbor, weight)` lists, one per vertex.
    adjacency: Vec<Vec<(u32, u32)>>,
}

impl EntityGraph {
    /// Builds from vertices sorted by canonical name and edges keyed by
    /// vertex ids `a < b`.
    pub fn from_parts(
        entities: Vec<Entity>,
        edges: impl IntoIterator<Item = ((u32, u32), u32)>,
    ) -> Result<Self> {
        let n = entities.len();
        for w in entities.windows(2) {
            if w[0].canonical >= w[1].canonical {
                return Err(Error::CorruptIndex("graph vertices are not strictly sorted".into()));
            }
        }
        let ids = entities
            .iter()
            .enumerate()
            .map(|(i, e)| (e.canonical.clone(), i as u32))
            .collect();
        let mut adjacency = vec![Vec::new(); n];
        for ((a, b), w) in edges {
            if a >= b || b as usize >= n || w == 0 {
                return Err(Error::CorruptIndex(format!("invalid edge ({a}, {b}) weight {w}")));
            }
            adjacency[a as usize].push((b, w));
            adjacency[b as usize].push((a, w));
        }
        for list in &mut adjacency {
            list.sort_unstable();
            if list.windows(2).any(|p| p[0].0 == p[1].0) {
                return Err(Error::CorruptIndex("duplicate graph edge".into()));
            }
        }
        Ok(Self {
            entities,
            ids,
            adjacency,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.entities.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn entities(&self) -> &[Entity] {
        &self.entities
    }

    pub fn vertex_id(&self, canonical: &str) -> Option<u32> {
        self.ids.get(canonical).copied()
    }

    pub fn contains(&self, canonical: &str) -> bool {
        self.ids.contains_key(canonical)
    }

    pub fn name(&self, id: u32) -> &str {
        &self.entities[id as usize].canonical
    }

    pub fn neighbors(&self, id: u32) -> &[(u32, u32)] {
        &self.adjacency[id as usize]
    }

    pub fn edge_weight(&self, a: &str, b: &str) -> Option<u32> {
        let (a, b) = (self.vertex_id(a)?, self.vertex_id(b)?);
        let list = &self.adjacency[a as usize];
        list.binary_search_by_key(&b, |&(n, _)| n)
            .ok()
            .map(|i| list[i].1)
    }

    /// Edges as `((a, b), weight)` with `a < b`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = ((u32, u32), u32)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(a, list)| {
            list.iter()
                .filter(move |&&(b, _)| b > a as u32)
                .map(move |&(b, w)| ((a as u32, b), w))
        })
    }

    pub fn total_weight(&self) -> u64 {
        self.edges().map(|(_, w)| u64::from(w)).sum()
    }
}

/// Unifies fragments by canonical name and sums edge weights. The result
/// does not depend on fragment order.
pub fn merge_graphs<'a>(fragments: impl IntoIterator<Item = &'a GraphFragment>) -> EntityGraph {
    let mut vertices: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut edges: BTreeMap<(String, String), u32> = BTreeMap::new();
    for fragment in fragments {
        for (name, forms) in &fragment.vertices {
            vertices.entry(name.clone()).or_default().extend(forms.iter().cloned());
        }
        for (pair, w) in &fragment.edges {
            *edges.entry(pair.clone()).or_insert(0) += w;
        }
    }
    let entities: Vec<Entity> = vertices
        .into_iter()
        .map(|(canonical, surface_forms)| Entity {
            canonical,
            surface_forms,
        })
        .collect();
    let ids: HashMap<&str, u32> = entities
        .iter()
        .enumerate()
        .map(|(i, e)| (e.canonical.as_str(), i as u32))
        .collect();
    let id_edges: Vec<((u32, u32), u32)> = edges
        .iter()
        .map(|((a, b), w)| ((ids[a.as_str()], ids[b.as_str()]), *w))
        .collect();
    EntityGraph::from_parts(entities, id_edges).expect("merged fragments form a valid graph")
}

/// Entity→chunks and chunk→entity-frequency maps.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BiIndex {
    pub entity_to_chunks: BTreeMap<String, Vec<usize>>,
    /// Indexed by chunk id.
    pub chunk_to_entity_freq: Vec<FrequencyMap>,
}

impl BiIndex {
    pub fn chunks_of(&self, entity: &str) -> &[usize] {
        self.entity_to_chunks.get(entity).map_or(&[], Vec::as_slice)
    }

    pub fn frequency(&self, chunk: usize, entity: &str) -> u32 {
        self.chunk_to_entity_freq
            .get(chunk)
            .and_then(|m| m.get(entity))
            .copied()
            .unwrap_or(0)
    }

    pub fn chunk_count(&self) -> usize {
        self.chunk_to_entity_freq.len()
    }

    /// Checks that both maps describe the same incidence relation and that
    /// chunk lists are strictly ascending.
    pub fn check_symmetry(&self) -> std::result::Result<(), String> {
        let mut incidences = 0usize;
        for (entity, chunks) in &self.entity_to_chunks {
            if chunks.is_empty() {
                return Err(format!("entity '{entity}' maps to no chunk"));
            }
            if chunks.windows(2).any(|w| w[0] >= w[1]) {
                return Err(format!("chunk list of '{entity}' is not strictly ascending"));
            }
            for &c in chunks {
                match self.chunk_to_entity_freq.get(c).and_then(|m| m.get(entity)) {
                    Some(&f) if f > 0 => incidences += 1,
                    _ => return Err(format!("'{entity}' lists chunk {c} but the chunk does not list it")),
                }
            }
        }
        let reverse: usize = self.chunk_to_entity_freq.iter().map(BTreeMap::len).sum();
        if reverse != incidences {
            return Err(format!(
                "chunk→entity map has {reverse} entries but entity→chunk map has {incidences}"
            ));
        }
        Ok(())
    }
}

pub fn build_biindex(freq_maps: &[FrequencyMap]) -> BiIndex {
    let mut entity_to_chunks: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (chunk, freq) in freq_maps.iter().enumerate() {
        for entity in freq.keys() {
            entity_to_chunks.entry(entity.clone()).or_default().push(chunk);
        }
    }
    BiIndex {
        entity_to_chunks,
        chunk_to_entity_freq: freq_maps.to_vec(),
    }
}

/// Runs extraction over every chunk in parallel and builds the merged graph
/// and both indexes.
pub fn build_graph_index(
    chunks: &[Chunk],
    extractor: &dyn EntityExtractor,
) -> Result<(EntityGraph, BiIndex)> {
    let parts: Vec<(GraphFragment, FrequencyMap)> = chunks
        .par_iter()
        .map(|chunk| {
            build_chunk_subgraph(&chunk.text, extractor).map_err(|source| Error::IndexingFailed {
                progress: format!("entity extraction failed on chunk {}", chunk.chunk_id),
                source,
            })
        })
        .collect::<Result<_>>()?;
    let graph = merge_graphs(parts.iter().map(|(f, _)| f));
    let freq_maps: Vec<FrequencyMap> = parts.into_iter().map(|(_, f)| f).collect();
    Ok((graph, build_biindex(&freq_maps)))
}
