//! Adaptive retrieval over the summary tree and entity graph.
//!
//! Dispatch, given the query's graph entities `E`:
//!
//! * `E` empty: dense retrieval of the top-k tree nodes (`GlobalDense`).
//! * no pair of `E` within `h` hops: dense top-2k re-ranked by entity
//!   occurrence (`GlobalOccurrence`).
//! * otherwise map pairs to the chunks containing both entities; while more
//!   than `loop_threshold` chunks come back, tighten `h`. If that empties the
//!   set, rank the last non-empty set by entity coverage
//!   (`LocalEntityAware`), else return the set (`Local`), ranked down to k.
//!
//! Only the embedder is called (once, in the global modes, for the query
//! vector). The summarizer is never used at query time.

use serde::{Deserialize, Serialize};

use crate::backends::{is_degenerate, uniform_vector, EntityExtractor, Embedder};
use crate::error::{Error, Result};
use crate::graph::{extract_entities, split_sentences, BiIndex, EntityGraph};
use crate::tree::{SummaryTree, VectorStore};

pub mod hops;
pub mod rank;

pub use hops::{graph_filter, hop_distance};
pub use rank::{entity_aware_rank, index_mapping, occurrence_rank, Mapping, PairEvidence};

pub const DEFAULT_K: usize = 8;
pub const DEFAULT_HOPS: usize = 4;
pub const DEFAULT_LOOP_THRESHOLD: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeOverride {
    #[default]
    Auto,
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryOptions {
    pub k: usize,
    pub hops: usize,
    pub loop_threshold: usize,
    pub mode: ModeOverride,
}

impl Default for QueryOptions {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            hops: DEFAULT_HOPS,
            loop_threshold: DEFAULT_LOOP_THRESHOLD,
            mode: ModeOverride::Auto,
        }
    }
}

impl QueryOptions {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.hops == 0 || self.loop_threshold < self.k {
            return Err(Error::InvalidConfig(format!(
                "need k >= 1, hops >= 1 and threshold >= k (k={}, hops={}, threshold={})",
                self.k, self.hops, self.loop_threshold
            )));
        }
        Ok(())
    }
}

/// A query with its entities resolved against the graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryContext {
    pub query_text: String,
    /// Sorted, distinct canonical names that are graph vertices.
    pub query_entities: Vec<String>,
    /// Extracted names that are not graph vertices.
    pub ignored_entities: Vec<String>,
    pub options: QueryOptions,
}

impl QueryContext {
    pub fn new(
        query_text: &str,
        extracted: impl IntoIterator<Item = String>,
        graph: &EntityGraph,
        options: QueryOptions,
    ) -> Result<Self> {
        options.validate()?;
        let (mut valid, mut ignored): (Vec<String>, Vec<String>) =
            extracted.into_iter().partition(|e| graph.contains(e));
        valid.sort();
        valid.dedup();
        ignored.sort();
        ignored.dedup();
        Ok(Self {
            query_text: query_text.to_string(),
            query_entities: valid,
            ignored_entities: ignored,
            options,
        })
    }

    /// Runs the extractor over the query text.
    pub fn extract(
        query_text: &str,
        extractor: &dyn EntityExtractor,
        graph: &EntityGraph,
        options: QueryOptions,
    ) -> Result<Self> {
        let mut names = Vec::new();
        for sentence in split_sentences(query_text) {
            names.extend(
                extract_entities(sentence, extractor)?
                    .into_iter()
                    .map(|e| e.canonical),
            );
        }
        Self::new(query_text, names, graph, options)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RetrievalMode {
    GlobalDense,
    GlobalOccurrence,
    Local,
    LocalEntityAware,
}

impl RetrievalMode {
    pub fn is_local(self) -> bool {
        matches!(self, RetrievalMode::Local | RetrievalMode::LocalEntityAware)
    }
}

/// One decision of the dispatcher.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub step: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hops: Option<usize>,
    pub pairs: usize,
    pub candidates: usize,
}

impl TraceStep {
    fn new(step: &str, hops: Option<usize>, pairs: usize, candidates: usize) -> Self {
        Self {
            step: step.to_string(),
            hops,
            pairs,
            candidates,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub mode: RetrievalMode,
    /// Tree node ids in result order. Local modes return chunks only (node
    /// id = chunk id); global modes may include summaries.
    pub nodes: Vec<usize>,
    /// Entity pairs with their evidence restricted to `nodes`. Empty in
    /// global modes.
    pub pairs: Vec<PairEvidence>,
    pub query_entities: Vec<String>,
    pub trace: Vec<TraceStep>,
}

/// Read-only view over a built index.
#[derive(Clone, Copy)]
pub struct Retriever<'a> {
    pub tree: &'a SummaryTree,
    pub store: &'a VectorStore,
    pub graph: &'a EntityGraph,
    pub index: &'a BiIndex,
    pub embedder: &'a dyn Embedder,
    pub extractor: &'a dyn EntityExtractor,
}

/// Nodes ranked by cosine similarity, best first, ties by lower node id.
pub fn rank_by_similarity(query: &[f32], store: &VectorStore, m: usize) -> Result<Vec<(usize, f32)>> {
    if store.is_empty() {
        return Err(Error::IndexNotBuilt);
    }
    if query.len() != store.dimension() {
        return Err(Error::EmbeddingDimensionMismatch {
            expected: store.dimension(),
            actual: query.len(),
        });
    }
    let norm = query.iter().map(|x| x * x).sum::<f32>().sqrt();
    let mut scored: Vec<(usize, f32)> = (0..store.len())
        .map(|i| (i, store.cosine(query, norm, i)))
        .collect();
    scored.sort_unstable_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.truncate(m);
    Ok(scored)
}

impl<'a> Retriever<'a> {
    pub fn check_built(&self) -> Result<()> {
        if self.tree.is_empty() || self.store.len() != self.tree.len() {
            return Err(Error::IndexNotBuilt);
        }
        Ok(())
    }

    pub fn embed_query(&self, text: &str) -> Result<Vec<f32>> {
        let mut vectors = self.embedder.embed(&[text])?;
        let v = vectors.pop().ok_or_else(|| {
            Error::Backend(crate::backends::BackendError::Protocol("no query embedding returned".into()))
        })?;
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Backend(crate::backends::BackendError::Protocol(
                "query embedding is not finite".into(),
            )));
        }
        Ok(if is_degenerate(&v) { uniform_vector(v.len()) } else { v })
    }

    /// Top-`m` collapsed-tree nodes for `query`.
    pub fn dense_retrieve(&self, query: &str, m: usize) -> Result<Vec<usize>> {
        self.check_built()?;
        let q = self.embed_query(query)?;
        Ok(rank_by_similarity(&q, self.store, m)?
            .into_iter()
            .map(|(id, _)| id)
            .collect())
    }

    pub fn context(&self, question: &str, options: QueryOptions) -> Result<QueryContext> {
        QueryContext::extract(question, self.extractor, self.graph, options)
    }

    /// Extracts the query entities and runs [`adaptive_retrieve`].
    pub fn retrieve(&self, question: &str, options: QueryOptions) -> Result<RetrievalResult> {
        let ctx = self.context(question, options)?;
        adaptive_retrieve(&ctx, self)
    }
}

fn restrict_pairs(per_pair: &[PairEvidence], selected: &[usize]) -> Vec<PairEvidence> {
    per_pair
        .iter()
        .filter_map(|p| {
            let chunks: Vec<usize> = p
                .chunks
                .iter()
                .copied()
                .filter(|c| selected.contains(c))
                .collect();
            (!chunks.is_empty()).then(|| PairEvidence {
                entities: p.entities.clone(),
                chunks,
            })
        })
        .collect()
}

fn global_occurrence(
    ctx: &QueryContext,
    retriever: &Retriever<'_>,
    mut trace: Vec<TraceStep>,
) -> Result<RetrievalResult> {
    let k = ctx.options.k;
    let candidates = retriever.dense_retrieve(&ctx.query_text, 2 * k)?;
    trace.push(TraceStep::new("dense-2k", None, 0, candidates.len()));
    let nodes = occurrence_rank(&candidates, &ctx.query_entities, retriever.index, retriever.tree, k)?;
    trace.push(TraceStep::new("occurrence-rank", None, 0, nodes.len()));
    Ok(RetrievalResult {
        mode: RetrievalMode::GlobalOccurrence,
        nodes,
        pairs: Vec::new(),
        query_entities: ctx.query_entities.clone(),
        trace,
    })
}

/// Dispatches one query among the four retrieval modes.
pub fn adaptive_retrieve(ctx: &QueryContext, retriever: &Retriever<'_>) -> Result<RetrievalResult> {
    retriever.check_built()?;
    ctx.options.validate()?;
    let QueryOptions {
        k,
        hops,
        loop_threshold,
        mode,
    } = ctx.options;
    let entities = &ctx.query_entities;
    let mut trace = vec![TraceStep::new("entities", None, 0, entities.len())];

    if mode == ModeOverride::Dense || entities.is_empty() {
        let step = if mode == ModeOverride::Dense { "forced-dense" } else { "no-entities" };
        trace.push(TraceStep::new(step, None, 0, 0));
        let nodes = retriever.dense_retrieve(&ctx.query_text, k)?;
        trace.push(TraceStep::new("dense-k", None, 0, nodes.len()));
        return Ok(RetrievalResult {
            mode: RetrievalMode::GlobalDense,
            nodes,
            pairs: Vec::new(),
            query_entities: entities.clone(),
            trace,
        });
    }

    let mut h = hops;
    let mut pairs = graph_filter(retriever.graph, entities, h)?;
    if pairs.is_empty() {
        trace.push(TraceStep::new("no-pairs", Some(h), 0, 0));
        return global_occurrence(ctx, retriever, trace);
    }

    let mut mapping = index_mapping(&pairs, retriever.index);
    trace.push(TraceStep::new("index-mapping", Some(h), pairs.len(), mapping.candidates.len()));
    if mapping.candidates.is_empty() {
        // Related entities that never share a chunk: nothing local to rank.
        trace.push(TraceStep::new("no-shared-chunks", Some(h), pairs.len(), 0));
        return global_occurrence(ctx, retriever, trace);
    }

    let mut previous = Mapping::default();
    while mapping.candidates.len() > loop_threshold {
        previous = std::mem::take(&mut mapping);
        h -= 1;
        pairs = graph_filter(retriever.graph, entities, h)?;
        mapping = index_mapping(&pairs, retriever.index);
        trace.push(TraceStep::new("tighten", Some(h), pairs.len(), mapping.candidates.len()));
        if h == 0 {
            break;
        }
    }

    let (mode, source, nodes) = if mapping.candidates.is_empty() {
        let nodes = entity_aware_rank(&previous.candidates, entities, retriever.index, k);
        (RetrievalMode::LocalEntityAware, previous, nodes)
    } else if mapping.candidates.len() > k {
        let nodes = entity_aware_rank(&mapping.candidates, entities, retriever.index, k);
        (RetrievalMode::Local, mapping, nodes)
    } else {
        let nodes = mapping.candidates.clone();
        (RetrievalMode::Local, mapping, nodes)
    };
    trace.push(TraceStep::new(
        if mode == RetrievalMode::Local { "local" } else { "entity-aware-rank" },
        Some(h),
        source.per_pair.len(),
        nodes.len(),
    ));
    Ok(RetrievalResult {
        mode,
        pairs: restrict_pairs(&source.per_pair, &nodes),
        nodes,
        query_entities: entities.clone(),
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::{CallCounter, HashedBowEmbedder, Metered};
    use crate::graph::{build_biindex, merge_graphs, FrequencyMap, GraphFragment, NounLexicon, RuleBasedExtractor};
    use proptest::prelude::*;

    struct Fixture {
        tree: SummaryTree,
        store: VectorStore,
        graph: EntityGraph,
        index: BiIndex,
        embedder: Metered<HashedBowEmbedder>,
        extractor: RuleBasedExtractor,
    }

    impl Fixture {
        /// Chunks given as `(text, entity frequencies)`; edges listed
        /// explicitly so tests control the graph shape.
        fn new(chunks: &[(&str, &[(&str, u32)])], edges: &[(&str, &str)]) -> Self {
            let texts: Vec<String> = chunks.iter().map(|(t, _)| t.to_string()).collect();
            let tree = SummaryTree::from_parts(texts, vec![], 2).unwrap();
            let embedder = Metered::new(HashedBowEmbedder::default(), CallCounter::new());
            let store = crate::tree::embed_all(&tree, embedder.inner()).unwrap();
            let maps: Vec<FrequencyMap> = chunks
                .iter()
                .map(|(_, f)| f.iter().map(|(e, n)| (e.to_string(), *n)).collect())
                .collect();
            let index = build_biindex(&maps);
            let mut frag = GraphFragment::default();
            for m in &maps {
                for e in m.keys() {
                    frag.add_vertex(e, []);
                }
            }
            for (a, b) in edges {
                frag.add_edge(a, b, 1);
            }
            Self {
                tree,
                store,
                graph: merge_graphs([&frag]),
                index,
                embedder,
                extractor: RuleBasedExtractor::new(NounLexicon::new(["house cup"])),
            }
        }

        fn retriever(&self) -> Retriever<'_> {
            Retriever {
                tree: &self.tree,
                store: &self.store,
                graph: &self.graph,
                index: &self.index,
                embedder: &self.embedder,
                extractor: &self.extractor,
            }
        }
    }

    fn opts(k: usize, hops: usize, threshold: usize) -> QueryOptions {
        QueryOptions {
            k,
            hops,
            loop_threshold: threshold,
            mode: ModeOverride::Auto,
        }
    }

    #[test]
    fn options_validation() {
        assert!(opts(0, 4, 25).validate().is_err());
        assert!(opts(8, 0, 25).validate().is_err());
        assert!(opts(8, 4, 7).validate().is_err());
        assert!(QueryOptions::default().validate().is_ok());
    }

    #[test]
    fn unknown_entities_are_ignored() {
        let fx = Fixture::new(&[("Harry", &[("harry", 1)])], &[]);
        let ctx = QueryContext::new("q", ["voldemort".into(), "harry".into(), "harry".into()], &fx.graph, QueryOptions::default()).unwrap();
        assert_eq!(ctx.query_entities, vec!["harry".to_string()]);
        assert_eq!(ctx.ignored_entities, vec!["voldemort".to_string()]);
    }

    #[test]
    fn entity_free_query_is_global_dense() {
        let fx = Fixture::new(
            &[("it rained all day", &[]), ("Harry met Ron", &[("harry", 1), ("ron", 1)])],
            &[("harry", "ron")],
        );
        let r = fx.retriever().retrieve("it rained", QueryOptions::default()).unwrap();
        assert_eq!(r.mode, RetrievalMode::GlobalDense);
        assert_eq!(r.nodes[0], 0);
        assert!(r.pairs.is_empty());
    }

    #[test]
    fn identical_text_ranks_first() {
        let fx = Fixture::new(&[("alpha beta", &[]), ("gamma delta", &[]), ("epsilon", &[])], &[]);
        let r = fx.retriever();
        assert_eq!(r.dense_retrieve("gamma delta", 1).unwrap(), vec![1]);
        let all = r.dense_retrieve("gamma delta", 10).unwrap();
        assert_eq!(all.len(), 3);
        assert_eq!(all[0], 1);
    }

    #[test]
    fn single_entity_is_global_occurrence() {
        let fx = Fixture::new(
            &[("Harry slept", &[("harry", 1)]), ("Ron ate", &[("ron", 3)])],
            &[],
        );
        let r = fx.retriever().retrieve("Where did Ron go?", QueryOptions::default()).unwrap();
        assert_eq!(r.mode, RetrievalMode::GlobalOccurrence);
        assert_eq!(r.nodes[0], 1);
    }

    #[test]
    fn house_cup_query_is_local() {
        let mut chunks: Vec<(&str, &[(&str, u32)])> = vec![("filler", &[]); 9];
        chunks[2] = ("Slytherin won the house cup", &[("slytherin", 1), ("house cup", 1)]);
        chunks[7] = ("Slytherin lost the house cup", &[("slytherin", 1), ("house cup", 2)]);
        chunks[4] = ("Slytherin common room", &[("slytherin", 1)]);
        let fx = Fixture::new(&chunks, &[("slytherin", "house cup")]);
        let r = fx
            .retriever()
            .retrieve("Has Slytherin won the House Cup?", QueryOptions::default())
            .unwrap();
        assert_eq!(r.mode, RetrievalMode::Local);
        assert_eq!(r.nodes, vec![2, 7]);
        assert_eq!(r.pairs.len(), 1);
        assert_eq!(r.pairs[0].chunks, vec![2, 7]);
    }

    #[test]
    fn over_threshold_shrinks_to_entity_aware() {
        // a and b co-occur in 30 chunks: tightening never drops the pair
        // until h = 0, which empties the set.
        let a_b: &[(&str, u32)] = &[("a", 1), ("b", 1)];
        let a_b_heavy: &[(&str, u32)] = &[("a", 5), ("b", 1)];
        let mut chunks: Vec<(&str, &[(&str, u32)])> = vec![("x", a_b); 30];
        chunks[17] = ("x", a_b_heavy);
        let fx = Fixture::new(&chunks, &[("a", "b")]);
        let ctx = QueryContext::new("q", ["a".into(), "b".into()], &fx.graph, opts(3, 2, 25)).unwrap();
        let r = adaptive_retrieve(&ctx, &fx.retriever()).unwrap();
        assert_eq!(r.mode, RetrievalMode::LocalEntityAware);
        assert_eq!(r.nodes, vec![17, 0, 1]);
        assert_eq!(r.pairs[0].chunks, vec![0, 1, 17]);
        let hops: Vec<Option<usize>> = r.trace.iter().filter(|t| t.step == "tighten").map(|t| t.hops).collect();
        assert_eq!(hops, vec![Some(1), Some(0)]);
    }

    #[test]
    fn local_reduced_to_k() {
        let a_b: &[(&str, u32)] = &[("a", 1), ("b", 1)];
        let abc: &[(&str, u32)] = &[("a", 1), ("b", 1), ("c", 1)];
        let mut chunks: Vec<(&str, &[(&str, u32)])> = vec![("x", a_b); 10];
        chunks[6] = ("x", abc);
        let fx = Fixture::new(&chunks, &[("a", "b"), ("b", "c")]);
        let ctx = QueryContext::new("q", ["a".into(), "b".into(), "c".into()], &fx.graph, opts(2, 4, 25)).unwrap();
        let r = adaptive_retrieve(&ctx, &fx.retriever()).unwrap();
        assert_eq!(r.mode, RetrievalMode::Local);
        assert_eq!(r.nodes, vec![6, 0]);
    }

    #[test]
    fn related_but_never_together_falls_back_to_global() {
        let fx = Fixture::new(
            &[("x", &[("a", 1), ("m", 1)]), ("y", &[("m", 1), ("b", 1)])],
            &[("a", "m"), ("m", "b")],
        );
        let ctx = QueryContext::new("q", ["a".into(), "b".into()], &fx.graph, QueryOptions::default()).unwrap();
        let r = adaptive_retrieve(&ctx, &fx.retriever()).unwrap();
        assert_eq!(r.mode, RetrievalMode::GlobalOccurrence);
        assert!(r.trace.iter().any(|t| t.step == "no-shared-chunks"));
    }

    #[test]
    fn forced_dense_ignores_entities() {
        let fx = Fixture::new(&[("x", &[("a", 1), ("b", 1)])], &[("a", "b")]);
        let options = QueryOptions {
            mode: ModeOverride::Dense,
            ..Default::default()
        };
        let ctx = QueryContext::new("q", ["a".into(), "b".into()], &fx.graph, options).unwrap();
        assert_eq!(adaptive_retrieve(&ctx, &fx.retriever()).unwrap().mode, RetrievalMode::GlobalDense);
    }

    #[test]
    fn empty_store_is_not_built() {
        let fx = Fixture::new(&[("x", &[])], &[]);
        let store = VectorStore::from_rows(4, vec![]).unwrap();
        let mut r = fx.retriever();
        r.store = &store;
        assert!(matches!(r.dense_retrieve("x", 1), Err(Error::IndexNotBuilt)));
        assert!(matches!(rank_by_similarity(&[1.0; 4], &store, 1), Err(Error::IndexNotBuilt)));
    }

    #[test]
    fn only_the_embedder_is_called() {
        let fx = Fixture::new(&[("Harry", &[("harry", 1)])], &[]);
        let before = fx.embedder.counter().snapshot();
        fx.retriever().retrieve("it rained", QueryOptions::default()).unwrap();
        let after = fx.embedder.counter().snapshot();
        assert_eq!(after.embedder_calls, before.embedder_calls + 1);
        assert_eq!(after.summarizer_calls, before.summarizer_calls);
    }

    fn naive_argsort(query: &[f32], rows: &[Vec<f32>]) -> Vec<usize> {
        let cos = |r: &[f32]| {
            let dot: f64 = r.iter().zip(query).map(|(a, b)| *a as f64 * *b as f64).sum();
            let n1: f64 = r.iter().map(|a| (*a as f64).powi(2)).sum::<f64>().sqrt();
            let n2: f64 = query.iter().map(|a| (*a as f64).powi(2)).sum::<f64>().sqrt();
            dot / (n1 * n2)
        };
        let mut ids: Vec<usize> = (0..rows.len()).collect();
        // Insertion sort by descending similarity, stable on id.
        for i in 1..ids.len() {
            let mut j = i;
            while j > 0 && cos(&rows[ids[j]]) > cos(&rows[ids[j - 1]]) {
                ids.swap(j, j - 1);
                j -= 1;
            }
        }
        ids
    }

    proptest! {
        #[test]
        fn similarity_matches_naive_sort(rows in prop::collection::vec(prop::collection::vec(-10i8..10, 4), 1..40),
                                         query in prop::collection::vec(1i8..10, 4), m in 1usize..50) {
            let rows: Vec<Vec<f32>> = rows.into_iter()
                .map(|r| if r.iter().all(|x| *x == 0) { vec![1.0, 0.0, 0.0, 0.0] } else { r.into_iter().map(f32::from).collect() })
                .collect();
            let q: Vec<f32> = query.into_iter().map(f32::from).collect();
            let store = VectorStore::from_rows(4, rows.clone()).unwrap();
            let got: Vec<usize> = rank_by_similarity(&q, &store, m).unwrap().into_iter().map(|(i, _)| i).collect();
            let expected: Vec<usize> = naive_argsort(&q, &rows).into_iter().take(m).collect();
            // Near-ties may flip under f32 vs f64 rounding; compare scores.
            let scores = |ids: &[usize]| -> Vec<f32> { ids.iter().map(|&i| store.cosine(&q, q.iter().map(|x| x * x).sum::<f32>().sqrt(), i)).collect() };
            let (a, b) = (scores(&got), scores(&expected));
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-5);
            }
            prop_assert_eq!(got.len(), expected.len());
        }

        #[test]
        fn filter_is_monotone_in_h(n in 2usize..20, raw in prop::collection::vec((0usize..20, 0usize..20), 0..40)) {
            let mut f = GraphFragment::default();
            for i in 0..n {
                f.add_vertex(&format!("v{i:02}"), []);
            }
            for (a, b) in raw {
                let (a, b) = (a % n, b % n);
                if a != b {
                    f.add_edge(&format!("v{a:02}"), &format!("v{b:02}"), 1);
                }
            }
            let g = merge_graphs([&f]);
            let all: Vec<String> = (0..n).map(|i| format!("v{i:02}")).collect();
            for h in 1..5 {
                let small = graph_filter(&g, &all, h - 1).unwrap();
                let big = graph_filter(&g, &all, h).unwrap();
                prop_assert!(small.iter().all(|p| big.contains(p)));
            }
        }
    }
}
