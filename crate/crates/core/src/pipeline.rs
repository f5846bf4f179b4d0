//! End-to-end indexing and querying.

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::backends::{CallCounter, Embedder, EntityExtractor, Metered, Summarizer};
use crate::chunker::{split_into_chunks, tokenize, ChunkConfig, Tokenizer, WordPunctTokenizer};
use crate::error::{Error, Result};
use crate::formatter::format_result;
use crate::graph::{build_graph_index, NounLexicon, RuleBasedExtractor};
use crate::persistence::{BuildParams, BuildStats, IndexArtifact};
use crate::query::{PairEvidence, QueryOptions, RetrievalMode, Retriever, TraceStep};
use crate::tree::{build_summary_tree, embed_all, TreeConfig};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IndexOptions {
    pub chunk: ChunkConfig,
    pub tree: TreeConfig,
}

/// Wall-clock milliseconds per indexing stage. Tree and graph run
/// concurrently, so `total_index_ms` is less than the sum.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub chunking_ms: f64,
    pub tree_ms: f64,
    pub graph_ms: f64,
    pub embed_ms: f64,
    pub total_index_ms: f64,
}

/// Backends used for one build. `lexicon` is recorded in the index so that
/// queries use the same rule-based extractor.
pub struct Backends<'a> {
    pub summarizer: &'a dyn Summarizer,
    pub embedder: &'a dyn Embedder,
    pub extractor: &'a dyn EntityExtractor,
    pub lexicon: Vec<String>,
}

pub struct BuildOutput {
    pub artifact: IndexArtifact,
    pub timings: StageTimings,
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

/// chunk → (tree ∥ graph) → embed.
pub fn build_index(text: &str, provenance: &str, options: IndexOptions, backends: &Backends<'_>) -> Result<BuildOutput> {
    options.chunk.validate()?;
    options.tree.validate()?;
    let tokenizer = WordPunctTokenizer;
    let counter = CallCounter::new();
    let summarizer = Metered::new(backends.summarizer, counter.clone());
    let embedder = Metered::new(backends.embedder, counter.clone());

    let start = Instant::now();
    let ts = tokenize(text, provenance, &tokenizer)?;
    let chunks = split_into_chunks(&ts, options.chunk, &tokenizer)?;
    let chunking_ms = ms(start);

    let (tree, graph) = std::thread::scope(|s| {
        let tree = s.spawn(|| {
            let t = Instant::now();
            build_summary_tree(&chunks, options.tree, &summarizer).map(|tree| (tree, ms(t)))
        });
        let t = Instant::now();
        let graph = build_graph_index(&chunks, backends.extractor).map(|g| (g, ms(t)));
        (tree.join().expect("tree stage panicked"), graph)
    });
    let (tree, tree_ms) = tree?;
    let ((graph, index), graph_ms) = graph?;

    let t = Instant::now();
    let store = embed_all(&tree, &embedder)?;
    let embed_ms = ms(t);
    let total_index_ms = ms(start);

    let calls = counter.snapshot();
    let stats = BuildStats {
        token_count: ts.len(),
        chunk_count: chunks.len(),
        summary_count: tree.summary_count(),
        vertex_count: graph.vertex_count(),
        edge_count: graph.edge_count(),
        summarizer_calls: calls.summarizer_calls,
        embedder_calls: calls.embedder_calls,
    };
    let params = BuildParams {
        chunk_size: options.chunk.chunk_size,
        overlap: options.chunk.overlap,
        group_size: options.tree.group_size,
        build_to_root: options.tree.build_to_root,
        tokenizer: tokenizer.name().to_string(),
        summarizer: backends.summarizer.id(),
        embedder: backends.embedder.id(),
        extractor: backends.extractor.id(),
        lexicon: backends.lexicon.clone(),
    };
    Ok(BuildOutput {
        artifact: IndexArtifact {
            params,
            stats,
            chunks,
            tree,
            store,
            graph,
            index,
        },
        timings: StageTimings {
            chunking_ms,
            tree_ms,
            graph_ms,
            embed_ms,
            total_index_ms,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrievedNode {
    pub id: usize,
    pub level: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryOutput {
    pub question: String,
    pub mode: RetrievalMode,
    pub query_entities: Vec<String>,
    pub chunks: Vec<RetrievedNode>,
    pub pairs: Vec<PairEvidence>,
    pub trace: Vec<TraceStep>,
    pub formatted: String,
    pub retrieval_ms: f64,
}

/// A loaded index together with the backends needed to query it.
pub struct Engine {
    artifact: IndexArtifact,
    embedder: Arc<dyn Embedder>,
    extractor: Arc<dyn EntityExtractor>,
}

impl Engine {
    /// Fails if `embedder` is not the one the index was built with.
    pub fn new(artifact: IndexArtifact, embedder: Arc<dyn Embedder>, extractor: Arc<dyn EntityExtractor>) -> Result<Self> {
        if embedder.id() != artifact.params.embedder {
            return Err(Error::InvalidConfig(format!(
                "index was built with embedder '{}' but '{}' is configured",
                artifact.params.embedder,
                embedder.id()
            )));
        }
        Ok(Self {
            artifact,
            embedder,
            extractor,
        })
    }

    /// Rule-based extractor over the lexicon stored in the index.
    pub fn stored_extractor(artifact: &IndexArtifact) -> Arc<dyn EntityExtractor> {
        Arc::new(RuleBasedExtractor::new(NounLexicon::new(&artifact.params.lexicon)))
    }

    pub fn artifact(&self) -> &IndexArtifact {
        &self.artifact
    }

    pub fn retriever(&self) -> Retriever<'_> {
        Retriever {
            tree: &self.artifact.tree,
            store: &self.artifact.store,
            graph: &self.artifact.graph,
            index: &self.artifact.index,
            embedder: &*self.embedder,
            extractor: &*self.extractor,
        }
    }

    pub fn query(&self, question: &str, options: QueryOptions) -> Result<QueryOutput> {
        let t = Instant::now();
        let result = self.retriever().retrieve(question, options)?;
        let retrieval_ms = ms(t);
        let formatted = format_result(&result, &self.artifact.tree, &self.artifact.chunks, &WordPunctTokenizer)?;
        let chunks = result
            .nodes
            .iter()
            .map(|&id| {
                let node = self.artifact.tree.node(id)?;
                Ok(RetrievedNode {
                    id,
                    level: node.level,
                    text: node.text.clone(),
                })
            })
            .collect::<Result<_>>()?;
        Ok(QueryOutput {
            question: question.to_string(),
            mode: result.mode,
            query_entities: result.query_entities,
            chunks,
            pairs: result.pairs,
            trace: result.trace,
            formatted,
            retrieval_ms,
        })
    }
}
