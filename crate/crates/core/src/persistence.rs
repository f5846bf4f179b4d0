//! Single-file `.e2idx` container.
//!
//! Layout: the 8-byte magic, then a sequence of sections. Each section is a
//! 4-byte tag, a little-endian `u64` payload length, the payload, and the
//! little-endian CRC32 of the payload. Sections appear in a fixed order:
//!
//! | tag    | payload                                                       |
//! |--------|---------------------------------------------------------------|
//! | `HEAD` | JSON: `format_version`, build params, build stats             |
//! | `CHNK` | chunk count, then per chunk: start, end, text                 |
//! | `TREE` | leaf count, summary count, then per summary: children, text   |
//! | `VECS` | dimension, row count, then `f32` LE values row-major          |
//! | `GRPH` | vertices (name, surface forms) sorted, then edges `a < b`     |
//! | `BIDX` | per chunk: (vertex, freq) pairs; per entity: vertex, chunks   |
//!
//! Integers are unsigned LEB128 varints and strings are a varint byte length
//! followed by UTF-8. Leaf texts are not stored twice: tree leaves are the
//! chunk texts.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::chunker::Chunk;
use crate::error::{Error, Result};
use crate::graph::{BiIndex, Entity, EntityGraph, FrequencyMap};
use crate::tree::{SummaryTree, VectorStore};

pub const FORMAT_VERSION: u32 = 1;
pub const MAGIC: &[u8; 8] = b"E2IDX\0\r\n";
pub const EXTENSION: &str = "e2idx";

const SECTIONS: [&[u8; 4]; 6] = [b"HEAD", b"CHNK", b"TREE", b"VECS", b"GRPH", b"BIDX"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildParams {
    pub chunk_size: usize,
    pub overlap: usize,
    pub group_size: usize,
    pub build_to_root: bool,
    pub tokenizer: String,
    pub summarizer: String,
    pub embedder: String,
    pub extractor: String,
    /// Noun lexicon used by the rule-based extractor, needed again at query
    /// time.
    pub lexicon: Vec<String>,
}

/// Counts describing a build. Wall times are reported by the pipeline but
/// not stored, so that identical builds produce identical files.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildStats {
    pub token_count: usize,
    pub chunk_count: usize,
    pub summary_count: usize,
    pub vertex_count: usize,
    pub edge_count: usize,
    pub summarizer_calls: u64,
    pub embedder_calls: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexArtifact {
    pub params: BuildParams,
    pub stats: BuildStats,
    pub chunks: Vec<Chunk>,
    pub tree: SummaryTree,
    pub store: VectorStore,
    pub graph: EntityGraph,
    pub index: BiIndex,
}

#[derive(Serialize, Deserialize)]
struct Header {
    format_version: u32,
    params: BuildParams,
    stats: BuildStats,
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::CorruptIndex(msg.into())
}

#[derive(Default)]
struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    fn uint(&mut self, v: u64) {
        leb128::write::unsigned(&mut self.buf, v).expect("writing to a Vec cannot fail");
    }

    fn usize(&mut self, v: usize) {
        self.uint(v as u64);
    }

    fn str(&mut self, s: &str) {
        self.usize(s.len());
        self.buf.extend_from_slice(s.as_bytes());
    }
}

struct Decoder<'a> {
    section: &'static str,
    rest: &'a [u8],
}

impl<'a> Decoder<'a> {
    fn new(section: &'static str, payload: &'a [u8]) -> Self {
        Self { section, rest: payload }
    }

    fn err(&self, what: &str) -> Error {
        corrupt(format!("{} section: {what}", self.section))
    }

    fn uint(&mut self) -> Result<u64> {
        leb128::read::unsigned(&mut self.rest).map_err(|_| self.err("bad varint"))
    }

    fn usize(&mut self) -> Result<usize> {
        let v = self.uint()?;
        usize::try_from(v).map_err(|_| self.err("integer out of range"))
    }

    fn u32(&mut self) -> Result<u32> {
        let v = self.uint()?;
        u32::try_from(v).map_err(|_| self.err("integer out of range"))
    }

    /// Reads a count and rejects counts that cannot fit in the remaining
    /// bytes, so corrupt lengths never trigger huge allocations.
    fn count(&mut self, min_item_bytes: usize) -> Result<usize> {
        let n = self.usize()?;
        if n.saturating_mul(min_item_bytes) > self.rest.len() {
            return Err(self.err("count exceeds section length"));
        }
        Ok(n)
    }

    fn bytes(&mut self, n: usize) -> Result<&'a [u8]> {
        if n > self.rest.len() {
            return Err(self.err("unexpected end"));
        }
        let (head, tail) = self.rest.split_at(n);
        self.rest = tail;
        Ok(head)
    }

    fn string(&mut self) -> Result<String> {
        let n = self.usize()?;
        let bytes = self.bytes(n)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| self.err("invalid UTF-8"))
    }

    fn finish(self) -> Result<()> {
        if self.rest.is_empty() {
            Ok(())
        } else {
            Err(self.err("trailing bytes"))
        }
    }
}

fn push_section(out: &mut Vec<u8>, tag: &[u8; 4], payload: &[u8]) {
    out.extend_from_slice(tag);
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(payload);
    out.extend_from_slice(&crc32fast::hash(payload).to_le_bytes());
}

fn encode(artifact: &IndexArtifact, format_version: u32) -> Result<Vec<u8>> {
    let header = serde_json::to_vec(&Header {
        format_version,
        params: artifact.params.clone(),
        stats: artifact.stats.clone(),
    })
    .map_err(|e| Error::InvalidConfig(format!("cannot serialize header: {e}")))?;

    let mut chunks = Encoder::default();
    chunks.usize(artifact.chunks.len());
    for c in &artifact.chunks {
        chunks.usize(c.start);
        chunks.usize(c.end);
        chunks.str(&c.text);
    }

    let mut tree = Encoder::default();
    tree.usize(artifact.tree.leaf_count());
    tree.usize(artifact.tree.summary_count());
    for node in artifact.tree.summaries() {
        tree.usize(node.children.len());
        for &c in &node.children {
            tree.usize(c);
        }
        tree.str(&node.text);
    }

    let mut vecs = Encoder::default();
    vecs.usize(artifact.store.dimension());
    vecs.usize(artifact.store.len());
    for x in artifact.store.as_flat() {
        vecs.buf.extend_from_slice(&x.to_le_bytes());
    }

    let graph = &artifact.graph;
    let mut grph = Encoder::default();
    grph.usize(graph.vertex_count());
    for e in graph.entities() {
        grph.str(&e.canonical);
        grph.usize(e.surface_forms.len());
        for s in &e.surface_forms {
            grph.str(s);
        }
    }
    grph.usize(graph.edge_count());
    for ((a, b), w) in graph.edges() {
        grph.uint(a.into());
        grph.uint(b.into());
        grph.uint(w.into());
    }

    let vertex = |name: &str| {
        graph
            .vertex_id(name)
            .ok_or_else(|| Error::VertexNotFound(name.to_string()))
    };
    let index = &artifact.index;
    let mut bidx = Encoder::default();
    bidx.usize(index.chunk_to_entity_freq.len());
    for freq in &index.chunk_to_entity_freq {
        bidx.usize(freq.len());
        for (entity, &f) in freq {
            bidx.uint(vertex(entity)?.into());
            bidx.uint(f.into());
        }
    }
    bidx.usize(index.entity_to_chunks.len());
    for (entity, list) in &index.entity_to_chunks {
        bidx.uint(vertex(entity)?.into());
        bidx.usize(list.len());
        for &c in list {
            bidx.usize(c);
        }
    }

    let mut out = MAGIC.to_vec();
    for (tag, payload) in SECTIONS
        .iter()
        .zip([&header, &chunks.buf, &tree.buf, &vecs.buf, &grph.buf, &bidx.buf])
    {
        push_section(&mut out, tag, payload);
    }
    Ok(out)
}

/// Encodes the artifact to bytes.
pub fn to_bytes(artifact: &IndexArtifact) -> Result<Vec<u8>> {
    encode(artifact, FORMAT_VERSION)
}

/// Writes the artifact atomically: a temporary file in the target directory
/// is renamed over `path` once fully written.
pub fn save(artifact: &IndexArtifact, path: &Path) -> Result<()> {
    let bytes = to_bytes(artifact)?;
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    tmp.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<IndexArtifact> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes)
}

fn split_sections(bytes: &[u8]) -> Result<Vec<&[u8]>> {
    let mut rest = bytes
        .strip_prefix(MAGIC.as_slice())
        .ok_or_else(|| corrupt("not an index file (bad magic)"))?;
    let mut payloads = Vec::with_capacity(SECTIONS.len());
    for tag in SECTIONS {
        let name = String::from_utf8_lossy(tag);
        if rest.len() < 12 {
            return Err(corrupt(format!("truncated before section {name}")));
        }
        if &rest[..4] != tag {
            return Err(corrupt(format!("expected section {name}")));
        }
        let len = u64::from_le_bytes(rest[4..12].try_into().expect("8 bytes"));
        let len = usize::try_from(len).map_err(|_| corrupt("section too large"))?;
        let body = &rest[12..];
        if body.len() < len.saturating_add(4) {
            return Err(corrupt(format!("section {name} is truncated")));
        }
        let (payload, tail) = body.split_at(len);
        let crc = u32::from_le_bytes(tail[..4].try_into().expect("4 bytes"));
        if crc32fast::hash(payload) != crc {
            return Err(corrupt(format!("checksum mismatch in section {name}")));
        }
        payloads.push(payload);
        rest = &tail[4..];
    }
    if !rest.is_empty() {
        return Err(corrupt("trailing bytes after last section"));
    }
    Ok(payloads)
}

fn decode_header(payload: &[u8]) -> Result<Header> {
    let value: serde_json::Value =
        serde_json::from_slice(payload).map_err(|e| corrupt(format!("header is not JSON: {e}")))?;
    let found = value
        .get("format_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| corrupt("header lacks format_version"))?;
    if found != u64::from(FORMAT_VERSION) {
        return Err(Error::VersionMismatch {
            expected: FORMAT_VERSION,
            found: u32::try_from(found).unwrap_or(u32::MAX),
        });
    }
    serde_json::from_value(value).map_err(|e| corrupt(format!("invalid header: {e}")))
}

fn decode_chunks(payload: &[u8]) -> Result<Vec<Chunk>> {
    let mut d = Decoder::new("CHNK", payload);
    let n = d.count(3)?;
    let mut chunks = Vec::with_capacity(n);
    for chunk_id in 0..n {
        let start = d.usize()?;
        let end = d.usize()?;
        let text = d.string()?;
        if start >= end {
            return Err(corrupt(format!("chunk {chunk_id} has empty range {start}..{end}")));
        }
        chunks.push(Chunk {
            chunk_id,
            start,
            end,
            text,
        });
    }
    d.finish()?;
    Ok(chunks)
}

fn decode_tree(payload: &[u8], chunks: &[Chunk], group_size: usize) -> Result<SummaryTree> {
    let mut d = Decoder::new("TREE", payload);
    let leaves = d.usize()?;
    if leaves != chunks.len() {
        return Err(corrupt(format!("tree has {leaves} leaves for {} chunks", chunks.len())));
    }
    let n = d.count(2)?;
    let mut summaries = Vec::with_capacity(n);
    for _ in 0..n {
        let k = d.count(1)?;
        let children = (0..k).map(|_| d.usize()).collect::<Result<Vec<_>>>()?;
        summaries.push((children, d.string()?));
    }
    d.finish()?;
    let texts = chunks.iter().map(|c| c.text.clone()).collect();
    SummaryTree::from_parts(texts, summaries, group_size)
}

fn decode_vectors(payload: &[u8], nodes: usize) -> Result<VectorStore> {
    let mut d = Decoder::new("VECS", payload);
    let dimension = d.usize()?;
    let rows = d.usize()?;
    if rows != nodes {
        return Err(corrupt(format!("{rows} vectors for {nodes} tree nodes")));
    }
    let values = dimension
        .checked_mul(rows)
        .ok_or_else(|| corrupt("vector store size overflows"))?;
    let raw = d.bytes(values.checked_mul(4).ok_or_else(|| corrupt("vector store size overflows"))?)?;
    d.finish()?;
    let data = raw
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")))
        .collect();
    VectorStore::from_flat(dimension, data)
}

fn decode_graph(payload: &[u8]) -> Result<EntityGraph> {
    let mut d = Decoder::new("GRPH", payload);
    let n = d.count(2)?;
    let mut entities = Vec::with_capacity(n);
    for _ in 0..n {
        let canonical = d.string()?;
        let forms = d.count(1)?;
        let surface_forms = (0..forms).map(|_| d.string()).collect::<Result<BTreeSet<_>>>()?;
        entities.push(Entity {
            canonical,
            surface_forms,
        });
    }
    let m = d.count(3)?;
    let mut edges = Vec::with_capacity(m);
    for _ in 0..m {
        edges.push(((d.u32()?, d.u32()?), d.u32()?));
    }
    d.finish()?;
    EntityGraph::from_parts(entities, edges)
}

fn decode_biindex(payload: &[u8], graph: &EntityGraph, chunk_count: usize) -> Result<BiIndex> {
    let mut d = Decoder::new("BIDX", payload);
    let name = |d: &mut Decoder<'_>| -> Result<String> {
        let id = d.u32()?;
        if id as usize >= graph.vertex_count() {
            return Err(corrupt(format!("BIDX section: unknown vertex {id}")));
        }
        Ok(graph.name(id).to_string())
    };
    let chunks = d.usize()?;
    if chunks != chunk_count {
        return Err(corrupt(format!("index covers {chunks} chunks, expected {chunk_count}")));
    }
    let mut index = BiIndex::default();
    for _ in 0..chunks {
        let k = d.count(2)?;
        let mut freq = FrequencyMap::new();
        for _ in 0..k {
            let entity = name(&mut d)?;
            let f = d.u32()?;
            if freq.insert(entity, f).is_some() {
                return Err(corrupt("BIDX section: duplicate chunk entry"));
            }
        }
        index.chunk_to_entity_freq.push(freq);
    }
    let entities = d.count(2)?;
    for _ in 0..entities {
        let entity = name(&mut d)?;
        let k = d.count(1)?;
        let list = (0..k).map(|_| d.usize()).collect::<Result<Vec<_>>>()?;
        if index.entity_to_chunks.insert(entity, list).is_some() {
            return Err(corrupt("BIDX section: duplicate entity entry"));
        }
    }
    d.finish()?;
    index
        .check_symmetry()
        .map_err(|e| corrupt(format!("entity/chunk index is inconsistent: {e}")))?;
    Ok(index)
}

/// Decodes and validates an index file's bytes.
pub fn from_bytes(bytes: &[u8]) -> Result<IndexArtifact> {
    let s = split_sections(bytes)?;
    let header = decode_header(s[0])?;
    let chunks = decode_chunks(s[1])?;
    let tree = decode_tree(s[2], &chunks, header.params.group_size)?;
    let store = decode_vectors(s[3], tree.len())?;
    let graph = decode_graph(s[4])?;
    let index = decode_biindex(s[5], &graph, chunks.len())?;
    Ok(IndexArtifact {
        params: header.params,
        stats: header.stats,
        chunks,
        tree,
        store,
        graph,
        index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::{HashedBowEmbedder, TruncatingSummarizer};
    use crate::chunker::{split_into_chunks, tokenize, ChunkConfig, WordPunctTokenizer};
    use crate::graph::{build_graph_index, NounLexicon, RuleBasedExtractor};
    use crate::tree::{build_summary_tree, embed_all, TreeConfig};
    use proptest::prelude::*;

    const TEXT: &str = "Harry met Ron at the station. Hermione joined Harry and Ron on the train. \
        The house cup went to Gryffindor. Draco sneered at Harry. Ron laughed. \
        Snape watched Draco and Harry from the staff table. Dumbledore smiled.";

    fn artifact_from(text: &str, size: usize, overlap: usize, g: usize) -> IndexArtifact {
        let tokenizer = WordPunctTokenizer;
        let ts = tokenize(text, "test", &tokenizer).unwrap();
        let chunks = split_into_chunks(&ts, ChunkConfig::new(size, overlap).unwrap(), &tokenizer).unwrap();
        let config = TreeConfig {
            group_size: g,
            ..TreeConfig::default()
        };
        let tree = build_summary_tree(&chunks, config, &TruncatingSummarizer::default()).unwrap();
        let store = embed_all(&tree, &HashedBowEmbedder::new(16)).unwrap();
        let lexicon = NounLexicon::new(["house cup"]);
        let (graph, index) = build_graph_index(&chunks, &RuleBasedExtractor::new(lexicon.clone())).unwrap();
        IndexArtifact {
            params: BuildParams {
                chunk_size: size,
                overlap,
                group_size: g,
                build_to_root: false,
                tokenizer: "word-punct".into(),
                summarizer: "offline".into(),
                embedder: "offline".into(),
                extractor: "rule-based".into(),
                lexicon: lexicon.terms(),
            },
            stats: BuildStats {
                token_count: ts.len(),
                chunk_count: chunks.len(),
                summary_count: tree.summary_count(),
                vertex_count: graph.vertex_count(),
                edge_count: graph.edge_count(),
                ..BuildStats::default()
            },
            chunks,
            tree,
            store,
            graph,
            index,
        }
    }

    fn sample() -> IndexArtifact {
        artifact_from(TEXT, 12, 3, 3)
    }

    #[test]
    fn round_trip_through_a_file() {
        let a = sample();
        assert!(a.tree.summary_count() > 0 && a.graph.edge_count() > 0);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("book.e2idx");
        save(&a, &path).unwrap();
        assert_eq!(load(&path).unwrap(), a);
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn saving_twice_gives_identical_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let (p1, p2) = (dir.path().join("a.e2idx"), dir.path().join("b.e2idx"));
        save(&sample(), &p1).unwrap();
        save(&sample(), &p2).unwrap();
        assert_eq!(std::fs::read(p1).unwrap(), std::fs::read(p2).unwrap());
    }

    #[test]
    fn every_truncation_is_corrupt() {
        let bytes = to_bytes(&sample()).unwrap();
        for len in 0..bytes.len() {
            assert!(
                matches!(from_bytes(&bytes[..len]), Err(Error::CorruptIndex(_))),
                "prefix of {len} bytes"
            );
        }
    }

    #[test]
    fn newer_version_is_rejected() {
        let bytes = encode(&sample(), FORMAT_VERSION + 1).unwrap();
        assert!(matches!(
            from_bytes(&bytes),
            Err(Error::VersionMismatch { expected: FORMAT_VERSION, found }) if found == FORMAT_VERSION + 1
        ));
    }

    #[test]
    fn missing_file_reports_path() {
        let err = load(Path::new("/nonexistent/x.e2idx")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/x.e2idx"));
    }

    #[test]
    fn asymmetric_biindex_is_corrupt() {
        let clean = sample();
        let entities: Vec<String> = clean.index.entity_to_chunks.keys().cloned().collect();
        for entity in entities {
            let mut a = clean.clone();
            a.index.entity_to_chunks.get_mut(&entity).unwrap().pop();
            let mut b = clean.clone();
            let first = b.index.entity_to_chunks[&entity][0];
            *b.index.chunk_to_entity_freq[first].get_mut(&entity).unwrap() = 0;
            for broken in [a, b] {
                let bytes = to_bytes(&broken).unwrap();
                assert!(matches!(from_bytes(&bytes), Err(Error::CorruptIndex(_))), "{entity}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn random_documents_round_trip(words in prop::collection::vec(prop::sample::select(vec![
            "Harry", "Ron", "met", "the", "house", "cup", ".", "Draco", "and", "Hermione", "saw", ","
        ]), 1..200), size in 4usize..40, overlap_pct in 0usize..90, g in 2usize..6) {
            let overlap = overlap_pct * size / 100;
            let a = artifact_from(&words.join(" "), size, overlap, g);
            let bytes = to_bytes(&a).unwrap();
            prop_assert_eq!(from_bytes(&bytes).unwrap(), a);
        }

        #[test]
        fn flipped_bytes_never_load(pos in any::<prop::sample::Index>(), bit in 0u8..8) {
            let mut bytes = to_bytes(&sample()).unwrap();
            let i = pos.index(bytes.len());
            bytes[i] ^= 1 << bit;
            let rejected = matches!(from_bytes(&bytes), Err(Error::CorruptIndex(_)) | Err(Error::VersionMismatch { .. }));
            prop_assert!(rejected, "flip at byte {} bit {} was accepted", i, bit);
        }
    }
}
