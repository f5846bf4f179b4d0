//! Hop distances in the entity graph and the pairwise graph filter.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::graph::EntityGraph;

/// Unweighted shortest-path length, `None` when no path exists.
pub fn hop_distance(graph: &EntityGraph, a: &str, b: &str) -> Result<Option<usize>> {
    let source = graph
        .vertex_id(a)
        .ok_or_else(|| Error::VertexNotFound(a.to_string()))?;
    let target = graph
        .vertex_id(b)
        .ok_or_else(|| Error::VertexNotFound(b.to_string()))?;
    Ok(bounded_bfs(graph, source, &[target], usize::MAX)[0])
}

/// BFS from `source` up to `max_depth` hops. Returns the distance to each
/// of `targets`, stopping early once all are found.
fn bounded_bfs(
    graph: &EntityGraph,
    source: u32,
    targets: &[u32],
    max_depth: usize,
) -> Vec<Option<usize>> {
    let mut found: Vec<Option<usize>> = targets
        .iter()
        .map(|&t| (t == source).then_some(0))
        .collect();
    let mut remaining = found.iter().filter(|d| d.is_none()).count();
    if remaining == 0 || max_depth == 0 {
        return found;
    }

    let mut depth = vec![u32::MAX; graph.vertex_count()];
    depth[source as usize] = 0;
    let mut queue = VecDeque::from([source]);
    while let Some(v) = queue.pop_front() {
        let d = depth[v as usize] as usize;
        if d >= max_depth {
            continue;
        }
        for &(n, _) in graph.neighbors(v) {
            if depth[n as usize] != u32::MAX {
                continue;
            }
            depth[n as usize] = (d + 1) as u32;
            for (slot, &t) in found.iter_mut().zip(targets) {
                if t == n && slot.is_none() {
                    *slot = Some(d + 1);
                    remaining -= 1;
                }
            }
            if remaining == 0 {
                return found;
            }
            queue.push_back(n);
        }
    }
    found
}

/// All pairs `(e_i, e_j)`, `i < j`, of `entities` within `h` hops. Entities
/// must be graph vertices; pairs come out in the order of `entities`, which
/// callers keep sorted.
pub fn graph_filter(graph: &EntityGraph, entities: &[String], h: usize) -> Result<Vec<(String, String)>> {
    let ids: Vec<u32> = entities
        .iter()
        .map(|e| graph.vertex_id(e).ok_or_else(|| Error::VertexNotFound(e.clone())))
        .collect::<Result<_>>()?;
    let mut pairs = Vec::new();
    if h == 0 {
        return Ok(pairs);
    }
    for i in 0..ids.len() {
        let rest = &ids[i + 1..];
        if rest.is_empty() {
            break;
        }
        let dists = bounded_bfs(graph, ids[i], rest, h);
        for (offset, d) in dists.into_iter().enumerate() {
            let j = i + 1 + offset;
            if ids[i] != ids[j] && d.is_some_and(|d| d <= h) {
                pairs.push((entities[i].clone(), entities[j].clone()));
            }
        }
    }
    Ok(pairs)
}
