//! Propagation paths as explicit walks.
//!
//! Enumerating walks is exponential in the bounce count. It exists as a
//! brute-force reference for the closed-form transfer matrices, not as a
//! way to compute them.

use super::{GraphError, PropagationGraph, VertexId, VertexKind};
use crate::{C64, CMatrix};

/// Default upper bound on the number of enumerated paths.
pub const DEFAULT_PATH_CAP: usize = 10_000_000;

/// A propagation path: a transmitter, zero or more scatterers, a receiver.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Walk(pub Vec<VertexId>);

impl Walk {
    /// Number of scatterer interactions along the path.
    pub fn bounces(&self) -> usize {
        self.0.len().saturating_sub(2)
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.0
    }
}

/// Lazy depth-first enumeration of every propagation path with at most
/// `max_bounces` interactions.
///
/// Transmitters are visited in ascending order; from each vertex the
/// successors are taken in global vertex order, so receivers come before
/// scatterers and scatterers are ascending. Paths may revisit scatterers.
pub struct Walks<'g> {
    graph: &'g PropagationGraph,
    max_bounces: usize,
    next_tx: usize,
    // (global vertex index, next successor cursor)
    stack: Vec<(usize, usize)>,
}

impl<'g> Walks<'g> {
    pub fn new(graph: &'g PropagationGraph, max_bounces: usize) -> Self {
        Self { graph, max_bounces, next_tx: 0, stack: Vec::new() }
    }
}

impl Iterator for Walks<'_> {
    type Item = Walk;

    fn next(&mut self) -> Option<Walk> {
        let g = self.graph;
        loop {
            let Some(&mut (vertex, ref mut cursor)) = self.stack.last_mut() else {
                if self.next_tx >= g.n_t() {
                    return None;
                }
                self.stack.push((self.next_tx, 0));
                self.next_tx += 1;
                continue;
            };
            let succ = g.successors(vertex);
            if *cursor >= succ.len() {
                self.stack.pop();
                continue;
            }
            let next = succ[*cursor];
            *cursor += 1;
            match g.vertex_at(next).kind {
                VertexKind::Receiver => {
                    let mut path: Vec<VertexId> = self.stack.iter().map(|&(v, _)| g.vertex_at(v)).collect();
                    path.push(g.vertex_at(next));
                    return Some(Walk(path));
                }
                VertexKind::Scatterer if self.stack.len() <= self.max_bounces => {
                    self.stack.push((next, 0));
                }
                _ => {}
            }
        }
    }
}

/// Collects every path with at most `max_bounces` interactions.
///
/// Fails with [`GraphError::ExplosionGuard`] once more than `cap` paths have
/// been produced.
pub fn enumerate_paths(graph: &PropagationGraph, max_bounces: usize, cap: usize) -> Result<Vec<Walk>, GraphError> {
    let mut out = Vec::new();
    for w in Walks::new(graph, max_bounces) {
        if out.len() == cap {
            return Err(GraphError::ExplosionGuard { cap });
        }
        out.push(w);
    }
    Ok(out)
}

/// Transfer function of a single path: the product of its edge transfer
/// functions.
pub fn path_transfer(graph: &PropagationGraph, walk: &Walk, f: f64) -> Result<C64, GraphError> {
    let v = walk.vertices();
    if v.len() < 2 {
        return Err(GraphError::InvalidWalk("a path needs at least two vertices".into()));
    }
    if v[0].kind != VertexKind::Transmitter {
        return Err(GraphError::InvalidWalk(format!("path starts at {}, not a transmitter", v[0])));
    }
    let last = v[v.len() - 1];
    if last.kind != VertexKind::Receiver {
        return Err(GraphError::InvalidWalk(format!("path ends at {last}, not a receiver")));
    }
    if let Some(inner) = v[1..v.len() - 1].iter().find(|u| u.kind != VertexKind::Scatterer) {
        return Err(GraphError::InvalidWalk(format!("inner vertex {inner} is not a scatterer")));
    }
    v.windows(2).try_fold(C64::new(1.0, 0.0), |acc, pair| {
        let e = graph
            .edge(pair[0], pair[1])
            .ok_or_else(|| GraphError::InvalidWalk(format!("no edge {} -> {}", pair[0], pair[1])))?;
        Ok(acc * e.transfer(f))
    })
}

/// Brute-force transfer matrix over all paths with `first..=last` bounces,
/// summed path by path. Entry `(r, t)` collects the paths from `Tx t` to `Rx r`.
pub fn walk_sum(
    graph: &PropagationGraph,
    f: f64,
    first: usize,
    last: usize,
    cap: usize,
) -> Result<CMatrix, GraphError> {
    let mut h = CMatrix::zeros(graph.n_r(), graph.n_t());
    for (count, w) in Walks::new(graph, last).enumerate() {
        if count == cap {
            return Err(GraphError::ExplosionGuard { cap });
        }
        if w.bounces() < first {
            continue;
        }
        let v = w.vertices();
        h[(v[v.len() - 1].index, v[0].index)] += path_transfer(graph, &w, f)?;
    }
    Ok(h)
}
