//! Propagation graphs: vertices are transmitters, receivers and scatterers,
//! edges carry linear time-invariant transfer functions.
//!
//! Vertices are laid out in a fixed global order (all transmitters, then all
//! receivers, then all scatterers). Every matrix in the crate derives its
//! indexing from that layout.

mod io;
mod walks;

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{C64, CMatrix};

pub use io::GraphDocument;
pub use walks::{enumerate_paths, path_transfer, walk_sum, Walk, Walks, DEFAULT_PATH_CAP};

/// Cartesian position in meters.
pub type Point3 = [f64; 3];

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("structural violation on edge {init} -> {term}: {reason}")]
    StructuralViolation {
        init: VertexId,
        term: VertexId,
        reason: &'static str,
    },
    #[error("vertex {0} is out of range for this graph")]
    VertexOutOfRange(VertexId),
    #[error("edge {init} -> {term}: {reason}")]
    InvalidParameter {
        init: VertexId,
        term: VertexId,
        reason: String,
    },
    #[error("edge {init} -> {term} is a {class:?} edge but carries a {law} gain law")]
    GainLawMismatch {
        init: VertexId,
        term: VertexId,
        class: EdgeClass,
        law: &'static str,
    },
    #[error("geometric gain laws require vertex positions")]
    MissingPositions,
    #[error("expected {expected} vertex positions, found {found}")]
    PositionCount { expected: usize, found: usize },
    #[error("walk enumeration exceeded the cap of {cap} paths")]
    ExplosionGuard { cap: usize },
    #[error("invalid walk: {0}")]
    InvalidWalk(String),
    #[error("malformed graph document: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VertexKind {
    Transmitter,
    Receiver,
    Scatterer,
}

/// A vertex addressed by its kind and zero-based index within that kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VertexId {
    pub kind: VertexKind,
    pub index: usize,
}

impl VertexId {
    pub const fn tx(index: usize) -> Self {
        Self { kind: VertexKind::Transmitter, index }
    }

    pub const fn rx(index: usize) -> Self {
        Self { kind: VertexKind::Receiver, index }
    }

    pub const fn scatterer(index: usize) -> Self {
        Self { kind: VertexKind::Scatterer, index }
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.kind {
            VertexKind::Transmitter => "Tx",
            VertexKind::Receiver => "Rx",
            VertexKind::Scatterer => "S",
        };
        write!(f, "{}{}", prefix, self.index + 1)
    }
}

/// The four disjoint edge sets of a propagation graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeClass {
    /// Transmitter to receiver.
    Direct,
    /// Transmitter to scatterer.
    TxScatter,
    /// Scatterer to receiver.
    ScatterRx,
    /// Scatterer to scatterer.
    InterScatter,
}

/// Amplitude law of an edge.
///
/// The geometric laws carry the class-level quantities they depend on
/// (mean delay, inverse-square delay sum, fan-out), so that evaluating a
/// gain only needs the edge's own delay and the frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum GainSpec {
    /// Frequency-flat gain.
    Constant { value: f64 },
    /// Free-space Friis law, `g^2 = 1 / (4 pi f tau)^2`.
    Direct,
    /// `g^2 = 1 / (4 pi f mu) * tau^-2 / S` over the transmitter-scatterer class.
    TxScatter { mean_delay_s: f64, inv_sq_delay_sum: f64 },
    /// Same law as [`GainSpec::TxScatter`], over the scatterer-receiver class.
    ScatterRx { mean_delay_s: f64, inv_sq_delay_sum: f64 },
    /// `g / odi`, where `odi` counts the initial scatterer's edges to other scatterers.
    InterScatter { gain: f64, out_degree: usize },
}

impl GainSpec {
    /// Amplitude gain at frequency `f` for an edge with propagation delay `delay`.
    pub fn amplitude(&self, f: f64, delay: f64) -> f64 {
        match *self {
            GainSpec::Constant { value } => value,
            GainSpec::Direct => 1.0 / (4.0 * PI * f * delay),
            GainSpec::TxScatter { mean_delay_s, inv_sq_delay_sum }
            | GainSpec::ScatterRx { mean_delay_s, inv_sq_delay_sum } => {
                let power = 1.0 / (4.0 * PI * f * mean_delay_s) * (delay.powi(-2) / inv_sq_delay_sum);
                power.sqrt()
            }
            GainSpec::InterScatter { gain, out_degree } => gain / out_degree as f64,
        }
    }

    /// The edge class a geometric law belongs to; `None` for constant gains.
    pub fn law_class(&self) -> Option<EdgeClass> {
        match self {
            GainSpec::Constant { .. } => None,
            GainSpec::Direct => Some(EdgeClass::Direct),
            GainSpec::TxScatter { .. } => Some(EdgeClass::TxScatter),
            GainSpec::ScatterRx { .. } => Some(EdgeClass::ScatterRx),
            GainSpec::InterScatter { .. } => Some(EdgeClass::InterScatter),
        }
    }

    fn law_name(&self) -> &'static str {
        match self {
            GainSpec::Constant { .. } => "constant",
            GainSpec::Direct => "direct",
            GainSpec::TxScatter { .. } => "tx_scatter",
            GainSpec::ScatterRx { .. } => "scatter_rx",
            GainSpec::InterScatter { .. } => "inter_scatter",
        }
    }

    /// The law as seen from the reverse graph.
    fn reversed(self) -> Self {
        match self {
            GainSpec::TxScatter { mean_delay_s, inv_sq_delay_sum } => GainSpec::ScatterRx {
                mean_delay_s,
                inv_sq_delay_sum,
            },
            GainSpec::ScatterRx { mean_delay_s, inv_sq_delay_sum } => GainSpec::TxScatter {
                mean_delay_s,
                inv_sq_delay_sum,
            },
            other => other,
        }
    }

    fn check(&self) -> Result<(), String> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(format!("{name} must be finite and positive, got {v}"))
            }
        };
        match *self {
            GainSpec::Constant { value } if !(value.is_finite() && value >= 0.0) => {
                Err(format!("constant gain must be finite and nonnegative, got {value}"))
            }
            GainSpec::Constant { .. } | GainSpec::Direct => Ok(()),
            GainSpec::TxScatter { mean_delay_s, inv_sq_delay_sum }
            | GainSpec::ScatterRx { mean_delay_s, inv_sq_delay_sum } => {
                positive("mean delay", mean_delay_s)?;
                positive("inverse-square delay sum", inv_sq_delay_sum)
            }
            GainSpec::InterScatter { gain, out_degree } => {
                if out_degree == 0 {
                    return Err("inter-scatterer out-degree must be at least one".into());
                }
                if gain.is_finite() && gain >= 0.0 {
                    Ok(())
                } else {
                    Err(format!("inter-scatterer gain must be finite and nonnegative, got {gain}"))
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub init: VertexId,
    pub term: VertexId,
    pub gain: GainSpec,
    /// Radians in `[0, 2 pi)`.
    pub phase: f64,
    /// Seconds.
    pub delay: f64,
}

impl Edge {
    pub fn new(init: VertexId, term: VertexId, gain: GainSpec, phase: f64, delay: f64) -> Self {
        Self { init, term, gain, phase, delay }
    }

    /// `A_e(f) = g_e(f) exp(j(phi_e - 2 pi tau_e f))`.
    pub fn transfer(&self, f: f64) -> C64 {
        let g = self.gain.amplitude(f, self.delay);
        C64::from_polar(g, self.phase - TAU * self.delay * f)
    }

    /// Edge class implied by the endpoint kinds, or `None` for a structurally
    /// forbidden pair.
    pub fn class(&self) -> Option<EdgeClass> {
        classify(self.init, self.term)
    }
}

fn classify(init: VertexId, term: VertexId) -> Option<EdgeClass> {
    use VertexKind::*;
    match (init.kind, term.kind) {
        (Transmitter, Receiver) => Some(EdgeClass::Direct),
        (Transmitter, Scatterer) => Some(EdgeClass::TxScatter),
        (Scatterer, Receiver) => Some(EdgeClass::ScatterRx),
        (Scatterer, Scatterer) => Some(EdgeClass::InterScatter),
        _ => None,
    }
}

/// An immutable, validated propagation graph.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationGraph {
    n_t: usize,
    n_r: usize,
    n_s: usize,
    edges: Vec<Edge>,
    positions: Option<Vec<Point3>>,
    lookup: HashMap<(VertexId, VertexId), usize>,
    /// Out-neighbours of every vertex, as global vertex indices in ascending order.
    successors: Vec<Vec<usize>>,
}

impl PropagationGraph {
    /// Validates and builds a graph.
    ///
    /// `positions`, when given, lists one point per vertex in global vertex
    /// order (transmitters, receivers, scatterers).
    pub fn new(
        n_t: usize,
        n_r: usize,
        n_s: usize,
        edges: Vec<Edge>,
        positions: Option<Vec<Point3>>,
    ) -> Result<Self, GraphError> {
        if let Some(p) = &positions {
            let expected = n_t + n_r + n_s;
            if p.len() != expected {
                return Err(GraphError::PositionCount { expected, found: p.len() });
            }
        }

        let mut lookup = HashMap::with_capacity(edges.len());
        let total = n_t + n_r + n_s;
        let mut successors = vec![Vec::new(); total];
        let needs_positions = edges.iter().any(|e| e.gain.law_class().is_some());
        if needs_positions && positions.is_none() {
            return Err(GraphError::MissingPositions);
        }

        for (i, e) in edges.iter().enumerate() {
            for v in [e.init, e.term] {
                let count = match v.kind {
                    VertexKind::Transmitter => n_t,
                    VertexKind::Receiver => n_r,
                    VertexKind::Scatterer => n_s,
                };
                if v.index >= count {
                    return Err(GraphError::VertexOutOfRange(v));
                }
            }
            let violation = |reason| GraphError::StructuralViolation { init: e.init, term: e.term, reason };
            if e.init.kind == VertexKind::Receiver {
                return Err(violation("receivers have no outgoing edges"));
            }
            if e.term.kind == VertexKind::Transmitter {
                return Err(violation("transmitters have no ingoing edges"));
            }
            let class = e.class().expect("endpoint kinds checked above");
            let invalid = |reason: String| GraphError::InvalidParameter { init: e.init, term: e.term, reason };
            if !(e.delay.is_finite() && e.delay >= 0.0) {
                return Err(invalid(format!("delay must be finite and nonnegative, got {}", e.delay)));
            }
            if !(e.phase.is_finite() && (0.0..TAU).contains(&e.phase)) {
                return Err(invalid(format!("phase must lie in [0, 2pi), got {}", e.phase)));
            }
            e.gain.check().map_err(invalid)?;
            if let Some(law) = e.gain.law_class() {
                if law != class {
                    return Err(GraphError::GainLawMismatch {
                        init: e.init,
                        term: e.term,
                        class,
                        law: e.gain.law_name(),
                    });
                }
                if e.delay == 0.0 && law != EdgeClass::InterScatter {
                    return Err(invalid("geometric gain laws need a positive delay".into()));
                }
            }
            if lookup.insert((e.init, e.term), i).is_some() {
                return Err(violation("parallel edges are not allowed"));
            }
            let (a, b) = (global_index(n_t, n_r, e.init), global_index(n_t, n_r, e.term));
            successors[a].push(b);
        }
        for s in &mut successors {
            s.sort_unstable();
        }

        Ok(Self { n_t, n_r, n_s, edges, positions, lookup, successors })
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    pub fn n_s(&self) -> usize {
        self.n_s
    }

    pub fn vertex_count(&self) -> usize {
        self.n_t + self.n_r + self.n_s
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn positions(&self) -> Option<&[Point3]> {
        self.positions.as_deref()
    }

    pub fn position(&self, v: VertexId) -> Option<Point3> {
        self.positions.as_ref().map(|p| p[self.index_of(v)])
    }

    pub fn edge(&self, init: VertexId, term: VertexId) -> Option<&Edge> {
        self.lookup.get(&(init, term)).map(|&i| &self.edges[i])
    }

    /// Edges of one class, in insertion order.
    pub fn edges_in(&self, class: EdgeClass) -> impl Iterator<Item = &Edge> + '_ {
        self.edges.iter().filter(move |e| e.class() == Some(class))
    }

    pub fn class_size(&self, class: EdgeClass) -> usize {
        self.edges_in(class).count()
    }

    /// Global index of `v` in the transmitter/receiver/scatterer layout.
    pub fn index_of(&self, v: VertexId) -> usize {
        global_index(self.n_t, self.n_r, v)
    }

    /// Inverse of [`PropagationGraph::index_of`].
    pub fn vertex_at(&self, index: usize) -> VertexId {
        if index < self.n_t {
            VertexId::tx(index)
        } else if index < self.n_t + self.n_r {
            VertexId::rx(index - self.n_t)
        } else {
            VertexId::scatterer(index - self.n_t - self.n_r)
        }
    }

    pub(crate) fn successors(&self, index: usize) -> &[usize] {
        &self.successors[index]
    }

    /// Evaluates the four adjacency blocks at frequency `f`.
    pub fn adjacency_blocks(&self, f: f64) -> AdjacencyBlocks {
        let mut blocks = AdjacencyBlocks::zeros(self.n_t, self.n_r, self.n_s, f);
        for e in &self.edges {
            let a = e.transfer(f);
            let (i, j) = (e.init.index, e.term.index);
            match e.class().expect("validated at construction") {
                EdgeClass::Direct => blocks.d[(j, i)] = a,
                EdgeClass::TxScatter => blocks.t[(j, i)] = a,
                EdgeClass::ScatterRx => blocks.r[(j, i)] = a,
                EdgeClass::InterScatter => blocks.b[(j, i)] = a,
            }
        }
        blocks
    }

    /// Only the receiver-side blocks `(D, R)` at frequency `f`.
    pub fn receiver_blocks(&self, f: f64) -> (CMatrix, CMatrix) {
        let mut d = CMatrix::zeros(self.n_r, self.n_t);
        let mut r = CMatrix::zeros(self.n_r, self.n_s);
        for e in &self.edges {
            match e.class() {
                Some(EdgeClass::Direct) => d[(e.term.index, e.init.index)] = e.transfer(f),
                Some(EdgeClass::ScatterRx) => r[(e.term.index, e.init.index)] = e.transfer(f),
                _ => {}
            }
        }
        (d, r)
    }

    /// The reverse graph: transmitters and receivers swap roles and every edge
    /// is reversed with the same gain, phase and delay.
    pub fn reverse(&self) -> PropagationGraph {
        let swap = |v: VertexId| match v.kind {
            VertexKind::Transmitter => VertexId::rx(v.index),
            VertexKind::Receiver => VertexId::tx(v.index),
            VertexKind::Scatterer => v,
        };
        let edges = self
            .edges
            .iter()
            .map(|e| Edge {
                init: swap(e.term),
                term: swap(e.init),
                gain: e.gain.reversed(),
                phase: e.phase,
                delay: e.delay,
            })
            .collect();
        let positions = self.positions.as_ref().map(|p| {
            let (tx, rest) = p.split_at(self.n_t);
            let (rx, s) = rest.split_at(self.n_r);
            rx.iter().chain(tx).chain(s).copied().collect()
        });
        PropagationGraph::new(self.n_r, self.n_t, self.n_s, edges, positions)
            .expect("reversal preserves validity")
    }
}

fn global_index(n_t: usize, n_r: usize, v: VertexId) -> usize {
    match v.kind {
        VertexKind::Transmitter => v.index,
        VertexKind::Receiver => n_t + v.index,
        VertexKind::Scatterer => n_t + n_r + v.index,
    }
}

/// Convenience constructor mirroring [`PropagationGraph::new`].
pub fn build_graph(
    n_t: usize,
    n_r: usize,
    n_s: usize,
    edges: Vec<Edge>,
    positions: Option<Vec<Point3>>,
) -> Result<PropagationGraph, GraphError> {
    PropagationGraph::new(n_t, n_r, n_s, edges, positions)
}

/// The frequency-dependent blocks of the weighted adjacency matrix.
///
/// Entries are indexed `(term, init)`: `d` is `N_r x N_t`, `r` is
/// `N_r x N_s`, `t` is `N_s x N_t` and `b` is `N_s x N_s`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyBlocks {
    pub d: CMatrix,
    pub r: CMatrix,
    pub t: CMatrix,
    pub b: CMatrix,
    pub frequency: f64,
}

impl AdjacencyBlocks {
    pub fn zeros(n_t: usize, n_r: usize, n_s: usize, frequency: f64) -> Self {
        Self {
            d: DMatrix::zeros(n_r, n_t),
            r: DMatrix::zeros(n_r, n_s),
            t: DMatrix::zeros(n_s, n_t),
            b: DMatrix::zeros(n_s, n_s),
            frequency,
        }
    }

    pub fn n_t(&self) -> usize {
        self.d.ncols()
    }

    pub fn n_r(&self) -> usize {
        self.d.nrows()
    }

    pub fn n_s(&self) -> usize {
        self.b.nrows()
    }

    /// The full square adjacency matrix in block form
    /// `[[0, 0, 0], [D, 0, R], [T, 0, B]]`.
    pub fn assemble(&self) -> CMatrix {
        let (n_t, n_r, n_s) = (self.n_t(), self.n_r(), self.n_s());
        let n = n_t + n_r + n_s;
        let mut a = CMatrix::zeros(n, n);
        a.view_mut((n_t, 0), (n_r, n_t)).copy_from(&self.d);
        a.view_mut((n_t, n_t + n_r), (n_r, n_s)).copy_from(&self.r);
        a.view_mut((n_t + n_r, 0), (n_s, n_t)).copy_from(&self.t);
        a.view_mut((n_t + n_r, n_t + n_r), (n_s, n_s)).copy_from(&self.b);
        a
    }
}
