use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

use crate::graph::{Edge, GainSpec, PropagationGraph, VertexId};
use crate::C64;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `|a - b| <= rel * max(|a|, |b|)` or `|a - b| <= abs`.
pub fn rel_close(a: C64, b: C64, rel: f64, abs: f64) -> bool {
    let diff = (a - b).norm();
    diff <= abs || diff <= rel * a.norm().max(b.norm())
}

/// Random graph with constant gains. Every admissible edge (scatterer
/// self-loops included) is present with probability 0.7; inter-scatterer
/// gains are rescaled so that `||B||_1 = norm_bound`, which bounds the
/// spectral radius at every frequency.
pub fn random_constant_graph(rng: &mut impl Rng, n_t: usize, n_r: usize, n_s: usize, norm_bound: f64) -> PropagationGraph {
    let mut pairs = Vec::new();
    for t in 0..n_t {
        for r in 0..n_r {
            pairs.push((VertexId::tx(t), VertexId::rx(r)));
        }
        for s in 0..n_s {
            pairs.push((VertexId::tx(t), VertexId::scatterer(s)));
        }
    }
    for s in 0..n_s {
        for s2 in 0..n_s {
            pairs.push((VertexId::scatterer(s), VertexId::scatterer(s2)));
        }
        for r in 0..n_r {
            pairs.push((VertexId::scatterer(s), VertexId::rx(r)));
        }
    }
    let mut edges: Vec<Edge> = Vec::new();
    for (a, b) in pairs {
        if rng.random::<f64>() < 0.7 {
            let g = rng.random_range(0.1..1.0);
            edges.push(Edge::new(a, b, GainSpec::Constant { value: g }, rng.random_range(0.0..TAU), rng.random_range(1e-9..3e-8)));
        }
    }
    let mut col = vec![0.0; n_s];
    for e in &edges {
        if let (VertexId { index: i, .. }, true) = (e.init, e.class() == Some(crate::graph::EdgeClass::InterScatter)) {
            if let GainSpec::Constant { value } = e.gain {
                col[i] += value;
            }
        }
    }
    let max_col = col.iter().cloned().fold(0.0, f64::max);
    if max_col > 0.0 {
        let scale = norm_bound / max_col;
        for e in &mut edges {
            if e.class() == Some(crate::graph::EdgeClass::InterScatter) {
                if let GainSpec::Constant { value } = &mut e.gain {
                    *value *= scale;
                }
            }
        }
    }
    PropagationGraph::new(n_t, n_r, n_s, edges, None).expect("random graph is valid")
}
