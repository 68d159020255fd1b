//! Closed-form transfer matrices of propagation graphs.
//!
//! With `B` the scatterer block, the full response is
//! `H = D + R (I - B)^-1 T`, the k-bounce term is `H_0 = D`,
//! `H_k = R B^(k-1) T`, and any band of bounce orders `K..=L` has a closed
//! form built from the same resolvent. Everything here is evaluated at a
//! single frequency.

mod kernel;
mod solver;
mod spectral;

use std::fmt;

use thiserror::Error;

use crate::graph::{AdjacencyBlocks, GraphError, PropagationGraph};
use crate::{CMatrix, CVector};

pub use kernel::{make_kernel, PrecomputedKernel, CONDITION_WARNING};
pub use solver::{transfer_solvers, ResolventSolver, SeriesSolver, TransferSolver, WalkSumSolver};
pub use spectral::{
    radius_guards, spectral_radius, ExactRadius, NormBoundRadius, RadiusEstimate, RadiusGuard, SPECTRAL_LIMIT,
};

#[derive(Debug, Error)]
pub enum TransferError {
    #[error("spectral radius {0} of B(f) is not below the accepted limit")]
    SpectralRadiusExceeded(f64),
    #[error("I - B(f) is singular")]
    SingularSystem,
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("invalid bounce range {first}:{last}")]
    InvalidRange { first: usize, last: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("{solver} cannot evaluate {range}")]
    Unsupported { solver: &'static str, range: BounceRange },
    #[error("series did not converge within {terms} terms")]
    NotConverged { terms: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Inclusive band of bounce orders `first..=last`; `last = None` is unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BounceRange {
    first: usize,
    last: Option<usize>,
}

impl BounceRange {
    pub fn new(first: usize, last: Option<usize>) -> Result<Self, TransferError> {
        match last {
            Some(l) if l < first => Err(TransferError::InvalidRange { first, last: l }),
            _ => Ok(Self { first, last }),
        }
    }

    /// All paths: `0:inf`.
    pub const fn full() -> Self {
        Self { first: 0, last: None }
    }

    /// Exactly `k` bounces.
    pub const fn exact(k: usize) -> Self {
        Self { first: k, last: Some(k) }
    }

    /// The `l`-bounce approximation `0:l`.
    pub const fn up_to(l: usize) -> Self {
        Self { first: 0, last: Some(l) }
    }

    /// Everything from `k` bounces on: `k:inf`.
    pub const fn from(k: usize) -> Self {
        Self { first: k, last: None }
    }

    pub fn first(&self) -> usize {
        self.first
    }

    pub fn last(&self) -> Option<usize> {
        self.last
    }

    pub fn is_full(&self) -> bool {
        self.first == 0 && self.last.is_none()
    }
}

impl fmt::Display for BounceRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.last {
            Some(l) => write!(f, "{}:{}", self.first, l),
            None => write!(f, "{}:inf", self.first),
        }
    }
}

/// A (partial) transfer matrix at one frequency, `N_r x N_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferSample {
    pub frequency: f64,
    pub h: CMatrix,
    pub range: BounceRange,
}

/// Applies `b` to `x` `times` times.
fn apply_power(b: &CMatrix, x: &CMatrix, times: usize) -> CMatrix {
    let mut y = x.clone();
    for _ in 0..times {
        y = b * y;
    }
    y
}

/// `H_k = R B^(k-1) T` for `k > 0`, `H_0 = D`. No convergence requirement.
pub fn k_bounce_from_blocks(blocks: &AdjacencyBlocks, k: usize) -> CMatrix {
    if k == 0 {
        blocks.d.clone()
    } else {
        &blocks.r * apply_power(&blocks.b, &blocks.t, k - 1)
    }
}

/// Adjacency blocks, factored kernel and scattered field `W = (I - B)^-1 T`
/// at one frequency. Every closed form below is an expression in these.
#[derive(Debug, Clone)]
pub struct ChannelPoint {
    blocks: AdjacencyBlocks,
    kernel: PrecomputedKernel,
    scattered: CMatrix,
}

impl ChannelPoint {
    pub fn new(graph: &PropagationGraph, f: f64, guard: &dyn RadiusGuard) -> Result<Self, TransferError> {
        Self::from_blocks(graph.adjacency_blocks(f), guard)
    }

    pub fn from_blocks(blocks: AdjacencyBlocks, guard: &dyn RadiusGuard) -> Result<Self, TransferError> {
        let kernel = PrecomputedKernel::new(blocks.b.clone(), blocks.frequency, guard)?;
        Ok(Self::with_kernel(blocks, kernel))
    }

    /// Reuses a kernel factored for the same scatterer block.
    pub fn with_kernel(blocks: AdjacencyBlocks, kernel: PrecomputedKernel) -> Self {
        debug_assert_eq!(&blocks.b, kernel.scatter(), "kernel belongs to a different scatterer block");
        let scattered = kernel.solve(&blocks.t);
        Self { blocks, kernel, scattered }
    }

    pub fn blocks(&self) -> &AdjacencyBlocks {
        &self.blocks
    }

    pub fn kernel(&self) -> &PrecomputedKernel {
        &self.kernel
    }

    /// `(I - B)^-1 T`: scatterer output per unit transmit signal.
    pub fn scattered(&self) -> &CMatrix {
        &self.scattered
    }

    pub fn frequency(&self) -> f64 {
        self.blocks.frequency
    }

    /// `H = D + R (I - B)^-1 T`.
    pub fn transfer(&self) -> CMatrix {
        &self.blocks.d + &self.blocks.r * &self.scattered
    }

    /// Closed-form `H_{K:L}`.
    pub fn partial(&self, range: BounceRange) -> CMatrix {
        let (d, r, b, w) = (&self.blocks.d, &self.blocks.r, &self.blocks.b, &self.scattered);
        let k = range.first();
        // B^(K-1) W for K >= 1; W itself stands in for the K = 0 case.
        let head = apply_power(b, w, k.saturating_sub(1));
        let inner = match range.last() {
            None => head,
            Some(l) => {
                let tail = apply_power(b, &head, l - k.saturating_sub(1));
                head - tail
            }
        };
        if k == 0 {
            d + r * inner
        } else {
            r * inner
        }
    }

    /// `H_{K:inf}`, the error of the `(K-1)`-bounce approximation.
    pub fn tail(&self, k: usize) -> CMatrix {
        self.partial(BounceRange::from(k))
    }

    pub fn k_bounce(&self, k: usize) -> CMatrix {
        k_bounce_from_blocks(&self.blocks, k)
    }

    /// Scatterer signals `Z = (I - B)^-1 T X` for transmit vector `x`.
    pub fn scatterer_signal(&self, x: &CVector) -> Result<CVector, TransferError> {
        if x.len() != self.blocks.n_t() {
            return Err(TransferError::DimensionMismatch(format!(
                "transmit vector has {} entries, graph has {} transmitters",
                x.len(),
                self.blocks.n_t()
            )));
        }
        Ok(&self.scattered * x)
    }
}

/// Full transfer matrix `H(f) = D + R (I - B)^-1 T`.
pub fn transfer_matrix(graph: &PropagationGraph, f: f64) -> Result<TransferSample, TransferError> {
    let point = ChannelPoint::new(graph, f, &ExactRadius)?;
    Ok(TransferSample { frequency: f, h: point.transfer(), range: BounceRange::full() })
}

/// Exactly-`k`-bounce contribution.
pub fn k_bounce_matrix(graph: &PropagationGraph, f: f64, k: usize) -> TransferSample {
    let blocks = graph.adjacency_blocks(f);
    TransferSample { frequency: f, h: k_bounce_from_blocks(&blocks, k), range: BounceRange::exact(k) }
}

/// Closed-form partial transfer matrix `H_{K:L}(f)`.
pub fn partial_transfer_matrix(
    graph: &PropagationGraph,
    f: f64,
    range: BounceRange,
) -> Result<TransferSample, TransferError> {
    let point = ChannelPoint::new(graph, f, &ExactRadius)?;
    Ok(TransferSample { frequency: f, h: point.partial(range), range })
}

/// Error `H_{K+1:inf}` of the `K`-bounce approximation and its Frobenius norm.
pub fn truncation_error(graph: &PropagationGraph, f: f64, k: usize) -> Result<(TransferSample, f64), TransferError> {
    let point = ChannelPoint::new(graph, f, &ExactRadius)?;
    let h = point.tail(k + 1);
    let norm = h.norm();
    Ok((TransferSample { frequency: f, h, range: BounceRange::from(k + 1) }, norm))
}

/// Scatterer output signals for transmit spectrum `x`.
pub fn scatterer_signal(graph: &PropagationGraph, f: f64, x: &CVector) -> Result<CVector, TransferError> {
    ChannelPoint::new(graph, f, &ExactRadius)?.scatterer_signal(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Edge, GainSpec, VertexId};
    use crate::testutil::{random_constant_graph, rel_close};
    use crate::C64;

    fn toy(b_gain: f64) -> PropagationGraph {
        let (t, r, s) = (VertexId::tx, VertexId::rx, VertexId::scatterer);
        let e = |a, b, g: f64, tau: f64| Edge::new(a, b, GainSpec::Constant { value: g }, 0.3, tau);
        let mut edges = vec![
            e(t(0), r(0), 0.9, 4e-9),
            e(t(0), s(0), 0.5, 2e-9),
            e(t(0), s(1), 0.4, 3e-9),
            e(s(0), r(0), 0.6, 1e-9),
            e(s(1), r(0), 0.7, 5e-9),
        ];
        if b_gain > 0.0 {
            edges.push(e(s(0), s(1), b_gain, 2.5e-9));
            edges.push(e(s(1), s(0), b_gain, 1.5e-9));
        }
        PropagationGraph::new(1, 1, 2, edges, None).unwrap()
    }

    #[test]
    fn range_validation() {
        assert!(BounceRange::new(3, Some(2)).is_err());
        assert_eq!(BounceRange::new(2, None).unwrap(), BounceRange::from(2));
        assert_eq!(BounceRange::up_to(4).to_string(), "0:4");
        assert_eq!(BounceRange::from(1).to_string(), "1:inf");
    }

    #[test]
    fn no_scatterers_gives_direct_term() {
        let e = Edge::new(VertexId::tx(0), VertexId::rx(0), GainSpec::Constant { value: 0.2 }, 1.0, 3e-9);
        let g = PropagationGraph::new(1, 1, 0, vec![e], None).unwrap();
        let f = 2.2e9;
        let h = transfer_matrix(&g, f).unwrap().h;
        assert_eq!(h, g.adjacency_blocks(f).d);
    }

    #[test]
    fn zero_scatter_block_gives_single_bounce_sum() {
        let g = toy(0.0);
        let f = 2.7e9;
        let blocks = g.adjacency_blocks(f);
        let h = transfer_matrix(&g, f).unwrap().h;
        let expected = &blocks.d + &blocks.r * &blocks.t;
        assert!((h - &expected).norm() < 1e-15);
        let h01 = partial_transfer_matrix(&g, f, BounceRange::up_to(1)).unwrap().h;
        assert!((h01 - expected).norm() < 1e-15);
    }

    #[test]
    fn low_order_partials_match_listed_forms() {
        let g = toy(0.45);
        let f = 2.1e9;
        let bl = g.adjacency_blocks(f);
        let h00 = partial_transfer_matrix(&g, f, BounceRange::up_to(0)).unwrap().h;
        assert!((h00 - &bl.d).norm() < 1e-15);
        let h02 = partial_transfer_matrix(&g, f, BounceRange::up_to(2)).unwrap().h;
        let expected = &bl.d + &bl.r * &bl.t + &bl.r * &bl.b * &bl.t;
        assert!((h02 - expected).norm() < 1e-14);
    }

    #[test]
    fn k_bounce_low_orders() {
        let g = toy(0.45);
        let f = 2.9e9;
        let bl = g.adjacency_blocks(f);
        assert_eq!(k_bounce_matrix(&g, f, 0).h, bl.d);
        assert!((k_bounce_matrix(&g, f, 1).h - &bl.r * &bl.t).norm() < 1e-16);
    }

    #[test]
    fn k_bounce_needs_no_convergence() {
        // Radius well above one: the closed forms refuse, the finite product does not.
        let g = toy(1.8);
        assert!(transfer_matrix(&g, 2e9).is_err());
        let h = k_bounce_matrix(&g, 2e9, 5).h;
        assert!(h[(0, 0)].norm().is_finite());
    }

    #[test]
    fn truncated_neumann_sum_converges_to_full() {
        let g = toy(0.5);
        let f = 2.3e9;
        let full = transfer_matrix(&g, f).unwrap().h;
        let mut sum = CMatrix::zeros(1, 1);
        for k in 0..=30 {
            sum += k_bounce_matrix(&g, f, k).h;
        }
        assert!((full - sum).norm() < 1e-9);
    }

    #[test]
    fn partial_band_matches_direct_summation() {
        let mut rng = crate::testutil::rng(17);
        let g = random_constant_graph(&mut rng, 2, 2, 4, 0.6);
        let f = 2.4e9;
        let closed = partial_transfer_matrix(&g, f, BounceRange::new(4, Some(7)).unwrap()).unwrap().h;
        let mut direct = CMatrix::zeros(2, 2);
        for k in 4..=7 {
            direct += k_bounce_matrix(&g, f, k).h;
        }
        for (a, b) in closed.iter().zip(direct.iter()) {
            assert!(rel_close(*a, *b, 1e-11, 1e-13), "{a} vs {b}");
        }
    }

    #[test]
    fn truncation_error_edge_cases() {
        let g = toy(0.0);
        let (tail, norm) = truncation_error(&g, 2e9, 1).unwrap();
        assert_eq!(norm, 0.0);
        assert_eq!(tail.range, BounceRange::from(2));

        let g = toy(0.5);
        let f = 2.6e9;
        let bl = g.adjacency_blocks(f);
        let kernel = make_kernel(&g, f).unwrap();
        let (tail0, _) = truncation_error(&g, f, 0).unwrap();
        let expected = &bl.r * kernel.solve(&bl.t);
        assert!((tail0.h - expected).norm() < 1e-15);
    }

    #[test]
    fn scatterer_signal_fixed_point() {
        let mut rng = crate::testutil::rng(5);
        let g = random_constant_graph(&mut rng, 2, 3, 4, 0.7);
        let f = 2.2e9;
        let bl = g.adjacency_blocks(f);
        let x = CVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let z = scatterer_signal(&g, f, &x).unwrap();
        let residual = &z - &bl.t * &x - &bl.b * &z;
        assert!(residual.norm() < 1e-11);
        let y = &bl.d * &x + &bl.r * &z;
        let h = transfer_matrix(&g, f).unwrap().h;
        assert!((y - h * &x).norm() < 1e-12);
    }

    #[test]
    fn scatterer_signal_trivial_cases() {
        let g = toy(0.0);
        let f = 2e9;
        let bl = g.adjacency_blocks(f);
        let x = CVector::from_vec(vec![C64::new(0.3, -0.2)]);
        let z = scatterer_signal(&g, f, &x).unwrap();
        assert!((z - &bl.t * &x).norm() < 1e-16);
        let zero = scatterer_signal(&toy(0.5), f, &CVector::zeros(1)).unwrap();
        assert_eq!(zero.norm(), 0.0);
        assert!(scatterer_signal(&g, f, &CVector::zeros(2)).is_err());
    }

    #[test]
    fn spectral_radius_exceeded_propagates() {
        let g = toy(1.8);
        assert!(matches!(
            partial_transfer_matrix(&g, 2e9, BounceRange::from(2)),
            Err(TransferError::SpectralRadiusExceeded(_))
        ));
        assert!(truncation_error(&g, 2e9, 2).is_err());
    }

    #[test]
    fn scaling_the_transmit_block_scales_indirect_part() {
        let mut rng = crate::testutil::rng(23);
        let g = random_constant_graph(&mut rng, 1, 2, 3, 0.5);
        let f = 2.5e9;
        let mut bl = g.adjacency_blocks(f);
        let base = ChannelPoint::from_blocks(bl.clone(), &ExactRadius).unwrap();
        let c = C64::new(0.3, -1.7);
        bl.t *= c;
        let scaled = ChannelPoint::from_blocks(bl.clone(), &ExactRadius).unwrap();
        let lhs = scaled.transfer() - &bl.d;
        let rhs = (base.transfer() - &bl.d) * c;
        assert!((lhs - rhs).norm() < 1e-14);
    }
}
