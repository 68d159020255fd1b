//! Interchangeable ways of evaluating a partial transfer matrix.

use crate::graph::{walk_sum, PropagationGraph, DEFAULT_PATH_CAP};
use crate::registry::{Named, Registry};
use crate::CMatrix;

use super::{k_bounce_from_blocks, BounceRange, ChannelPoint, ExactRadius, RadiusGuard, TransferError, SPECTRAL_LIMIT};

pub trait TransferSolver: Named + Send + Sync {
    /// `H_{K:L}(f)` for `graph`.
    fn partial(&self, graph: &PropagationGraph, f: f64, range: BounceRange) -> Result<CMatrix, TransferError>;
}

/// Closed form through the factored resolvent.
#[derive(Debug, Default, Clone, Copy)]
pub struct ResolventSolver;

impl Named for ResolventSolver {
    fn name(&self) -> &'static str {
        "resolvent"
    }
}

impl TransferSolver for ResolventSolver {
    fn partial(&self, graph: &PropagationGraph, f: f64, range: BounceRange) -> Result<CMatrix, TransferError> {
        Ok(ChannelPoint::new(graph, f, &ExactRadius)?.partial(range))
    }
}

/// Term-by-term summation of `H_k`. Unbounded ranges are summed until the
/// next term is negligible relative to the running sum.
#[derive(Debug, Clone, Copy)]
pub struct SeriesSolver {
    pub max_terms: usize,
    pub rel_tol: f64,
}

impl Default for SeriesSolver {
    fn default() -> Self {
        Self { max_terms: 100_000, rel_tol: 1e-16 }
    }
}

impl Named for SeriesSolver {
    fn name(&self) -> &'static str {
        "series"
    }
}

impl TransferSolver for SeriesSolver {
    fn partial(&self, graph: &PropagationGraph, f: f64, range: BounceRange) -> Result<CMatrix, TransferError> {
        let blocks = graph.adjacency_blocks(f);
        if let Some(last) = range.last() {
            return Ok((range.first()..=last).fold(CMatrix::zeros(blocks.n_r(), blocks.n_t()), |acc, k| {
                acc + k_bounce_from_blocks(&blocks, k)
            }));
        }
        let radius = ExactRadius.estimate(&blocks.b)?;
        if radius.value > SPECTRAL_LIMIT {
            return Err(TransferError::SpectralRadiusExceeded(radius.value));
        }
        let k0 = range.first();
        let mut sum = if k0 == 0 { blocks.d.clone() } else { CMatrix::zeros(blocks.n_r(), blocks.n_t()) };
        // B^(k-1) T for the current order k >= 1.
        let mut propagated = blocks.t.clone();
        for _ in 1..k0 {
            propagated = &blocks.b * propagated;
        }
        let mut quiet = 0;
        for _ in 0..self.max_terms {
            let term = &blocks.r * &propagated;
            sum += &term;
            let (t, s) = (term.norm(), sum.norm());
            // Several negligible terms in a row guard against a transient dip.
            if t <= self.rel_tol * s || t == 0.0 {
                quiet += 1;
                if quiet == 8 {
                    return Ok(sum);
                }
            } else {
                quiet = 0;
            }
            propagated = &blocks.b * propagated;
        }
        Err(TransferError::NotConverged { terms: self.max_terms })
    }
}

/// Brute-force sum over enumerated walks. Bounded ranges only.
#[derive(Debug, Clone, Copy)]
pub struct WalkSumSolver {
    pub cap: usize,
}

impl Default for WalkSumSolver {
    fn default() -> Self {
        Self { cap: DEFAULT_PATH_CAP }
    }
}

impl Named for WalkSumSolver {
    fn name(&self) -> &'static str {
        "walk-sum"
    }
}

impl TransferSolver for WalkSumSolver {
    fn partial(&self, graph: &PropagationGraph, f: f64, range: BounceRange) -> Result<CMatrix, TransferError> {
        let last = range.last().ok_or(TransferError::Unsupported { solver: self.name(), range })?;
        Ok(walk_sum(graph, f, range.first(), last, self.cap)?)
    }
}

pub fn transfer_solvers() -> Registry<dyn TransferSolver> {
    let mut reg: Registry<dyn TransferSolver> = Registry::new();
    reg.register(Box::new(ResolventSolver))
        .register(Box::new(SeriesSolver::default()))
        .register(Box::new(WalkSumSolver::default()));
    reg
}
