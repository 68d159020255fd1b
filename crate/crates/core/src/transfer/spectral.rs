//! Spectral radius of the scatterer block and the guards that enforce the
//! convergence condition of the Neumann series.

use crate::registry::{Named, Registry};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::{C64, CMatrix, CVector};

use super::TransferError;

/// Largest accepted spectral radius. Values in `(SPECTRAL_LIMIT, 1)` converge
/// in theory but leave `I - B` too ill-conditioned to trust.
pub const SPECTRAL_LIMIT: f64 = 1.0 - 1e-6;

const SCHUR_EPS: f64 = 1e-14;
const SCHUR_MAX_ITER: usize = 10_000;

/// `max |lambda|` over the eigenvalues of a square complex matrix.
///
/// The eigenvalues of `B` are those of the diagonal blocks of its strongly
/// connected components, so acyclic parts contribute nothing and only the
/// cyclic components go through a complex Schur decomposition. This also
/// keeps nilpotent structure, on which the Schur iteration can stall, out of
/// the eigensolver.
pub fn spectral_radius(b: &CMatrix) -> Result<f64, TransferError> {
    if !b.is_square() {
        return Err(TransferError::DimensionMismatch(format!(
            "spectral radius of a {}x{} matrix",
            b.nrows(),
            b.ncols()
        )));
    }
    let n = b.nrows();
    let mut support: DiGraph<(), ()> = DiGraph::with_capacity(n, n);
    let nodes: Vec<_> = (0..n).map(|_| support.add_node(())).collect();
    for j in 0..n {
        for i in 0..n {
            if b[(i, j)] != C64::new(0.0, 0.0) {
                support.add_edge(nodes[j], nodes[i], ());
            }
        }
    }
    let mut radius: f64 = 0.0;
    for component in tarjan_scc(&support) {
        let idx: Vec<usize> = component.iter().map(|v| v.index()).collect();
        let r = match idx.as_slice() {
            [i] => b[(*i, *i)].norm(),
            _ => block_radius(&b.select_rows(&idx).select_columns(&idx))?,
        };
        radius = radius.max(r);
    }
    Ok(radius)
}

fn block_radius(block: &CMatrix) -> Result<f64, TransferError> {
    if let Some(schur) = block.clone().try_schur(SCHUR_EPS, SCHUR_MAX_ITER) {
        return Ok(schur_radius(schur));
    }
    // A unitary similarity leaves the eigenvalues alone but changes the
    // iterates; it usually breaks a stalled shift sequence.
    let n = block.nrows();
    for attempt in 1..=3u32 {
        let v = CVector::from_fn(n, |i, _| C64::from_polar(1.0, 0.7 * attempt as f64 * (i as f64 + 1.0).sqrt()));
        let v = v.normalize();
        let h = CMatrix::identity(n, n) - (&v * v.adjoint()) * C64::new(2.0, 0.0);
        if let Some(schur) = (&h * block * &h).try_schur(SCHUR_EPS, SCHUR_MAX_ITER) {
            return Ok(schur_radius(schur));
        }
    }
    Err(TransferError::NumericalFailure("Schur iteration did not converge".into()))
}

fn schur_radius(schur: nalgebra::linalg::Schur<C64, nalgebra::Dyn>) -> f64 {
    let (_, t) = schur.unpack();
    t.diagonal().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Induced 1-norm (max column sum) and infinity-norm (max row sum).
fn induced_norms(b: &CMatrix) -> (f64, f64) {
    let one = b.column_iter().map(|c| c.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max);
    let inf = b.row_iter().map(|r| r.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max);
    (one, inf)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiusEstimate {
    /// An upper bound on the spectral radius; the radius itself when `exact`.
    pub value: f64,
    pub exact: bool,
}

/// Strategy for certifying `rho(B) <= SPECTRAL_LIMIT`.
pub trait RadiusGuard: Named + Send + Sync {
    fn estimate(&self, b: &CMatrix) -> Result<RadiusEstimate, TransferError>;
}

/// Always computes the eigenvalues.
#[derive(Debug, Default, Clone, Copy)]
pub struct ExactRadius;

impl Named for ExactRadius {
    fn name(&self) -> &'static str {
        "exact"
    }
}

impl RadiusGuard for ExactRadius {
    fn estimate(&self, b: &CMatrix) -> Result<RadiusEstimate, TransferError> {
        Ok(RadiusEstimate { value: spectral_radius(b)?, exact: true })
    }
}

/// Uses `min(||B||_1, ||B||_inf)` as a certificate and only falls back to
/// the eigenvalues when that bound is inconclusive.
///
/// With fan-out normalized inter-scatterer gains every column of `B` sums to
/// `g`, so the bound settles almost every frequency sample without an
/// eigensolve.
#[derive(Debug, Default, Clone, Copy)]
pub struct NormBoundRadius;

impl Named for NormBoundRadius {
    fn name(&self) -> &'static str {
        "norm-bound"
    }
}

impl RadiusGuard for NormBoundRadius {
    fn estimate(&self, b: &CMatrix) -> Result<RadiusEstimate, TransferError> {
        let (one, inf) = induced_norms(b);
        let bound = one.min(inf);
        if bound <= SPECTRAL_LIMIT {
            Ok(RadiusEstimate { value: bound, exact: false })
        } else {
            ExactRadius.estimate(b)
        }
    }
}

pub fn radius_guards() -> Registry<dyn RadiusGuard> {
    let mut reg: Registry<dyn RadiusGuard> = Registry::new();
    reg.register(Box::new(ExactRadius)).register(Box::new(NormBoundRadius));
    reg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn zero_matrix() {
        assert_eq!(spectral_radius(&CMatrix::zeros(1, 1)).unwrap(), 0.0);
        assert_eq!(spectral_radius(&CMatrix::zeros(0, 0)).unwrap(), 0.0);
    }

    #[test]
    fn swap_matrix_has_radius_b() {
        let b = 0.37;
        let m = CMatrix::from_row_slice(2, 2, &[c(0.0), c(b), c(b), c(0.0)]);
        assert!((spectral_radius(&m).unwrap() - b).abs() < 1e-10);
    }

    #[test]
    fn complex_rotation() {
        // Eigenvalues of [[0, -a], [a, 0]] are +-ja.
        let a = 0.8;
        let m = CMatrix::from_row_slice(2, 2, &[c(0.0), c(-a), c(a), c(0.0)]);
        assert!((spectral_radius(&m).unwrap() - a).abs() < 1e-10);
    }

    #[test]
    fn non_square_is_rejected() {
        assert!(spectral_radius(&CMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn norm_bound_dominates_radius() {
        let m = CMatrix::from_row_slice(
            3,
            3,
            &[c(0.0), C64::new(0.1, 0.2), c(0.3), c(0.2), c(0.0), C64::new(0.0, -0.25), c(0.1), c(0.1), c(0.0)],
        );
        let exact = ExactRadius.estimate(&m).unwrap();
        let bound = NormBoundRadius.estimate(&m).unwrap();
        assert!(exact.exact && !bound.exact);
        assert!(bound.value >= exact.value);
    }

    #[test]
    fn norm_bound_falls_back_when_inconclusive() {
        // Nilpotent: norm 5, radius 0.
        let m = CMatrix::from_row_slice(2, 2, &[c(0.0), c(5.0), c(0.0), c(0.0)]);
        let est = NormBoundRadius.estimate(&m).unwrap();
        assert!(est.exact);
        assert!(est.value < 1e-12);
    }

    #[test]
    fn nilpotent_and_triangular_blocks() {
        let mut m = CMatrix::zeros(5, 5);
        m[(1, 0)] = C64::new(0.3, 0.4);
        m[(2, 1)] = C64::new(-0.2, 0.1);
        m[(4, 2)] = C64::new(0.6, 0.0);
        assert_eq!(spectral_radius(&m).unwrap(), 0.0);
        m[(3, 3)] = C64::new(0.0, 0.45);
        assert_eq!(spectral_radius(&m).unwrap(), 0.45);
        // A 2-cycle between 0 and 1 with product 0.3 * 0.5.
        m[(0, 1)] = C64::new(0.3, 0.0);
        m[(1, 0)] = C64::new(0.5, 0.0);
        m[(3, 3)] = C64::new(0.0, 0.0);
        assert!((spectral_radius(&m).unwrap() - 0.15f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn registry_contents() {
        assert_eq!(radius_guards().names(), vec!["exact", "norm-bound"]);
    }
}
