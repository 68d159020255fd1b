use nalgebra::{Dyn, LU};

use crate::graph::PropagationGraph;
use crate::{C64, CMatrix};

use super::spectral::{ExactRadius, RadiusEstimate, RadiusGuard, SPECTRAL_LIMIT};
use super::TransferError;

/// Above this estimated condition number of `I - B` a solve is flagged as
/// suspect. The result is still returned.
pub const CONDITION_WARNING: f64 = 1e10;

/// LU factorization of `I - B(f)`, reusable for any right-hand side and thus
/// for any transmitter or receiver placement sharing the scatterer set.
///
/// Solves go through the factors, never through an explicit inverse.
#[derive(Debug, Clone)]
pub struct PrecomputedKernel {
    frequency: f64,
    scatter: CMatrix,
    lu: Option<LU<C64, Dyn, Dyn>>,
    radius: RadiusEstimate,
    condition_estimate: f64,
}

impl PrecomputedKernel {
    /// Factors `I - b`. Fails when the guard cannot certify
    /// `rho(b) <= SPECTRAL_LIMIT`.
    pub fn new(b: CMatrix, frequency: f64, guard: &dyn RadiusGuard) -> Result<Self, TransferError> {
        let radius = guard.estimate(&b)?;
        if radius.value > SPECTRAL_LIMIT {
            return Err(TransferError::SpectralRadiusExceeded(radius.value));
        }
        let n = b.nrows();
        if n == 0 {
            return Ok(Self { frequency, scatter: b, lu: None, radius, condition_estimate: 1.0 });
        }
        let a = CMatrix::identity(n, n) - &b;
        let lu = LU::new(a.clone());
        let pivots = lu.u().diagonal().map(|z| z.norm());
        if !(pivots.min() > 0.0) || !pivots.max().is_finite() {
            return Err(TransferError::SingularSystem);
        }
        let condition_estimate = if radius.exact {
            // Diagnostic only; solves below never use this inverse.
            let inverse = lu.solve(&CMatrix::identity(n, n)).ok_or(TransferError::SingularSystem)?;
            one_norm(&a) * one_norm(&inverse)
        } else {
            // ||B|| = beta < 1 bounds cond(I - B) by (1 + beta) / (1 - beta).
            (1.0 + radius.value) / (1.0 - radius.value)
        };
        if condition_estimate > CONDITION_WARNING {
            log::warn!(
                "I - B is ill-conditioned at {:.6e} Hz (condition ~ {:.3e})",
                frequency,
                condition_estimate
            );
        }
        Ok(Self { frequency, scatter: b, lu: Some(lu), radius, condition_estimate })
    }

    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    /// The scatterer block `B(f)` this kernel was factored from.
    pub fn scatter(&self) -> &CMatrix {
        &self.scatter
    }

    /// Bound on (or value of) the spectral radius of `B(f)`.
    pub fn spectral_radius(&self) -> f64 {
        self.radius.value
    }

    pub fn radius(&self) -> RadiusEstimate {
        self.radius
    }

    pub fn condition_estimate(&self) -> f64 {
        self.condition_estimate
    }

    pub fn is_ill_conditioned(&self) -> bool {
        self.condition_estimate > CONDITION_WARNING
    }

    /// Solves `(I - B) z = rhs` column by column.
    pub fn solve(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(rhs.nrows(), self.scatter.nrows(), "right-hand side has the wrong row count");
        match &self.lu {
            None => rhs.clone(),
            Some(lu) => lu.solve(rhs).expect("pivots were checked nonzero at construction"),
        }
    }
}

fn one_norm(m: &CMatrix) -> f64 {
    m.column_iter().map(|c| c.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Kernel for `graph` at frequency `f`, certified with exact eigenvalues.
pub fn make_kernel(graph: &PropagationGraph, f: f64) -> Result<PrecomputedKernel, TransferError> {
    PrecomputedKernel::new(graph.adjacency_blocks(f).b, f, &ExactRadius)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transfer::spectral::NormBoundRadius;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn zero_block_acts_as_identity() {
        let k = PrecomputedKernel::new(CMatrix::zeros(3, 3), 1e9, &ExactRadius).unwrap();
        let t = CMatrix::from_fn(3, 2, |i, j| c(i as f64, j as f64 - 0.5));
        assert_eq!(k.solve(&t), t);
        assert_eq!(k.spectral_radius(), 0.0);
    }

    #[test]
    fn empty_scatterer_set() {
        let k = PrecomputedKernel::new(CMatrix::zeros(0, 0), 1e9, &ExactRadius).unwrap();
        assert_eq!(k.solve(&CMatrix::zeros(0, 2)).shape(), (0, 2));
    }

    #[test]
    fn rejects_radius_above_one() {
        let b = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.05, 0.0), c(1.05, 0.0), c(0.0, 0.0)]);
        match PrecomputedKernel::new(b, 1e9, &ExactRadius) {
            Err(TransferError::SpectralRadiusExceeded(r)) => assert!((r - 1.05).abs() < 1e-10),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_radius_within_safety_margin() {
        let b = CMatrix::from_row_slice(1, 1, &[c(1.0 - 1e-7, 0.0)]);
        assert!(matches!(
            PrecomputedKernel::new(b, 1e9, &NormBoundRadius),
            Err(TransferError::SpectralRadiusExceeded(_))
        ));
    }

    #[test]
    fn backward_error_is_small() {
        let b = CMatrix::from_fn(4, 4, |i, j| {
            if i == j {
                c(0.0, 0.0)
            } else {
                C64::from_polar(0.2, (i * 7 + j * 3) as f64)
            }
        });
        let k = PrecomputedKernel::new(b.clone(), 2e9, &ExactRadius).unwrap();
        let rhs = CMatrix::from_fn(4, 3, |i, j| C64::from_polar(1.0 + i as f64, j as f64));
        let z = k.solve(&rhs);
        let a = CMatrix::identity(4, 4) - &b;
        let residual = (&a * &z - &rhs).norm();
        let scale = a.norm() * z.norm() + rhs.norm();
        assert!(residual / scale < 1e-12);
    }

    #[test]
    fn flags_ill_conditioned_systems() {
        // Nilpotent, so the radius is zero, but I - B is badly conditioned.
        let b = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1e12, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let k = PrecomputedKernel::new(b, 1e9, &ExactRadius).unwrap();
        assert!(k.is_ill_conditioned());
        let well = PrecomputedKernel::new(CMatrix::from_element(2, 2, c(0.1, 0.0)), 1e9, &ExactRadius).unwrap();
        assert!(!well.is_ill_conditioned());
    }
}
