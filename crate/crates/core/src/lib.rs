//! Simulation of reverberant radio channels as propagation graphs.
//!
//! A propagation graph connects transmitters, scatterers and receivers by
//! edges with linear time-invariant transfer functions. Because scatterers
//! re-emit into each other, the number of propagation paths is infinite in
//! general; [`transfer`] sums all of them in closed form.
//!
//! - [`graph`]: the graph model, its adjacency blocks, reversal and a
//!   brute-force walk enumerator.
//! - [`transfer`]: full, partial and k-bounce transfer matrices.
//! - [`scenario`]: random in-room graphs with geometric gain laws.
//! - [`signal`]: frequency sampling, windowing, impulse responses and
//!   delay-power spectra.

pub mod graph;
pub mod registry;
pub mod scenario;
pub mod signal;
pub mod transfer;

#[cfg(test)]
pub(crate) mod testutil;

pub use num_complex::Complex64 as C64;

/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<C64>;
