//! Frequency sampling, windowing, impulse-response synthesis and
//! delay-power spectra.

pub mod export;
mod grid;
mod sampling;
mod spectrum;
mod synthesis;
mod window;

use thiserror::Error;

use crate::scenario::ScenarioError;
use crate::transfer::TransferError;

pub use grid::FrequencyGrid;
pub use sampling::{entry_series, sample_ranges, sample_transfer};
pub use spectrum::{
    ensemble_spectra, ensemble_spectrum, fit_tail_slope, least_squares, pairwise_sum, spatial_spectrum, AveragingKind,
    DelayPowerSpectrum, EnsembleRequest, EnsembleResult, SpatialSweep, TailFit, MIN_FIT_BINS,
};
pub use synthesis::{impulse_response, ImpulseResponse, Synthesizer};
pub use window::{hann_window, windows, Hann, Rect, Window, WindowSpectrum};

#[derive(Debug, Error)]
pub enum SignalError {
    #[error("invalid frequency grid: {0}")]
    InvalidGrid(String),
    #[error("window {0} has no nonzero samples")]
    ZeroWindow(&'static str),
    #[error("expected {expected} samples, got {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("spectral radius {radius} at sample {index} ({frequency:e} Hz) is not below one")]
    SpectralRadiusExceededAt { index: usize, frequency: f64, radius: f64 },
    #[error("{found} bins in the fit window, need {needed}")]
    InsufficientBins { found: usize, needed: usize },
    #[error("nonpositive power at {delay_ns} ns")]
    NonpositivePower { delay_ns: f64 },
    #[error("nothing to average")]
    EmptyRequest,
    #[error("run {run} (seed {seed}): {source}")]
    Run { run: usize, seed: u64, source: Box<SignalError> },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Transfer(#[from] TransferError),
}
