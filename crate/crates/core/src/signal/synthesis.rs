use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::C64;

use super::{FrequencyGrid, SignalError, WindowSpectrum};

/// Received signal `y(i dtau)`, `i = 0..M`, for one transmitter-receiver pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseResponse {
    pub samples: Vec<C64>,
    pub grid: FrequencyGrid,
}

impl ImpulseResponse {
    pub fn dtau(&self) -> f64 {
        self.grid.dtau()
    }

    pub fn delays(&self) -> Vec<f64> {
        self.grid.delays()
    }

    pub fn power(&self) -> Vec<f64> {
        self.samples.iter().map(|y| y.norm_sqr()).collect()
    }
}

/// Inverse transform `y(i) = df * sum_m H[m] X[m] exp(j 2 pi i m / M)` with
/// a cached FFT plan.
#[derive(Clone)]
pub struct Synthesizer {
    window: WindowSpectrum,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Synthesizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Synthesizer").field("window", &self.window.name()).field("grid", self.window.grid()).finish()
    }
}

impl Synthesizer {
    pub fn new(window: WindowSpectrum) -> Self {
        let fft = FftPlanner::new().plan_fft_inverse(window.grid().len());
        Self { window, fft }
    }

    pub fn window(&self) -> &WindowSpectrum {
        &self.window
    }

    pub fn grid(&self) -> &FrequencyGrid {
        self.window.grid()
    }

    /// Writes `y` into `buffer`; `h` holds one transfer value per grid sample.
    pub fn synthesize_into(&self, h: &[C64], buffer: &mut Vec<C64>) -> Result<(), SignalError> {
        let x = self.window.samples();
        if h.len() != x.len() {
            return Err(SignalError::LengthMismatch { expected: x.len(), found: h.len() });
        }
        let df = self.grid().df();
        buffer.clear();
        buffer.extend(h.iter().zip(x).map(|(h, x)| h * (x * df)));
        self.fft.process(buffer);
        Ok(())
    }

    pub fn synthesize(&self, h: &[C64]) -> Result<ImpulseResponse, SignalError> {
        let mut samples = Vec::with_capacity(h.len());
        self.synthesize_into(h, &mut samples)?;
        Ok(ImpulseResponse { samples, grid: *self.grid() })
    }

    /// Adds `|y(i)|^2` to `acc`.
    pub fn accumulate_power(&self, h: &[C64], buffer: &mut Vec<C64>, acc: &mut [f64]) -> Result<(), SignalError> {
        self.synthesize_into(h, buffer)?;
        acc.iter_mut().zip(buffer.iter()).for_each(|(a, y)| *a += y.norm_sqr());
        Ok(())
    }
}

/// One-shot synthesis; see [`Synthesizer`] for repeated use.
pub fn impulse_response(h: &[C64], window: &WindowSpectrum) -> Result<ImpulseResponse, SignalError> {
    Synthesizer::new(window.clone()).synthesize(h)
}
