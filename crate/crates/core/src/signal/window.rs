use std::f64::consts::TAU;

use crate::registry::{Named, Registry};

use super::{FrequencyGrid, SignalError};

/// Taper shape over `M` frequency samples, before power normalization.
pub trait Window: Named + Send + Sync {
    fn shape(&self, m: usize) -> Vec<f64>;
}

/// Raised cosine with zero endpoints. Two samples have no interior, so that
/// case degrades to a flat window.
#[derive(Debug, Default, Clone, Copy)]
pub struct Hann;

impl Named for Hann {
    fn name(&self) -> &'static str {
        "hann"
    }
}

impl Window for Hann {
    fn shape(&self, m: usize) -> Vec<f64> {
        if m <= 2 {
            return vec![1.0; m];
        }
        let denom = (m - 1) as f64;
        (0..m).map(|i| 0.5 * (1.0 - (TAU * i as f64 / denom).cos())).collect()
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct Rect;

impl Named for Rect {
    fn name(&self) -> &'static str {
        "rect"
    }
}

impl Window for Rect {
    fn shape(&self, m: usize) -> Vec<f64> {
        vec![1.0; m]
    }
}

pub fn windows() -> Registry<dyn Window> {
    let mut reg: Registry<dyn Window> = Registry::new();
    reg.register(Box::new(Hann)).register(Box::new(Rect));
    reg
}

/// Transmit spectrum `X[m]` on a grid, scaled to `sum |X[m]|^2 df = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSpectrum {
    name: &'static str,
    samples: Vec<f64>,
    grid: FrequencyGrid,
}

impl WindowSpectrum {
    pub fn new(window: &dyn Window, grid: FrequencyGrid) -> Result<Self, SignalError> {
        let mut samples = window.shape(grid.len());
        let energy: f64 = samples.iter().map(|x| x * x).sum::<f64>() * grid.df();
        if !(energy > 0.0 && energy.is_finite()) {
            return Err(SignalError::ZeroWindow(window.name()));
        }
        let scale = energy.sqrt().recip();
        samples.iter_mut().for_each(|x| *x *= scale);
        Ok(Self { name: window.name(), samples, grid })
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    /// `sum |X[m]|^2 df`.
    pub fn power(&self) -> f64 {
        self.samples.iter().map(|x| x * x).sum::<f64>() * self.grid.df()
    }
}

pub fn hann_window(grid: FrequencyGrid) -> WindowSpectrum {
    WindowSpectrum::new(&Hann, grid).expect("a Hann window always has nonzero samples")
}
