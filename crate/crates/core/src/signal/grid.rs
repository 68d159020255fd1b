use serde::{Deserialize, Serialize};

use super::SignalError;

/// `M` equispaced frequencies from `f_min` to `f_max` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridDocument", into = "GridDocument")]
pub struct FrequencyGrid {
    f_min: f64,
    f_max: f64,
    m: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridDocument {
    f_min_hz: f64,
    f_max_hz: f64,
    samples: usize,
}

impl TryFrom<GridDocument> for FrequencyGrid {
    type Error = SignalError;

    fn try_from(d: GridDocument) -> Result<Self, SignalError> {
        FrequencyGrid::new(d.f_min_hz, d.f_max_hz, d.samples)
    }
}

impl From<FrequencyGrid> for GridDocument {
    fn from(g: FrequencyGrid) -> Self {
        Self { f_min_hz: g.f_min, f_max_hz: g.f_max, samples: g.m }
    }
}

impl FrequencyGrid {
    pub fn new(f_min: f64, f_max: f64, m: usize) -> Result<Self, SignalError> {
        if !(f_min.is_finite() && f_max.is_finite() && 0.0 < f_min && f_min < f_max) {
            return Err(SignalError::InvalidGrid(format!("need 0 < f_min < f_max, got [{f_min}, {f_max}]")));
        }
        if m < 2 {
            return Err(SignalError::InvalidGrid(format!("need at least 2 samples, got {m}")));
        }
        Ok(Self { f_min, f_max, m })
    }

    pub fn f_min(&self) -> f64 {
        self.f_min
    }

    pub fn f_max(&self) -> f64 {
        self.f_max
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn bandwidth(&self) -> f64 {
        self.f_max - self.f_min
    }

    /// Frequency spacing `(f_max - f_min) / (M - 1)`.
    pub fn df(&self) -> f64 {
        self.bandwidth() / (self.m - 1) as f64
    }

    /// Delay resolution `1 / (f_max - f_min)`, the spacing of the delay axis.
    pub fn dtau(&self) -> f64 {
        1.0 / self.bandwidth()
    }

    pub fn frequency(&self, index: usize) -> f64 {
        if index == self.m - 1 {
            self.f_max
        } else {
            self.f_min + index as f64 * self.df()
        }
    }

    pub fn frequencies(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.m).map(|i| self.frequency(i))
    }

    /// Delays `i * dtau` for `i = 0..M`.
    pub fn delays(&self) -> Vec<f64> {
        let dt = self.dtau();
        (0..self.m).map(|i| i as f64 * dt).collect()
    }

    /// At most `n` grid frequencies spread evenly over the band, endpoints
    /// included.
    pub fn subgrid(&self, n: usize) -> Vec<f64> {
        if n >= self.m {
            return self.frequencies().collect();
        }
        match n {
            0 => Vec::new(),
            1 => vec![self.f_min],
            _ => (0..n).map(|k| self.frequency(k * (self.m - 1) / (n - 1))).collect(),
        }
    }
}
