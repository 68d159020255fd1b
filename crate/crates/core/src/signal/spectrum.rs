use serde::{Deserialize, Serialize};

use crate::graph::{EdgeClass, Point3, PropagationGraph};
use crate::scenario::{generate_realization, with_receiver_position, ScenarioConfig};
use crate::transfer::{BounceRange, ChannelPoint, NormBoundRadius, TransferError};
use crate::{C64, CMatrix};

use super::sampling::{entry_series, sample_ranges};
use super::{FrequencyGrid, SignalError, Synthesizer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AveragingKind {
    Ensemble,
    Spatial,
}

/// Mean `|h(i dtau)|^2` over a set of responses.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayPowerSpectrum {
    pub power: Vec<f64>,
    pub grid: FrequencyGrid,
    pub kind: AveragingKind,
    pub count: usize,
}

impl DelayPowerSpectrum {
    pub fn delays(&self) -> Vec<f64> {
        self.grid.delays()
    }

    pub fn db(&self) -> Vec<f64> {
        self.power.iter().map(|p| 10.0 * p.log10()).collect()
    }

    /// Delay of the largest bin.
    pub fn peak_delay(&self) -> f64 {
        let i = (0..self.power.len()).max_by(|&a, &b| self.power[a].total_cmp(&self.power[b])).unwrap_or(0);
        i as f64 * self.grid.dtau()
    }
}

fn add_into(mut a: Vec<f64>, b: Vec<f64>) -> Vec<f64> {
    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
    a
}

/// Sums `leaf(i)` over `0..n` by a fixed binary tree. The tree, and thus the
/// rounding, does not depend on how rayon schedules the halves.
pub fn pairwise_sum<E, F>(n: usize, leaf: &F) -> Result<Vec<Vec<f64>>, E>
where
    F: Fn(usize) -> Result<Vec<Vec<f64>>, E> + Sync,
    E: Send,
{
    fn go<E: Send, F: Fn(usize) -> Result<Vec<Vec<f64>>, E> + Sync>(
        lo: usize,
        hi: usize,
        leaf: &F,
    ) -> Result<Vec<Vec<f64>>, E> {
        if hi - lo == 1 {
            return leaf(lo);
        }
        let mid = lo + (hi - lo) / 2;
        let (a, b) = rayon::join(|| go(lo, mid, leaf), || go(mid, hi, leaf));
        let (a, b) = (a?, b?);
        Ok(a.into_iter().zip(b).map(|(x, y)| add_into(x, y)).collect())
    }
    assert!(n > 0, "nothing to sum");
    go(0, n, leaf)
}

/// What an ensemble run collects.
#[derive(Debug, Clone)]
pub struct EnsembleRequest {
    /// Realizations are validated on the first grid; every grid is sampled.
    pub grids: Vec<FrequencyGrid>,
    pub ranges: Vec<BounceRange>,
    pub runs: usize,
    /// `(rx, tx)` entry of the transfer matrix.
    pub pair: (usize, usize),
}

/// Ensemble means, indexed `[grid][range]`.
#[derive(Debug, Clone)]
pub struct EnsembleResult {
    pub spectra: Vec<Vec<DelayPowerSpectrum>>,
    /// Mean `|H(f_m)|^2` per grid sample.
    pub transfer_power: Vec<Vec<Vec<f64>>>,
    pub seeds: Vec<u64>,
}

/// Monte Carlo averages over realizations with seeds
/// `config.seed + 0 .. config.seed + runs`.
pub fn ensemble_spectra(
    config: &ScenarioConfig,
    request: &EnsembleRequest,
    synthesizers: &[Synthesizer],
) -> Result<EnsembleResult, SignalError> {
    let (grids, ranges) = (&request.grids, &request.ranges);
    if request.runs == 0 || grids.is_empty() || ranges.is_empty() {
        return Err(SignalError::EmptyRequest);
    }
    assert_eq!(synthesizers.len(), grids.len(), "one synthesizer per grid");
    let seeds: Vec<u64> = (0..request.runs as u64).map(|i| config.seed.wrapping_add(i)).collect();
    let (rx, tx) = request.pair;
    let leaf = |run: usize| -> Result<Vec<Vec<f64>>, SignalError> {
        let with_context = |e: SignalError| SignalError::Run { run, seed: seeds[run], source: Box::new(e) };
        let real = generate_realization(&config.with_seed(seeds[run]), &grids[0]).map_err(|e| with_context(e.into()))?;
        let mut out = Vec::with_capacity(grids.len() * ranges.len() * 2);
        let mut buffer = Vec::new();
        for (grid, synth) in grids.iter().zip(synthesizers) {
            let sampled = sample_ranges(&real.graph, grid, ranges).map_err(with_context)?;
            for samples in &sampled {
                let h = entry_series(samples, rx, tx);
                let mut power = vec![0.0; grid.len()];
                synth.accumulate_power(&h, &mut buffer, &mut power).map_err(with_context)?;
                out.push(power);
                out.push(h.iter().map(|z| z.norm_sqr()).collect());
            }
        }
        Ok(out)
    };
    let sums = pairwise_sum(request.runs, &leaf)?;
    let n = request.runs as f64;
    let mut sums = sums.into_iter().map(|v| v.into_iter().map(|x| x / n).collect::<Vec<f64>>());
    let mut spectra = Vec::new();
    let mut transfer_power = Vec::new();
    for grid in grids {
        let (mut s, mut t) = (Vec::new(), Vec::new());
        for _ in ranges {
            let power = sums.next().expect("layout");
            s.push(DelayPowerSpectrum { power, grid: *grid, kind: AveragingKind::Ensemble, count: request.runs });
            t.push(sums.next().expect("layout"));
        }
        spectra.push(s);
        transfer_power.push(t);
    }
    Ok(EnsembleResult { spectra, transfer_power, seeds })
}

/// Ensemble delay-power spectrum of the full response on one grid.
pub fn ensemble_spectrum(
    config: &ScenarioConfig,
    synthesizer: &Synthesizer,
    runs: usize,
) -> Result<DelayPowerSpectrum, SignalError> {
    let request =
        EnsembleRequest { grids: vec![*synthesizer.grid()], ranges: vec![BounceRange::full()], runs, pair: (0, 0) };
    let mut result = ensemble_spectra(config, &request, std::slice::from_ref(synthesizer))?;
    Ok(result.spectra.remove(0).remove(0))
}

/// One realization seen from many positions of one receiver.
///
/// `(I - B)^-1 T` depends only on the transmitter and scatterers, so it is
/// computed once per frequency; each position only needs its own `D` and
/// `R`.
pub struct SpatialSweep {
    graphs: Vec<PropagationGraph>,
    scattered: Vec<CMatrix>,
    grid: FrequencyGrid,
    rx: usize,
}

impl SpatialSweep {
    pub fn new(
        graph: &PropagationGraph,
        rx: usize,
        positions: &[Point3],
        grid: FrequencyGrid,
        speed_of_light: f64,
    ) -> Result<Self, SignalError> {
        if positions.is_empty() {
            return Err(SignalError::EmptyRequest);
        }
        let graphs = positions
            .iter()
            .map(|&p| with_receiver_position(graph, rx, p, speed_of_light))
            .collect::<Result<Vec<_>, _>>()?;
        let fixed = |g: &PropagationGraph| {
            g.edges()
                .iter()
                .filter(|e| matches!(e.class(), Some(EdgeClass::TxScatter | EdgeClass::InterScatter)))
                .cloned()
                .collect::<Vec<_>>()
        };
        let reference = fixed(graph);
        // T and B are built from these edges alone, so equal edges give
        // equal blocks at every frequency.
        assert!(graphs.iter().all(|g| fixed(g) == reference), "receiver moves must not touch T or B");
        let scattered = (0..grid.len())
            .map(|m| {
                let f = grid.frequency(m);
                ChannelPoint::new(graph, f, &NormBoundRadius).map(|p| p.scattered().clone()).map_err(|e| match e {
                    TransferError::SpectralRadiusExceeded(radius) => {
                        SignalError::SpectralRadiusExceededAt { index: m, frequency: f, radius }
                    }
                    other => other.into(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { graphs, scattered, grid, rx })
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn graph(&self, position: usize) -> &PropagationGraph {
        &self.graphs[position]
    }

    /// `H = D + R (I - B)^-1 T` at every grid frequency for one position.
    pub fn transfer(&self, position: usize) -> Vec<CMatrix> {
        let g = &self.graphs[position];
        self.grid
            .frequencies()
            .zip(&self.scattered)
            .map(|(f, z)| {
                let (d, r) = g.receiver_blocks(f);
                d + r * z
            })
            .collect()
    }

    /// Spatial mean of `|h|^2` for the entry `(rx, tx)` of the moved receiver.
    pub fn spectrum(&self, synthesizer: &Synthesizer, tx: usize) -> Result<DelayPowerSpectrum, SignalError> {
        let leaf = |p: usize| -> Result<Vec<Vec<f64>>, SignalError> {
            let h: Vec<C64> = entry_series(&self.transfer(p), self.rx, tx);
            let mut power = vec![0.0; self.grid.len()];
            synthesizer.accumulate_power(&h, &mut Vec::new(), &mut power)?;
            Ok(vec![power])
        };
        let sum = pairwise_sum(self.len(), &leaf)?.remove(0);
        let n = self.len() as f64;
        Ok(DelayPowerSpectrum {
            power: sum.into_iter().map(|x| x / n).collect(),
            grid: self.grid,
            kind: AveragingKind::Spatial,
            count: self.len(),
        })
    }
}

/// Spatial delay-power spectrum of receiver 0 over `positions`.
pub fn spatial_spectrum(
    graph: &PropagationGraph,
    positions: &[Point3],
    synthesizer: &Synthesizer,
    speed_of_light: f64,
) -> Result<DelayPowerSpectrum, SignalError> {
    SpatialSweep::new(graph, 0, positions, *synthesizer.grid(), speed_of_light)?.spectrum(synthesizer, 0)
}

/// Least-squares line `y = slope x + intercept`, with the RMS residual.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (xs.iter().zip(ys).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum::<f64>() / n).sqrt();
    (slope, intercept, rms)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailFit {
    pub slope_db_per_ns: f64,
    pub intercept_db: f64,
    pub residual_rms_db: f64,
    pub bins: usize,
}

pub const MIN_FIT_BINS: usize = 10;

/// Straight line through `10 log10(power)` against delay in ns, over the bins
/// with delay in `[start_ns, end_ns]`.
pub fn fit_tail_slope(spectrum: &DelayPowerSpectrum, start_ns: f64, end_ns: f64) -> Result<TailFit, SignalError> {
    let dtau_ns = spectrum.grid.dtau() * 1e9;
    let (xs, ys): (Vec<f64>, Vec<f64>) = spectrum
        .power
        .iter()
        .enumerate()
        .map(|(i, &p)| (i as f64 * dtau_ns, p))
        .filter(|&(t, _)| start_ns <= t && t <= end_ns)
        .unzip();
    if xs.len() < MIN_FIT_BINS {
        return Err(SignalError::InsufficientBins { found: xs.len(), needed: MIN_FIT_BINS });
    }
    if let Some(i) = ys.iter().position(|&p| !(p > 0.0)) {
        return Err(SignalError::NonpositivePower { delay_ns: xs[i] });
    }
    let db: Vec<f64> = ys.iter().map(|p| 10.0 * p.log10()).collect();
    let (slope, intercept, rms) = least_squares(&xs, &db);
    Ok(TailFit { slope_db_per_ns: slope, intercept_db: intercept, residual_rms_db: rms, bins: xs.len() })
}
