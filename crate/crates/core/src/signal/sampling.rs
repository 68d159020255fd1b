use rayon::prelude::*;

use crate::graph::PropagationGraph;
use crate::transfer::{BounceRange, ChannelPoint, NormBoundRadius, TransferError, TransferSample};
use crate::{C64, CMatrix};

use super::{FrequencyGrid, SignalError};

fn point(graph: &PropagationGraph, grid: &FrequencyGrid, index: usize) -> Result<ChannelPoint, SignalError> {
    ChannelPoint::new(graph, grid.frequency(index), &NormBoundRadius).map_err(|e| match e {
        TransferError::SpectralRadiusExceeded(radius) => {
            SignalError::SpectralRadiusExceededAt { index, frequency: grid.frequency(index), radius }
        }
        other => other.into(),
    })
}

/// Samples several partial transfer matrices at once; the kernel at each
/// frequency is factored once and shared. Output is indexed `[range][m]`.
///
/// The spectral radius is re-checked at every grid frequency; the first
/// offending index is reported.
pub fn sample_ranges(
    graph: &PropagationGraph,
    grid: &FrequencyGrid,
    ranges: &[BounceRange],
) -> Result<Vec<Vec<CMatrix>>, SignalError> {
    let per_frequency: Vec<Result<Vec<CMatrix>, SignalError>> = (0..grid.len())
        .into_par_iter()
        .map(|m| {
            let p = point(graph, grid, m)?;
            Ok(ranges.iter().map(|&r| if r.is_full() { p.transfer() } else { p.partial(r) }).collect())
        })
        .collect();
    let mut out: Vec<Vec<CMatrix>> = ranges.iter().map(|_| Vec::with_capacity(grid.len())).collect();
    for sample in per_frequency {
        for (slot, h) in out.iter_mut().zip(sample?) {
            slot.push(h);
        }
    }
    Ok(out)
}

/// `H_{K:L}` at every grid frequency.
pub fn sample_transfer(
    graph: &PropagationGraph,
    grid: &FrequencyGrid,
    range: BounceRange,
) -> Result<Vec<TransferSample>, SignalError> {
    let mut all = sample_ranges(graph, grid, &[range])?;
    let samples = all.pop().expect("one range requested");
    Ok(samples.into_iter().zip(grid.frequencies()).map(|(h, frequency)| TransferSample { frequency, h, range }).collect())
}

/// One matrix entry `(rx, tx)` across all samples.
pub fn entry_series(samples: &[CMatrix], rx: usize, tx: usize) -> Vec<C64> {
    samples.iter().map(|h| h[(rx, tx)]).collect()
}
