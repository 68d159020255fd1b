//! Self-checks run by the validate mode on realizations of the configured
//! scenario.

use serde::Serialize;

use revgraph_core::graph::{walk_sum, VertexKind, DEFAULT_PATH_CAP};
use revgraph_core::scenario::{generate_realization, horizontal_grid, with_receiver_position};
use revgraph_core::signal::{entry_series, sample_ranges, FrequencyGrid, SpatialSweep};
use revgraph_core::transfer::{BounceRange, ChannelPoint, ExactRadius};
use revgraph_core::{CMatrix, C64};

use crate::config::ExperimentSpec;
use crate::experiments::synthesizer;
use crate::CliError;

/// Realizations examined per validate run, at most.
pub const MAX_REALIZATIONS: usize = 5;
/// Longest bounded range compared against explicit walk enumeration.
pub const WALK_DEPTH: usize = 3;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

/// Accumulates the worst error of one named check across realizations.
struct Worst {
    name: &'static str,
    tolerance: f64,
    value: f64,
    cases: usize,
}

impl Worst {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self { name, tolerance, value: 0.0, cases: 0 }
    }

    fn record(&mut self, err: f64) {
        self.cases += 1;
        if err.is_nan() || err > self.value {
            self.value = err;
        }
    }

    fn finish(self) -> Check {
        Check {
            name: self.name,
            pass: self.value <= self.tolerance,
            detail: format!("worst {:.2e} over {} cases (tolerance {:.0e})", self.value, self.cases, self.tolerance),
        }
    }
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Error of `a` against `b`, relative to the largest entry of `b`.
fn rel_err(a: &CMatrix, b: &CMatrix) -> f64 {
    let scale = max_abs(b);
    let diff = max_abs(&(a - b));
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

fn probe_frequencies(grid: &FrequencyGrid) -> Vec<f64> {
    grid.subgrid(4)
}

pub fn run_checks(spec: &ExperimentSpec) -> Result<(Vec<Check>, Vec<u64>), CliError> {
    let n = spec.runs.min(MAX_REALIZATIONS);
    let seeds: Vec<u64> = (0..n as u64).map(|i| spec.scenario.seed.wrapping_add(i)).collect();
    let grid = spec.grids[0];

    let mut structure = Worst::new("structure (loopless, no edges into Tx or out of Rx)", 0.0);
    let mut walks = Worst::new("closed form vs walk enumeration", 1e-10);
    let mut reciprocity = Worst::new("reciprocity of the reverse graph", 1e-12);
    let mut decomposition = Worst::new("H = H_0:K + H_K+1:inf", 1e-11);
    let mut additivity = Worst::new("delay-domain additivity of partial responses", 1e-9);
    let mut reuse = Worst::new("kernel reuse vs recomputation", 1e-12);

    for &seed in &seeds {
        let real = generate_realization(&spec.scenario.with_seed(seed), &grid)?;
        let g = &real.graph;
        let bad = g
            .edges()
            .iter()
            .filter(|e| e.init == e.term || e.term.kind == VertexKind::Transmitter || e.init.kind == VertexKind::Receiver)
            .count();
        structure.record(bad as f64);

        let reverse = g.reverse();
        for f in probe_frequencies(&grid) {
            let point = ChannelPoint::new(g, f, &ExactRadius)?;
            for last in 0..=WALK_DEPTH {
                let oracle = walk_sum(g, f, 0, last, DEFAULT_PATH_CAP).map_err(revgraph_core::transfer::TransferError::from)?;
                walks.record(rel_err(&point.partial(BounceRange::up_to(last)), &oracle));
            }
            let full = point.transfer();
            let back = ChannelPoint::new(&reverse, f, &ExactRadius)?.transfer();
            reciprocity.record(rel_err(&back, &full.transpose()));
            for k in 0..=5 {
                let sum = point.partial(BounceRange::up_to(k)) + point.tail(k + 1);
                decomposition.record(rel_err(&sum, &full));
            }
        }

        // h = sum_{K<=L} h_K:K + h_{L+1:inf} in the delay domain.
        let l = 3;
        let mut ranges: Vec<BounceRange> = (0..=l).map(BounceRange::exact).collect();
        ranges.push(BounceRange::from(l + 1));
        ranges.push(BounceRange::full());
        let synth = synthesizer(spec, grid)?;
        let sampled = sample_ranges(g, &grid, &ranges)?;
        for rx in 0..g.n_r() {
            for tx in 0..g.n_t() {
                let parts = sampled
                    .iter()
                    .map(|s| synth.synthesize(&entry_series(s, rx, tx)).map(|y| y.samples))
                    .collect::<Result<Vec<_>, _>>()?;
                let (whole, pieces) = parts.split_last().expect("ranges are nonempty");
                let scale = whole.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
                let err = (0..whole.len())
                    .map(|i| (pieces.iter().map(|p| p[i]).sum::<C64>() - whole[i]).norm())
                    .fold(0.0, f64::max);
                additivity.record(err / scale);
            }
        }

        let positions = horizontal_grid(spec.scenario.rx[0], 3, 3, spec.spatial.step_m);
        let c = spec.scenario.speed_of_light;
        let sweep = SpatialSweep::new(g, 0, &positions, grid, c)?;
        for (p, &pos) in positions.iter().enumerate() {
            let moved = with_receiver_position(g, 0, pos, c)?;
            let naive = sample_ranges(&moved, &grid, &[BounceRange::full()])?.remove(0);
            let err = sweep.transfer(p).iter().zip(&naive).map(|(a, b)| max_abs(&(a - b))).fold(0.0, f64::max);
            reuse.record(err);
        }
    }

    let mut window = Worst::new("window unit power", 1e-12);
    for &g in &spec.grids {
        window.record((synthesizer(spec, g)?.window().power() - 1.0).abs());
    }

    let checks = [structure, walks, reciprocity, decomposition, additivity, reuse, window].map(Worst::finish).to_vec();
    Ok((checks, seeds))
}
