use proptest::prelude::*;

use revgraph_core::graph::{walk_sum, EdgeClass, PropagationGraph, DEFAULT_PATH_CAP};
use revgraph_core::scenario::{generate_realization, ScenarioConfig};
use revgraph_core::signal::{entry_series, hann_window, sample_ranges, FrequencyGrid, Synthesizer};
use revgraph_core::transfer::{spectral_radius, BounceRange, ChannelPoint, ExactRadius};
use revgraph_core::CMatrix;

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn grid() -> FrequencyGrid {
    FrequencyGrid::new(2e9, 3e9, 64).unwrap()
}

fn realization(seed: u64, n_s: usize, p_vis: f64) -> PropagationGraph {
    let config = ScenarioConfig { seed, n_scatterers: n_s, p_vis, ..Default::default() };
    generate_realization(&config, &grid()).unwrap().graph
}

fn scenario() -> impl Strategy<Value = PropagationGraph> {
    (any::<u64>(), 0usize..6, 0.2f64..1.0).prop_map(|(seed, n_s, p)| realization(seed, n_s, p))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn generated_graphs_are_loopless_with_zero_b_diagonal(g in scenario(), f in 2e9f64..3e9) {
        let b = g.adjacency_blocks(f).b;
        for i in 0..g.n_s() {
            prop_assert_eq!(b[(i, i)].norm(), 0.0);
        }
    }

    #[test]
    fn reverse_is_an_involution(g in scenario(), f in 2e9f64..3e9) {
        let a = g.adjacency_blocks(f);
        let back = g.reverse().reverse().adjacency_blocks(f);
        prop_assert_eq!(a.assemble(), back.assemble());
    }

    #[test]
    fn reverse_transposes_blocks(g in scenario(), f in 2e9f64..3e9) {
        let a = g.adjacency_blocks(f);
        let r = g.reverse().adjacency_blocks(f);
        prop_assert_eq!(&r.d, &a.d.transpose());
        prop_assert_eq!(&r.b, &a.b.transpose());
        prop_assert_eq!(&r.t, &a.r.transpose());
        prop_assert_eq!(&r.r, &a.t.transpose());
    }

    #[test]
    fn reverse_transfer_is_transpose(g in scenario(), f in 2e9f64..3e9) {
        let h = ChannelPoint::new(&g, f, &ExactRadius).unwrap().transfer();
        let back = ChannelPoint::new(&g.reverse(), f, &ExactRadius).unwrap().transfer();
        prop_assert!(max_abs(&(back - h.transpose())) < 1e-12);
    }

    #[test]
    fn block_entries_only_on_edges(g in scenario(), f in 2e9f64..3e9) {
        let a = g.adjacency_blocks(f).assemble();
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                if a[(i, j)].norm() != 0.0 {
                    prop_assert!(g.edge(g.vertex_at(j), g.vertex_at(i)).is_some(), "entry ({i}, {j}) without edge");
                }
            }
        }
    }

    #[test]
    fn exact_bounce_terms_match_walks(seed in any::<u64>(), n_s in 1usize..5, f in 2e9f64..3e9, k in 0usize..6) {
        let g = realization(seed, n_s, 0.8);
        let point = ChannelPoint::new(&g, f, &ExactRadius).unwrap();
        let oracle = walk_sum(&g, f, k, k, DEFAULT_PATH_CAP).unwrap();
        prop_assert!(max_abs(&(point.k_bounce(k) - &oracle)) <= 1e-10 * max_abs(&oracle));
    }

    #[test]
    fn head_plus_tail_is_full(g in scenario(), f in 2e9f64..3e9, k in 0usize..11) {
        let point = ChannelPoint::new(&g, f, &ExactRadius).unwrap();
        let sum = point.partial(BounceRange::up_to(k)) + point.tail(k + 1);
        prop_assert!(max_abs(&(sum - point.transfer())) < 1e-11);
    }

    #[test]
    fn inter_scatterer_gain_bounds_radius(g in scenario(), f in 2e9f64..3e9) {
        let b = g.adjacency_blocks(f).b;
        let norm1 = (0..b.ncols()).map(|j| b.column(j).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max);
        let rho = spectral_radius(&b).unwrap();
        prop_assert!(rho <= norm1 * (1.0 + 1e-12));
        prop_assert!(norm1 < 1.0 || g.class_size(EdgeClass::InterScatter) == 0);
    }

    #[test]
    fn phase_only_rotates_the_entry(g in scenario(), f in 2e9f64..3e9, shift in 0.0f64..std::f64::consts::TAU) {
        for e in g.edges().iter().take(4) {
            let mut moved = *e;
            moved.phase = (e.phase + shift) % std::f64::consts::TAU;
            let (a, b) = (e.transfer(f), moved.transfer(f));
            prop_assert!((a.norm() - b.norm()).abs() <= 1e-15 * a.norm().max(1e-300));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn partial_responses_add_up_in_delay(g in scenario(), l in 0usize..5) {
        let grid = grid();
        let mut ranges: Vec<BounceRange> = (0..=l).map(BounceRange::exact).collect();
        ranges.push(BounceRange::from(l + 1));
        ranges.push(BounceRange::full());
        let sampled = sample_ranges(&g, &grid, &ranges).unwrap();
        let synth = Synthesizer::new(hann_window(grid));
        let parts: Vec<_> = sampled.iter().map(|s| synth.synthesize(&entry_series(s, 0, 0)).unwrap().samples).collect();
        let (whole, pieces) = parts.split_last().unwrap();
        let scale = whole.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for i in 0..whole.len() {
            let sum: revgraph_core::C64 = pieces.iter().map(|p| p[i]).sum();
            prop_assert!((sum - whole[i]).norm() <= 1e-9 * scale);
        }
    }

    #[test]
    fn hann_windows_have_unit_power(lo in 0.5e9f64..5e9, width in 1e6f64..10e9, m in 3usize..5000) {
        let w = hann_window(FrequencyGrid::new(lo, lo + width, m).unwrap());
        prop_assert!((w.power() - 1.0).abs() < 1e-12);
    }
}
