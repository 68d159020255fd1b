use super::*;
use crate::graph::EdgeClass;
use crate::testutil::rng;
use crate::transfer::spectral_radius;
use proptest::prelude::*;
use std::f64::consts::PI;

fn band() -> FrequencyGrid {
    FrequencyGrid::new(2e9, 3e9, 8192).unwrap()
}

fn table_config(seed: u64) -> ScenarioConfig {
    ScenarioConfig { seed, ..Default::default() }
}

#[test]
fn positions_stay_in_the_room() {
    let room = ScenarioConfig::default().room;
    let pts = draw_positions(&room, 10, &mut rng(1));
    assert_eq!(pts.len(), 10);
    assert!(pts.iter().all(|p| inside(&room, p)));
    assert_eq!(pts, draw_positions(&room, 10, &mut rng(1)));
}

#[test]
fn position_means_match_the_box_midpoint() {
    let room = ScenarioConfig::default().room;
    let n = 100_000;
    let pts = draw_positions(&room, n, &mut rng(2));
    for (axis, [lo, hi]) in room.iter().enumerate() {
        let mean = pts.iter().map(|p| p[axis]).sum::<f64>() / n as f64;
        let sigma = (hi - lo) / (12.0 * n as f64).sqrt();
        assert!((mean - (lo + hi) / 2.0).abs() < 3.0 * sigma, "axis {axis}: {mean}");
    }
}

#[test]
fn edge_draws_respect_structure() {
    let pairs = draw_edges(1, 1, 10, 0.8, 1.0, &mut rng(3));
    assert!(pairs.contains(&(VertexId::tx(0), VertexId::rx(0))));
    for (a, b) in pairs {
        assert_ne!(a, b);
        assert_ne!(b.kind, VertexKind::Transmitter);
        assert_ne!(a.kind, VertexKind::Receiver);
    }
}

#[test]
fn zero_visibility_leaves_only_the_direct_edge() {
    for p_dir in [0.0, 1.0] {
        let pairs = draw_edges(1, 1, 10, 0.0, p_dir, &mut rng(4));
        let expected = if p_dir == 1.0 { vec![(VertexId::tx(0), VertexId::rx(0))] } else { vec![] };
        assert_eq!(pairs, expected);
    }
}

#[test]
fn inter_scatterer_edge_count_is_binomial() {
    let runs = 10_000;
    let mut r = rng(5);
    let total: usize = (0..runs)
        .map(|_| {
            draw_edges(1, 1, 10, 0.8, 1.0, &mut r)
                .iter()
                .filter(|(a, b)| a.kind == VertexKind::Scatterer && b.kind == VertexKind::Scatterer)
                .count()
        })
        .sum();
    let mean = total as f64 / runs as f64;
    let sigma = (90.0 * 0.8 * 0.2 / runs as f64).sqrt();
    assert!((mean - 72.0).abs() < 3.0 * sigma, "{mean}");
}

#[test]
fn direct_gain_is_unity_at_the_friis_point() {
    let f = 2e9;
    let e = Edge::new(VertexId::tx(0), VertexId::rx(0), GainSpec::Direct, 0.0, 1.0 / (4.0 * PI * f));
    assert!((edge_gain(&e, f) - 1.0).abs() < 1e-14);
}

#[test]
fn single_edge_class_collapses_to_a_power_law() {
    let (f, tau) = (2.5e9, 7e-9);
    let stats = ClassStats::of(EdgeClass::TxScatter, [tau]).unwrap();
    let gain = GainSpec::TxScatter { mean_delay_s: stats.mean_delay, inv_sq_delay_sum: stats.inv_sq_delay_sum };
    let e = Edge::new(VertexId::tx(0), VertexId::scatterer(0), gain, 0.0, tau);
    let expected = 1.0 / (4.0 * PI * f * tau);
    assert!((edge_gain(&e, f).powi(2) - expected).abs() < 1e-15 * expected.max(1.0));
}

#[test]
fn inter_scatterer_gain_is_split_over_fan_out() {
    let e = Edge::new(
        VertexId::scatterer(0),
        VertexId::scatterer(1),
        GainSpec::InterScatter { gain: 0.62, out_degree: 4 },
        0.0,
        1e-8,
    );
    assert!((edge_gain(&e, 1e9) - 0.155).abs() < 1e-15);
    assert_eq!(edge_gain(&e, 1e9), edge_gain(&e, 9e9));
}

#[test]
fn empty_class_has_no_statistics() {
    assert!(matches!(
        ClassStats::of(EdgeClass::ScatterRx, std::iter::empty()),
        Err(ScenarioError::EmptyEdgeClass(EdgeClass::ScatterRx))
    ));
}

#[test]
fn slope_to_gain() {
    assert!((gain_from_slope(-0.4, 10e-9) - 10f64.powf(-0.2)).abs() < 1e-15);
    assert!((gain_from_slope(-0.4, 10e-9) - 0.631).abs() < 1e-3);
    assert!((gain_from_slope(-1e-12, 10e-9) - 1.0).abs() < 1e-11);
    for (rho, mu) in [(-0.4, 12e-9), (-2.5, 3e-9), (-0.01, 40e-9)] {
        let back = 20.0 * gain_from_slope(rho, mu).log10() / (mu * 1e9);
        assert!(((back - rho) / rho).abs() < 1e-12);
    }
}

#[test]
fn generation_is_deterministic() {
    let a = generate_realization(&table_config(11), &band()).unwrap();
    let b = generate_realization(&table_config(11), &band()).unwrap();
    assert_eq!(a, b);
    assert!(a.attempts >= 1);
    let c = generate_realization(&table_config(12), &band()).unwrap();
    assert_ne!(a.graph, c.graph);
}

#[test]
fn realization_matches_the_model() {
    let real = generate_realization(&table_config(21), &band()).unwrap();
    let g = real.graph;
    assert_eq!((g.n_t(), g.n_r(), g.n_s()), (1, 1, 10));
    assert_eq!(g.class_size(EdgeClass::Direct), 1);
    let mu = real.mu_es.unwrap();
    assert_eq!(real.resolved_g, Some(gain_from_slope(-0.4, mu)));
    let inter: Vec<_> = g.edges_in(EdgeClass::InterScatter).collect();
    let mean = inter.iter().map(|e| e.delay).sum::<f64>() / inter.len() as f64;
    assert!((mean - mu).abs() < 1e-20);
    let direct = g.edges_in(EdgeClass::Direct).next().unwrap();
    assert!((direct.delay - 12.806248e-9).abs() < 1e-14);
    for e in g.edges() {
        assert!((0.0..TAU).contains(&e.phase));
    }
}

#[test]
fn zero_visibility_is_accepted_at_once() {
    let config = ScenarioConfig { p_vis: 0.0, ..table_config(3) };
    let real = generate_realization(&config, &band()).unwrap();
    assert_eq!(real.attempts, 1);
    assert_eq!(real.graph.edges().len(), 1);
    assert_eq!(real.mu_es, None);
}

#[test]
fn rejection_limit_fires_for_amplifying_scatterers() {
    let config = ScenarioConfig {
        p_vis: 1.0,
        tail_slope_db_per_ns: None,
        inter_scatterer_gain: Some(5.0),
        max_rejections: 10,
        ..table_config(4)
    };
    match generate_realization(&config, &band()) {
        Err(ScenarioError::RejectionLimitExceeded { attempts }) => assert_eq!(attempts, 11),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn invalid_config_is_refused() {
    let config = ScenarioConfig { p_vis: 1.3, ..Default::default() };
    assert!(matches!(generate_realization(&config, &band()), Err(ScenarioError::InvalidConfig { field: "p_vis", .. })));
}

#[test]
fn geometric_gains_fall_with_frequency() {
    let g = generate_realization(&table_config(8), &band()).unwrap().graph;
    for e in g.edges() {
        let (lo, hi) = (edge_gain(e, 2e9), edge_gain(e, 3e9));
        if e.class() == Some(EdgeClass::InterScatter) {
            assert_eq!(lo, hi);
        } else {
            assert!(hi < lo && hi > 0.0);
        }
    }
}

#[test]
fn receiver_move_keeps_scatterer_blocks() {
    let real = generate_realization(&table_config(9), &band()).unwrap();
    let same = with_receiver_position(&real.graph, 0, [4.18, 4.0, 1.5], 3e8).unwrap();
    assert_eq!(same, real.graph);
    let moved = with_receiver_position(&real.graph, 0, [4.0, 3.9, 1.4], 3e8).unwrap();
    let (a, b) = (real.graph.adjacency_blocks(2.4e9), moved.adjacency_blocks(2.4e9));
    assert_eq!(a.b, b.b);
    assert_eq!(a.t, b.t);
    assert_ne!(a.r, b.r);
    assert_ne!(a.d, b.d);
    let direct = moved.edges_in(EdgeClass::Direct).next().unwrap();
    let d = ((4.0f64 - 1.78).powi(2) + 2.9f64.powi(2) + 0.1f64.powi(2)).sqrt();
    assert!((direct.delay - d / 3e8).abs() < 1e-20);
}

#[test]
fn realization_json_round_trip() {
    let real = generate_realization(&table_config(5), &band()).unwrap();
    let back = ScenarioRealization::from_json(&real.to_json()).unwrap();
    assert_eq!(back, real);
}

#[test]
fn grid_is_centered() {
    let pts = horizontal_grid([1.0, 2.0, 1.5], 30, 30, 0.01);
    assert_eq!(pts.len(), 900);
    let cx = pts.iter().map(|p| p[0]).sum::<f64>() / 900.0;
    let cy = pts.iter().map(|p| p[1]).sum::<f64>() / 900.0;
    assert!((cx - 1.0).abs() < 1e-12 && (cy - 2.0).abs() < 1e-12);
    assert!((pts[1][0] - pts[0][0] - 0.01).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn realizations_satisfy_the_invariants(seed in any::<u64>(), p_vis in 0.0..1.0f64, n_s in 0usize..8) {
        let config = ScenarioConfig { n_scatterers: n_s, p_vis, ..table_config(seed) };
        let real = generate_realization(&config, &band()).unwrap();
        let g = &real.graph;
        for e in g.edges() {
            prop_assert_ne!(e.init, e.term);
        }
        let blocks = g.adjacency_blocks(2.3e9);
        for i in 0..n_s {
            prop_assert_eq!(blocks.b[(i, i)].norm(), 0.0);
        }
        // Every scatterer with inter-scatterer fan-out n sends g^2 / n of power.
        if let Some(gain) = real.resolved_g {
            for s in 0..n_s {
                let col: Vec<f64> = blocks.b.column(s).iter().map(|z| z.norm()).filter(|&x| x > 0.0).collect();
                if !col.is_empty() {
                    let power: f64 = col.iter().map(|x| x * x).sum();
                    prop_assert!((power - gain * gain / col.len() as f64).abs() < 1e-12);
                }
            }
        }
        for f in band().subgrid(VALIDATION_POINTS) {
            prop_assert!(spectral_radius(&g.adjacency_blocks(f).b).unwrap() < SPECTRAL_LIMIT);
        }
    }
}
