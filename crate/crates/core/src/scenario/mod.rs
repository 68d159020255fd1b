//! Random in-room propagation graphs.
//!
//! Scatterers are placed uniformly in a box, edges are drawn independently,
//! and every edge gets a uniform random phase. Gains follow geometric laws:
//! Friis for the direct edge, class-averaged laws for edges touching the
//! transmitter or receiver, and a fan-out normalized constant between
//! scatterers.

mod config;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use thiserror::Error;

use crate::graph::{Edge, EdgeClass, GainSpec, GraphDocument, GraphError, Point3, PropagationGraph, VertexId, VertexKind};
use crate::signal::FrequencyGrid;
use crate::transfer::{NormBoundRadius, RadiusGuard, TransferError, SPECTRAL_LIMIT};

pub use config::{inside, InterScatterGain, Room, ScenarioConfig, DEFAULT_TAIL_SLOPE_DB_PER_NS};

/// Number of frequencies checked for the spectral radius during generation.
pub const VALIDATION_POINTS: usize = 64;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid {field}: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("no {0:?} edges to average over")]
    EmptyEdgeClass(EdgeClass),
    #[error("vertex {0} coincides with a neighbour; delay would be zero")]
    DegenerateGeometry(VertexId),
    #[error("no acceptable realization after {attempts} attempts")]
    RejectionLimitExceeded { attempts: usize },
    #[error("graph has no vertex positions")]
    MissingPositions,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Transfer(#[from] TransferError),
}

/// Independent random streams of one realization. Each category draws from
/// its own ChaCha stream, so changing how many values one category consumes
/// leaves the others untouched.
pub struct ScenarioStreams {
    pub positions: ChaCha8Rng,
    pub edges: ChaCha8Rng,
    pub phases: ChaCha8Rng,
}

impl ScenarioStreams {
    pub const POSITIONS: u64 = 0;
    pub const EDGES: u64 = 1;
    pub const PHASES: u64 = 2;

    pub fn new(seed: u64) -> Self {
        let stream = |id| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            r.set_stream(id);
            r
        };
        Self { positions: stream(Self::POSITIONS), edges: stream(Self::EDGES), phases: stream(Self::PHASES) }
    }
}

/// `n` points uniform on `room`.
pub fn draw_positions(room: &Room, n: usize, rng: &mut impl Rng) -> Vec<Point3> {
    (0..n).map(|_| room.map(|[lo, hi]| rng.random_range(lo..hi))).collect()
}

/// One Bernoulli draw per admissible ordered pair, in a fixed order:
/// per transmitter its receivers then its scatterers, then per scatterer the
/// other scatterers then the receivers. Loops, edges into a transmitter and
/// edges out of a receiver are never candidates.
pub fn draw_edges(
    n_t: usize,
    n_r: usize,
    n_s: usize,
    p_vis: f64,
    p_dir: f64,
    rng: &mut impl Rng,
) -> Vec<(VertexId, VertexId)> {
    let mut out = Vec::new();
    let mut draw = |a, b, p: f64| {
        if rng.random::<f64>() < p {
            out.push((a, b));
        }
    };
    for t in 0..n_t {
        for r in 0..n_r {
            draw(VertexId::tx(t), VertexId::rx(r), p_dir);
        }
        for s in 0..n_s {
            draw(VertexId::tx(t), VertexId::scatterer(s), p_vis);
        }
    }
    for s in 0..n_s {
        for s2 in (0..n_s).filter(|&s2| s2 != s) {
            draw(VertexId::scatterer(s), VertexId::scatterer(s2), p_vis);
        }
        for r in 0..n_r {
            draw(VertexId::scatterer(s), VertexId::rx(r), p_vis);
        }
    }
    out
}

/// Mean delay and inverse-square delay sum of an edge class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassStats {
    pub count: usize,
    pub mean_delay: f64,
    pub inv_sq_delay_sum: f64,
}

impl ClassStats {
    pub fn of(class: EdgeClass, delays: impl IntoIterator<Item = f64>) -> Result<Self, ScenarioError> {
        let (mut count, mut sum, mut inv_sq) = (0usize, 0.0, 0.0);
        for d in delays {
            count += 1;
            sum += d;
            inv_sq += d.powi(-2);
        }
        if count == 0 {
            return Err(ScenarioError::EmptyEdgeClass(class));
        }
        Ok(Self { count, mean_delay: sum / count as f64, inv_sq_delay_sum: inv_sq })
    }
}

/// `g_e(f)` of an edge.
pub fn edge_gain(edge: &Edge, f: f64) -> f64 {
    edge.gain.amplitude(f, edge.delay)
}

/// Inter-scatterer gain matching a tail slope: `g = 10^(rho mu / 20)` with
/// `rho` in dB/ns and `mu_es` in seconds.
pub fn gain_from_slope(slope_db_per_ns: f64, mu_es: f64) -> f64 {
    10f64.powf(slope_db_per_ns * (mu_es * 1e9) / 20.0)
}

/// An accepted random graph.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRealization {
    pub graph: PropagationGraph,
    /// Number of draws, the accepted one included.
    pub attempts: usize,
    /// Mean inter-scatterer delay; `None` without inter-scatterer edges.
    pub mu_es: Option<f64>,
    /// Inter-scatterer gain used; `None` without inter-scatterer edges.
    pub resolved_g: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RealizationDocument {
    pub graph: GraphDocument,
    pub attempts: usize,
    pub mu_es: Option<f64>,
    pub resolved_g: Option<f64>,
}

impl ScenarioRealization {
    pub fn to_document(&self) -> RealizationDocument {
        RealizationDocument {
            graph: GraphDocument::from(&self.graph),
            attempts: self.attempts,
            mu_es: self.mu_es,
            resolved_g: self.resolved_g,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("realization serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let doc: RealizationDocument = serde_json::from_str(text).map_err(GraphError::from)?;
        Ok(Self {
            graph: PropagationGraph::try_from(doc.graph)?,
            attempts: doc.attempts,
            mu_es: doc.mu_es,
            resolved_g: doc.resolved_g,
        })
    }
}

fn distance(a: Point3, b: Point3) -> f64 {
    a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Edge endpoints and phase; everything else follows from the geometry.
type Topology = [(VertexId, VertexId, f64)];

/// Builds a graph with geometric gains from positions (in global vertex
/// order) and a topology.
fn assemble(
    n_t: usize,
    n_r: usize,
    n_s: usize,
    positions: Vec<Point3>,
    topology: &Topology,
    g: Option<f64>,
    c: f64,
) -> Result<PropagationGraph, ScenarioError> {
    let global = |v: VertexId| match v.kind {
        VertexKind::Transmitter => v.index,
        VertexKind::Receiver => n_t + v.index,
        VertexKind::Scatterer => n_t + n_r + v.index,
    };
    let delays: Vec<f64> =
        topology.iter().map(|&(a, b, _)| distance(positions[global(a)], positions[global(b)]) / c).collect();
    let class_of = |i: usize| Edge::new(topology[i].0, topology[i].1, GainSpec::Direct, 0.0, 0.0).class();
    let classes: Vec<EdgeClass> = (0..topology.len()).map(|i| class_of(i).expect("admissible pair")).collect();

    let stats = |class| {
        let members = (0..topology.len()).filter(|&i| classes[i] == class).map(|i| delays[i]);
        ClassStats::of(class, members)
    };
    // Statistics are only needed for classes that have members.
    let has = |class| classes.contains(&class);
    let e_t = if has(EdgeClass::TxScatter) { Some(stats(EdgeClass::TxScatter)?) } else { None };
    let e_r = if has(EdgeClass::ScatterRx) { Some(stats(EdgeClass::ScatterRx)?) } else { None };
    let mut odi = vec![0usize; n_s];
    for (i, &(a, _, _)) in topology.iter().enumerate() {
        if classes[i] == EdgeClass::InterScatter {
            odi[a.index] += 1;
        }
    }

    let mut edges = Vec::with_capacity(topology.len());
    for (i, &(a, b, phase)) in topology.iter().enumerate() {
        let delay = delays[i];
        let gain = match classes[i] {
            EdgeClass::Direct => GainSpec::Direct,
            EdgeClass::TxScatter => {
                let s = e_t.expect("class is nonempty");
                GainSpec::TxScatter { mean_delay_s: s.mean_delay, inv_sq_delay_sum: s.inv_sq_delay_sum }
            }
            EdgeClass::ScatterRx => {
                let s = e_r.expect("class is nonempty");
                GainSpec::ScatterRx { mean_delay_s: s.mean_delay, inv_sq_delay_sum: s.inv_sq_delay_sum }
            }
            EdgeClass::InterScatter => {
                GainSpec::InterScatter { gain: g.expect("gain resolved"), out_degree: odi[a.index] }
            }
        };
        if classes[i] != EdgeClass::InterScatter && !(delay > 0.0) {
            let v = if a.kind == VertexKind::Scatterer { a } else { b };
            return Err(ScenarioError::DegenerateGeometry(v));
        }
        edges.push(Edge::new(a, b, gain, phase, delay));
    }
    Ok(PropagationGraph::new(n_t, n_r, n_s, edges, Some(positions))?)
}

/// One draw of positions, edges and phases; no spectral check.
fn draw_once(
    config: &ScenarioConfig,
    rule: InterScatterGain,
    streams: &mut ScenarioStreams,
) -> Result<(PropagationGraph, Option<f64>, Option<f64>), ScenarioError> {
    let (n_t, n_r, n_s) = (config.tx.len(), config.rx.len(), config.n_scatterers);
    let scatterers = draw_positions(&config.room, n_s, &mut streams.positions);
    let pairs = draw_edges(n_t, n_r, n_s, config.p_vis, config.p_dir, &mut streams.edges);
    let topology: Vec<_> = pairs.into_iter().map(|(a, b)| (a, b, streams.phases.random_range(0.0..TAU))).collect();
    let positions: Vec<Point3> = config.tx.iter().chain(&config.rx).copied().chain(scatterers).collect();

    let c = config.speed_of_light;
    let inter: Vec<f64> = topology
        .iter()
        .filter(|(a, b, _)| a.kind == VertexKind::Scatterer && b.kind == VertexKind::Scatterer)
        .map(|&(a, b, _)| distance(positions[n_t + n_r + a.index], positions[n_t + n_r + b.index]) / c)
        .collect();
    let mu_es = (!inter.is_empty()).then(|| inter.iter().sum::<f64>() / inter.len() as f64);
    let g = mu_es.map(|mu| match rule {
        InterScatterGain::Fixed(g) => g,
        InterScatterGain::Slope(s) => gain_from_slope(s, mu),
    });
    let graph = assemble(n_t, n_r, n_s, positions, &topology, g, c)?;
    Ok((graph, mu_es, g))
}

/// Draws graphs until one passes the spectral-radius check at
/// [`VALIDATION_POINTS`] frequencies of `grid`.
///
/// Streams are seeded from `config.seed` and keep advancing across rejected
/// attempts. Degenerate geometry counts as a rejection.
pub fn generate_realization(config: &ScenarioConfig, grid: &FrequencyGrid) -> Result<ScenarioRealization, ScenarioError> {
    config.validate()?;
    let rule = config.gain_rule()?;
    let freqs = grid.subgrid(VALIDATION_POINTS);
    let mut streams = ScenarioStreams::new(config.seed);
    let limit = config.max_rejections.saturating_add(1);
    for attempt in 1..=limit {
        let (graph, mu_es, resolved_g) = match draw_once(config, rule, &mut streams) {
            Ok(x) => x,
            Err(ScenarioError::DegenerateGeometry(_) | ScenarioError::EmptyEdgeClass(_)) => continue,
            Err(e) => return Err(e),
        };
        if spectrally_admissible(&graph, &freqs)? {
            return Ok(ScenarioRealization { graph, attempts: attempt, mu_es, resolved_g });
        }
        log::debug!("seed {}: attempt {attempt} rejected on spectral radius", config.seed);
    }
    Err(ScenarioError::RejectionLimitExceeded { attempts: limit })
}

fn spectrally_admissible(graph: &PropagationGraph, freqs: &[f64]) -> Result<bool, ScenarioError> {
    if graph.class_size(EdgeClass::InterScatter) == 0 {
        return Ok(true);
    }
    for &f in freqs {
        if NormBoundRadius.estimate(&graph.adjacency_blocks(f).b)?.value > SPECTRAL_LIMIT {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The same realization seen from receiver `rx` at `position`.
///
/// Topology, phases and the inter-scatterer gain are kept; delays of edges
/// into the moved receiver and the receiver-class statistics are recomputed.
/// The transmitter and scatterer blocks are unchanged.
pub fn with_receiver_position(
    graph: &PropagationGraph,
    rx: usize,
    position: Point3,
    speed_of_light: f64,
) -> Result<PropagationGraph, ScenarioError> {
    let (n_t, n_r, n_s) = (graph.n_t(), graph.n_r(), graph.n_s());
    if rx >= n_r {
        return Err(GraphError::VertexOutOfRange(VertexId::rx(rx)).into());
    }
    let mut positions = graph.positions().ok_or(ScenarioError::MissingPositions)?.to_vec();
    positions[n_t + rx] = position;
    let topology: Vec<_> = graph.edges().iter().map(|e| (e.init, e.term, e.phase)).collect();
    let g = graph.edges().iter().find_map(|e| match e.gain {
        GainSpec::InterScatter { gain, .. } => Some(gain),
        _ => None,
    });
    assemble(n_t, n_r, n_s, positions, &topology, g, speed_of_light)
}

/// Points of an `nx x ny` horizontal grid with spacing `step`, centered on
/// `center`.
pub fn horizontal_grid(center: Point3, nx: usize, ny: usize, step: f64) -> Vec<Point3> {
    let offset = |i: usize, n: usize| (i as f64 - (n as f64 - 1.0) / 2.0) * step;
    let mut out = Vec::with_capacity(nx * ny);
    for iy in 0..ny {
        for ix in 0..nx {
            out.push([center[0] + offset(ix, nx), center[1] + offset(iy, ny), center[2]]);
        }
    }
    out
}

#[cfg(test)]
mod tests;
