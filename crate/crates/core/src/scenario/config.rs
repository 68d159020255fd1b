use serde::{Deserialize, Serialize};

use crate::graph::Point3;

use super::ScenarioError;

/// Axis-aligned box, one `[low, high]` interval per axis, in meters.
pub type Room = [[f64; 2]; 3];

/// How the inter-scatterer gain `g` is obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InterScatterGain {
    /// Calibrated per realization from a tail slope in dB/ns.
    Slope(f64),
    /// Used as given.
    Fixed(f64),
}

/// Parameters of the in-room model. Defaults reproduce the reference
/// setup: a 5 x 5 x 2.6 m room, one transmitter, one receiver, ten
/// scatterers and a -0.4 dB/ns tail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "ConfigDocument")]
pub struct ScenarioConfig {
    pub room: Room,
    pub tx: Vec<Point3>,
    pub rx: Vec<Point3>,
    pub n_scatterers: usize,
    pub p_vis: f64,
    pub p_dir: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_slope_db_per_ns: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inter_scatterer_gain: Option<f64>,
    pub speed_of_light: f64,
    pub seed: u64,
    pub max_rejections: usize,
}

pub const DEFAULT_TAIL_SLOPE_DB_PER_NS: f64 = -0.4;

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            room: [[0.0, 5.0], [0.0, 5.0], [0.0, 2.6]],
            tx: vec![[1.78, 1.0, 1.5]],
            rx: vec![[4.18, 4.0, 1.5]],
            n_scatterers: 10,
            p_vis: 0.8,
            p_dir: 1.0,
            tail_slope_db_per_ns: Some(DEFAULT_TAIL_SLOPE_DB_PER_NS),
            inter_scatterer_gain: None,
            speed_of_light: 3e8,
            seed: 0,
            max_rejections: 1000,
        }
    }
}

/// Wire form: every field optional, unknown fields rejected.
#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ConfigDocument {
    room: Room,
    tx: Vec<Point3>,
    rx: Vec<Point3>,
    n_scatterers: usize,
    p_vis: f64,
    p_dir: f64,
    tail_slope_db_per_ns: Option<f64>,
    inter_scatterer_gain: Option<f64>,
    speed_of_light: f64,
    seed: u64,
    max_rejections: usize,
}

impl Default for ConfigDocument {
    fn default() -> Self {
        let c = ScenarioConfig::default();
        Self {
            room: c.room,
            tx: c.tx,
            rx: c.rx,
            n_scatterers: c.n_scatterers,
            p_vis: c.p_vis,
            p_dir: c.p_dir,
            tail_slope_db_per_ns: None,
            inter_scatterer_gain: None,
            speed_of_light: c.speed_of_light,
            seed: c.seed,
            max_rejections: c.max_rejections,
        }
    }
}

impl From<ConfigDocument> for ScenarioConfig {
    fn from(d: ConfigDocument) -> Self {
        // The default slope applies only when neither gain rule is given.
        let tail_slope_db_per_ns = match (d.tail_slope_db_per_ns, d.inter_scatterer_gain) {
            (None, None) => Some(DEFAULT_TAIL_SLOPE_DB_PER_NS),
            (s, _) => s,
        };
        Self {
            room: d.room,
            tx: d.tx,
            rx: d.rx,
            n_scatterers: d.n_scatterers,
            p_vis: d.p_vis,
            p_dir: d.p_dir,
            tail_slope_db_per_ns,
            inter_scatterer_gain: d.inter_scatterer_gain,
            speed_of_light: d.speed_of_light,
            seed: d.seed,
            max_rejections: d.max_rejections,
        }
    }
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::InvalidConfig { field, reason: reason.into() }
}

pub fn inside(room: &Room, p: &Point3) -> bool {
    p.iter().zip(room).all(|(x, [lo, hi])| x.is_finite() && *lo <= *x && *x <= *hi)
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        for [lo, hi] in &self.room {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(invalid("room", "every axis needs low < high"));
            }
        }
        for (field, points) in [("tx", &self.tx), ("rx", &self.rx)] {
            if points.is_empty() {
                return Err(invalid(field, "at least one position required"));
            }
            if let Some(p) = points.iter().find(|p| !inside(&self.room, p)) {
                return Err(invalid(field, format!("{p:?} lies outside the room")));
            }
        }
        for (field, p) in [("p_vis", self.p_vis), ("p_dir", self.p_dir)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(invalid(field, "not in [0,1]"));
            }
        }
        self.gain_rule()?;
        if !(self.speed_of_light.is_finite() && self.speed_of_light > 0.0) {
            return Err(invalid("speed_of_light", "must be positive"));
        }
        Ok(())
    }

    /// The configured gain rule; exactly one of the two fields must be set.
    pub fn gain_rule(&self) -> Result<InterScatterGain, ScenarioError> {
        match (self.tail_slope_db_per_ns, self.inter_scatterer_gain) {
            (Some(_), Some(_)) => {
                Err(invalid("inter_scatterer_gain", "conflicts with tail_slope_db_per_ns; give only one"))
            }
            (None, None) => Err(invalid("tail_slope_db_per_ns", "either this or inter_scatterer_gain is required")),
            (Some(s), None) if !(s.is_finite() && s < 0.0) => Err(invalid("tail_slope_db_per_ns", "must be negative")),
            (Some(s), None) => Ok(InterScatterGain::Slope(s)),
            // Values >= 1 are accepted; the rejection loop then decides.
            (None, Some(g)) if !(g.is_finite() && g > 0.0) => Err(invalid("inter_scatterer_gain", "must be positive")),
            (None, Some(g)) => Ok(InterScatterGain::Fixed(g)),
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
