//! Experiment files: one flat JSON object. Scenario fields keep their
//! reference names; every field is optional and falls back to the reference
//! setup.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use revgraph_core::graph::Point3;
use revgraph_core::scenario::{inside, Room, ScenarioConfig, ScenarioError, DEFAULT_TAIL_SLOPE_DB_PER_NS};
use revgraph_core::signal::{windows, FrequencyGrid};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parse error at line {line}, column {column}{}: {message}", field_suffix(.field))]
    Parse { line: usize, column: usize, field: Option<String>, message: String },
    #[error("invalid {field}: {reason}")]
    Validation { field: String, reason: String },
}

fn field_suffix(field: &Option<String>) -> String {
    field.as_ref().map(|f| format!(" (field {f})")).unwrap_or_default()
}

fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Validation { field: field.to_owned(), reason: reason.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Response,
    Dissect,
    Ensemble,
    Spatial,
    Validate,
}

impl Mode {
    pub const ALL: [Mode; 5] = [Mode::Response, Mode::Dissect, Mode::Ensemble, Mode::Spatial, Mode::Validate];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Response => "response",
            Mode::Dissect => "dissect",
            Mode::Ensemble => "ensemble",
            Mode::Spatial => "spatial",
            Mode::Validate => "validate",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Receiver grid of the spatial mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpatialGrid {
    pub nx: usize,
    pub ny: usize,
    pub step_m: f64,
    /// Defaults to the first receiver.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Point3>,
}

impl Default for SpatialGrid {
    fn default() -> Self {
        Self { nx: 30, ny: 30, step_m: 0.01, center: None }
    }
}

/// A validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub mode: Mode,
    pub scenario: ScenarioConfig,
    pub grids: Vec<FrequencyGrid>,
    pub window: String,
    pub runs: usize,
    pub kmax: usize,
    pub spatial: SpatialGrid,
    pub tail_window_ns: [f64; 2],
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            mode: Mode::Response,
            scenario: ScenarioConfig::default(),
            grids: vec![
                FrequencyGrid::new(2e9, 3e9, 8192).expect("valid"),
                FrequencyGrid::new(1e9, 11e9, 8192).expect("valid"),
            ],
            window: "hann".into(),
            runs: 1000,
            kmax: 4,
            spatial: SpatialGrid::default(),
            tail_window_ns: [40.0, 120.0],
        }
    }
}

/// The on-disk form. Absent fields take the defaults of [`ExperimentSpec`].
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub room: Option<Room>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tx: Option<Vec<Point3>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rx: Option<Vec<Point3>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_scatterers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_vis: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_dir: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_slope_db_per_ns: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inter_scatterer_gain: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed_of_light: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_rejections: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grids: Option<Vec<GridEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kmax: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spatial: Option<SpatialGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_window_ns: Option<[f64; 2]>,
}

/// Unvalidated grid, so that a bad grid surfaces as a validation error
/// naming the field rather than as a parse error.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridEntry {
    pub f_min_hz: f64,
    pub f_max_hz: f64,
    pub samples: usize,
}

impl ExperimentFile {
    pub fn resolve(self) -> Result<ExperimentSpec, ConfigError> {
        let d = ExperimentSpec::default();
        let s = d.scenario;
        let tail_slope_db_per_ns = match (self.tail_slope_db_per_ns, self.inter_scatterer_gain) {
            (None, None) => Some(DEFAULT_TAIL_SLOPE_DB_PER_NS),
            (slope, _) => slope,
        };
        let scenario = ScenarioConfig {
            room: self.room.unwrap_or(s.room),
            tx: self.tx.unwrap_or(s.tx),
            rx: self.rx.unwrap_or(s.rx),
            n_scatterers: self.n_scatterers.unwrap_or(s.n_scatterers),
            p_vis: self.p_vis.unwrap_or(s.p_vis),
            p_dir: self.p_dir.unwrap_or(s.p_dir),
            tail_slope_db_per_ns,
            inter_scatterer_gain: self.inter_scatterer_gain,
            speed_of_light: self.speed_of_light.unwrap_or(s.speed_of_light),
            seed: self.seed.unwrap_or(s.seed),
            max_rejections: self.max_rejections.unwrap_or(s.max_rejections),
        };
        let grids = match self.grids {
            None => d.grids,
            Some(entries) => entries
                .iter()
                .enumerate()
                .map(|(i, g)| {
                    FrequencyGrid::new(g.f_min_hz, g.f_max_hz, g.samples)
                        .map_err(|e| invalid(&format!("grids[{i}]"), e.to_string()))
                })
                .collect::<Result<_, _>>()?,
        };
        let spec = ExperimentSpec {
            mode: self.mode.unwrap_or(d.mode),
            scenario,
            grids,
            window: self.window.unwrap_or(d.window),
            runs: self.runs.unwrap_or(d.runs),
            kmax: self.kmax.unwrap_or(d.kmax),
            spatial: self.spatial.unwrap_or(d.spatial),
            tail_window_ns: self.tail_window_ns.unwrap_or(d.tail_window_ns),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl From<&ExperimentSpec> for ExperimentFile {
    fn from(spec: &ExperimentSpec) -> Self {
        let s = &spec.scenario;
        Self {
            mode: Some(spec.mode),
            room: Some(s.room),
            tx: Some(s.tx.clone()),
            rx: Some(s.rx.clone()),
            n_scatterers: Some(s.n_scatterers),
            p_vis: Some(s.p_vis),
            p_dir: Some(s.p_dir),
            tail_slope_db_per_ns: s.tail_slope_db_per_ns,
            inter_scatterer_gain: s.inter_scatterer_gain,
            speed_of_light: Some(s.speed_of_light),
            seed: Some(s.seed),
            max_rejections: Some(s.max_rejections),
            grids: Some(
                spec.grids
                    .iter()
                    .map(|g| GridEntry { f_min_hz: g.f_min(), f_max_hz: g.f_max(), samples: g.len() })
                    .collect(),
            ),
            window: Some(spec.window.clone()),
            runs: Some(spec.runs),
            kmax: Some(spec.kmax),
            spatial: Some(spec.spatial.clone()),
            tail_window_ns: Some(spec.tail_window_ns),
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.scenario.validate().map_err(|e| match e {
            ScenarioError::InvalidConfig { field, reason } => invalid(field, reason),
            other => invalid("scenario", other.to_string()),
        })?;
        if self.grids.is_empty() {
            return Err(invalid("grids", "at least one grid required"));
        }
        if windows().get(&self.window).is_none() {
            return Err(invalid("window", format!("unknown window, expected one of {:?}", windows().names())));
        }
        if self.runs == 0 {
            return Err(invalid("runs", "must be at least 1"));
        }
        let [a, b] = self.tail_window_ns;
        if !(a.is_finite() && b.is_finite() && 0.0 <= a && a < b) {
            return Err(invalid("tail_window_ns", "need 0 <= start < end"));
        }
        let sp = &self.spatial;
        if sp.nx == 0 || sp.ny == 0 {
            return Err(invalid("spatial", "nx and ny must be at least 1"));
        }
        if !(sp.step_m.is_finite() && sp.step_m >= 0.0) {
            return Err(invalid("spatial", "step_m must be nonnegative"));
        }
        if let Some(c) = &sp.center {
            if !inside(&self.scenario.room, c) {
                return Err(invalid("spatial", "center lies outside the room"));
            }
        }
        Ok(())
    }

    pub fn spatial_center(&self) -> Point3 {
        self.spatial.center.unwrap_or(self.scenario.rx[0])
    }

    /// Canonical JSON of the full spec, every default spelled out.
    pub fn dump(&self) -> String {
        serde_json::to_string_pretty(&ExperimentFile::from(self)).expect("spec serializes") + "\n"
    }
}

/// Parses and validates an experiment document.
pub fn parse_config(text: &str) -> Result<ExperimentSpec, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: ExperimentFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let (line, column) = (inner.line(), inner.column());
        let full = inner.to_string();
        let message = full.strip_suffix(&format!(" at line {line} column {column}")).unwrap_or(&full).to_owned();
        ConfigError::Parse { line, column, field: (path != ".").then_some(path), message }
    })?;
    file.resolve()
}

pub fn load_config(path: &Path) -> Result<ExperimentSpec, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
    parse_config(&text)
}
