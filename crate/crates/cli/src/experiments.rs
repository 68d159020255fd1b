//! The runnable modes, one strategy object each, looked up by name.

use revgraph_core::registry::{Named, Registry};
use revgraph_core::scenario::{generate_realization, horizontal_grid, inside, ScenarioRealization};
use revgraph_core::signal::{
    ensemble_spectra, entry_series, export, fit_tail_slope, sample_ranges, windows, DelayPowerSpectrum,
    EnsembleRequest, FrequencyGrid, SpatialSweep, Synthesizer, WindowSpectrum,
};
use revgraph_core::transfer::BounceRange;

use crate::config::{ExperimentSpec, Mode};
use crate::output::{grid_tag, OutputSet};
use crate::validate::run_checks;
use crate::CliError;

/// Summary of one run. `failed` counts failed checks, which only the
/// validate mode produces.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Report {
    pub lines: Vec<String>,
    pub passed: usize,
    pub failed: usize,
    pub seeds: Vec<u64>,
}

pub trait Experiment: Named + Send + Sync {
    fn mode(&self) -> Mode;
    fn run(&self, spec: &ExperimentSpec, out: &mut OutputSet) -> Result<Report, CliError>;
}

pub fn experiments() -> Registry<dyn Experiment> {
    let mut reg: Registry<dyn Experiment> = Registry::new();
    reg.register(Box::new(Response))
        .register(Box::new(Dissect))
        .register(Box::new(Ensemble))
        .register(Box::new(Spatial))
        .register(Box::new(Validate));
    reg
}

pub(crate) fn synthesizer(spec: &ExperimentSpec, grid: FrequencyGrid) -> Result<Synthesizer, CliError> {
    let registry = windows();
    let window = registry.get(&spec.window).ok_or_else(|| CliError::Usage(format!("unknown window {}", spec.window)))?;
    Ok(Synthesizer::new(WindowSpectrum::new(window, grid)?))
}

fn realization(spec: &ExperimentSpec) -> Result<ScenarioRealization, CliError> {
    let real = generate_realization(&spec.scenario, &spec.grids[0])?;
    log::info!("seed {}: accepted after {} attempt(s)", spec.scenario.seed, real.attempts);
    Ok(real)
}

fn realization_lines(real: &ScenarioRealization) -> Vec<String> {
    let fmt = |x: Option<f64>, scale: f64| x.map(|v| format!("{:.4}", v * scale)).unwrap_or_else(|| "n/a".into());
    vec![
        format!("edges: {}, attempts: {}", real.graph.edges().len(), real.attempts),
        format!("mean inter-scatterer delay: {} ns, g: {}", fmt(real.mu_es, 1e9), fmt(real.resolved_g, 1.0)),
    ]
}

fn pair_suffix(n_r: usize, n_t: usize, rx: usize, tx: usize) -> String {
    if n_r * n_t == 1 {
        String::new()
    } else {
        format!("_rx{}_tx{}", rx + 1, tx + 1)
    }
}

const TRANSFER_AXES: &str = "x = freq_hz; y = 20 log10 |re + j im| in dB";
const RESPONSE_AXES: &str = "x = delay_s; y = 20 log10 |re + j im| in dB";
const SPECTRUM_AXES: &str = "x = delay_s; y = power_db (10 log10 of the linear power column)";

fn add_realization(out: &mut OutputSet, real: &ScenarioRealization) {
    out.add("realization.json", real.to_json() + "\n", "graph document with attempts, mu_es and resolved_g; not plotted");
}

fn tail_line(spectrum: &DelayPowerSpectrum, spec: &ExperimentSpec, label: &str) -> String {
    let [a, b] = spec.tail_window_ns;
    match fit_tail_slope(spectrum, a, b) {
        Ok(fit) => format!(
            "{label}: tail slope {:.3} dB/ns over [{a}, {b}] ns (rms residual {:.2} dB)",
            fit.slope_db_per_ns, fit.residual_rms_db
        ),
        Err(e) => format!("{label}: no tail fit ({e})"),
    }
}

fn tail_json(spectra: &[(&str, &DelayPowerSpectrum)], spec: &ExperimentSpec) -> String {
    let [a, b] = spec.tail_window_ns;
    let entries: Vec<serde_json::Value> = spectra
        .iter()
        .map(|(label, s)| match fit_tail_slope(s, a, b) {
            Ok(fit) => serde_json::json!({ "spectrum": label, "window_ns": [a, b], "fit": fit }),
            Err(e) => serde_json::json!({ "spectrum": label, "window_ns": [a, b], "error": e.to_string() }),
        })
        .collect();
    serde_json::to_string_pretty(&entries).expect("json") + "\n"
}

/// Transfer function and impulse response of one realization per grid.
pub struct Response;

impl Named for Response {
    fn name(&self) -> &'static str {
        "response"
    }
}

impl Experiment for Response {
    fn mode(&self) -> Mode {
        Mode::Response
    }

    fn run(&self, spec: &ExperimentSpec, out: &mut OutputSet) -> Result<Report, CliError> {
        let real = realization(spec)?;
        let g = &real.graph;
        let mut lines = realization_lines(&real);
        for &grid in &spec.grids {
            let synth = synthesizer(spec, grid)?;
            let samples = sample_ranges(g, &grid, &[BounceRange::full()])?.remove(0);
            let tag = grid_tag(&grid);
            for rx in 0..g.n_r() {
                for tx in 0..g.n_t() {
                    let suffix = pair_suffix(g.n_r(), g.n_t(), rx, tx);
                    let h = entry_series(&samples, rx, tx);
                    let y = synth.synthesize(&h)?;
                    let peak = y.power().iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map_or(0, |p| p.0);
                    lines.push(format!("{tag}{suffix}: strongest arrival at {:.2} ns", peak as f64 * grid.dtau() * 1e9));
                    out.add(format!("transfer_{tag}{suffix}.csv"), export::transfer_csv(&grid, &h), TRANSFER_AXES);
                    out.add(format!("response_{tag}{suffix}.csv"), export::response_csv(&y), RESPONSE_AXES);
                }
            }
        }
        add_realization(out, &real);
        Ok(Report { lines, seeds: vec![spec.scenario.seed], ..Default::default() })
    }
}

/// Partial responses of one realization: every `K:L` with
/// `K <= L <= kmax`, and the remainders `K:inf`.
pub struct Dissect;

impl Named for Dissect {
    fn name(&self) -> &'static str {
        "dissect"
    }
}

pub fn dissection_ranges(kmax: usize) -> Vec<BounceRange> {
    let mut ranges = Vec::new();
    for k in 0..=kmax {
        ranges.extend((k..=kmax).map(|l| BounceRange::new(k, Some(l)).expect("k <= l")));
        ranges.push(BounceRange::from(k));
    }
    ranges
}

fn range_label(r: BounceRange) -> String {
    match r.last() {
        Some(l) => format!("{}-{l}", r.first()),
        None => format!("{}-inf", r.first()),
    }
}

impl Experiment for Dissect {
    fn mode(&self) -> Mode {
        Mode::Dissect
    }

    fn run(&self, spec: &ExperimentSpec, out: &mut OutputSet) -> Result<Report, CliError> {
        let real = realization(spec)?;
        let mut lines = realization_lines(&real);
        let ranges = dissection_ranges(spec.kmax);
        for &grid in &spec.grids {
            let synth = synthesizer(spec, grid)?;
            let tag = grid_tag(&grid);
            let sampled = sample_ranges(&real.graph, &grid, &ranges)?;
            let delays = grid.delays();
            for (range, samples) in ranges.iter().zip(&sampled) {
                let y = synth.synthesize(&entry_series(samples, 0, 0))?;
                let re: Vec<f64> = y.samples.iter().map(|z| z.re).collect();
                let im: Vec<f64> = y.samples.iter().map(|z| z.im).collect();
                let db: Vec<f64> = y.power().iter().map(|p| 10.0 * p.log10()).collect();
                let text = export::columns_csv("delay_s", &delays, &[("re", &re), ("im", &im), ("power_db", &db)]);
                out.add(format!("dissect_{tag}_{}.csv", range_label(*range)), text, RESPONSE_AXES);
                if range.last() == Some(range.first()) && range.first() > 0 {
                    let p = y.power();
                    let peak = (0..p.len()).max_by(|&a, &b| p[a].total_cmp(&p[b])).unwrap_or(0);
                    lines.push(format!("{tag} {range}: peak at {:.1} ns", peak as f64 * grid.dtau() * 1e9));
                }
            }
        }
        lines.push(format!("{} partial responses per grid", ranges.len()));
        add_realization(out, &real);
        Ok(Report { lines, seeds: vec![spec.scenario.seed], ..Default::default() })
    }
}

/// Monte Carlo delay-power spectra over independent realizations.
pub struct Ensemble;

impl Named for Ensemble {
    fn name(&self) -> &'static str {
        "ensemble"
    }
}

impl Experiment for Ensemble {
    fn mode(&self) -> Mode {
        Mode::Ensemble
    }

    fn run(&self, spec: &ExperimentSpec, out: &mut OutputSet) -> Result<Report, CliError> {
        let synths = spec.grids.iter().map(|&g| synthesizer(spec, g)).collect::<Result<Vec<_>, _>>()?;
        let request =
            EnsembleRequest { grids: spec.grids.clone(), ranges: vec![BounceRange::full()], runs: spec.runs, pair: (0, 0) };
        let result = ensemble_spectra(&spec.scenario, &request, &synths)?;
        let mut lines = vec![format!("{} runs", spec.runs)];
        let mut labelled = Vec::new();
        for (i, grid) in spec.grids.iter().enumerate() {
            let tag = grid_tag(grid);
            let spectrum = &result.spectra[i][0];
            lines.push(tail_line(spectrum, spec, &tag));
            out.add(format!("dps_ensemble_{tag}.csv"), export::spectrum_csv(spectrum), SPECTRUM_AXES);
            let power = &result.transfer_power[i][0];
            let db: Vec<f64> = power.iter().map(|p| 10.0 * p.log10()).collect();
            let freqs: Vec<f64> = grid.frequencies().collect();
            out.add(
                format!("transfer_power_{tag}.csv"),
                export::columns_csv("freq_hz", &freqs, &[("power", power), ("power_db", &db)]),
                "x = freq_hz (log scale); y = power_db, mean |H|^2 over the ensemble",
            );
            labelled.push((tag, spectrum));
        }
        let refs: Vec<(&str, &DelayPowerSpectrum)> = labelled.iter().map(|(t, s)| (t.as_str(), *s)).collect();
        out.add("tail_fit.json", tail_json(&refs, spec), "least-squares tail fits; not plotted");
        Ok(Report { lines, seeds: result.seeds, ..Default::default() })
    }
}

/// Delay-power spectrum of one realization averaged over receiver positions.
pub struct Spatial;

impl Named for Spatial {
    fn name(&self) -> &'static str {
        "spatial"
    }
}

impl Experiment for Spatial {
    fn mode(&self) -> Mode {
        Mode::Spatial
    }

    fn run(&self, spec: &ExperimentSpec, out: &mut OutputSet) -> Result<Report, CliError> {
        let sp = &spec.spatial;
        let positions = horizontal_grid(spec.spatial_center(), sp.nx, sp.ny, sp.step_m);
        if let Some(p) = positions.iter().find(|p| !inside(&spec.scenario.room, p)) {
            return Err(CliError::Usage(format!("receiver position {p:?} lies outside the room")));
        }
        let real = realization(spec)?;
        let mut lines = realization_lines(&real);
        lines.push(format!("{} receiver positions", positions.len()));
        let mut labelled = Vec::new();
        for &grid in &spec.grids {
            let synth = synthesizer(spec, grid)?;
            let tag = grid_tag(&grid);
            let sweep = SpatialSweep::new(&real.graph, 0, &positions, grid, spec.scenario.speed_of_light)?;
            let spectrum = sweep.spectrum(&synth, 0)?;
            lines.push(tail_line(&spectrum, spec, &tag));
            out.add(format!("dps_spatial_{tag}.csv"), export::spectrum_csv(&spectrum), SPECTRUM_AXES);
            labelled.push((tag, spectrum));
        }
        let refs: Vec<(&str, &DelayPowerSpectrum)> = labelled.iter().map(|(t, s)| (t.as_str(), s)).collect();
        out.add("tail_fit.json", tail_json(&refs, spec), "least-squares tail fits; not plotted");
        add_realization(out, &real);
        Ok(Report { lines, seeds: vec![spec.scenario.seed], ..Default::default() })
    }
}

/// Oracle and invariant checks on realizations of the configured scenario.
pub struct Validate;

impl Named for Validate {
    fn name(&self) -> &'static str {
        "validate"
    }
}

impl Experiment for Validate {
    fn mode(&self) -> Mode {
        Mode::Validate
    }

    fn run(&self, spec: &ExperimentSpec, out: &mut OutputSet) -> Result<Report, CliError> {
        let (checks, seeds) = run_checks(spec)?;
        let passed = checks.iter().filter(|c| c.pass).count();
        let lines: Vec<String> = checks
            .iter()
            .map(|c| format!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail))
            .collect();
        let json = serde_json::to_string_pretty(&checks).expect("json") + "\n";
        out.add("checks.json", json, "check results; not plotted");
        Ok(Report { lines, passed, failed: checks.len() - passed, seeds })
    }
}
