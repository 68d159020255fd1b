//! Command-line front end of the channel simulator. Each mode is an
//! [`experiments::Experiment`] looked up by name; [`run`] resolves the spec,
//! runs the mode and writes its files in one pass.

pub mod config;
pub mod experiments;
pub mod output;
pub mod validate;

use std::path::{Path, PathBuf};

use clap::Parser;
use thiserror::Error;

use revgraph_core::scenario::ScenarioError;
use revgraph_core::signal::{FrequencyGrid, SignalError};
use revgraph_core::transfer::TransferError;

use config::{load_config, ConfigError, ExperimentSpec, Mode};
use experiments::{experiments, Report};
use output::{config_hash, Metadata, OutputSet};

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "REVGRAPH_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Transfer(#[from] TransferError),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    /// 2 for bad input, 1 for everything that failed at run time.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "revgraph", version, about = "Propagation-graph channel experiments")]
pub struct Args {
    /// response, dissect, ensemble, spatial or validate
    #[arg(value_parser = parse_mode)]
    pub mode: Mode,
    /// JSON experiment file; omitted fields take the reference defaults
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub runs: Option<usize>,
    /// fmin,fmax,M in Hz; repeat for several grids. Replaces the configured grids.
    #[arg(long = "grid", value_parser = parse_grid)]
    pub grids: Vec<FrequencyGrid>,
    #[arg(long)]
    pub kmax: Option<usize>,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    Mode::ALL
        .into_iter()
        .find(|m| m.name() == s)
        .ok_or_else(|| format!("expected one of {:?}", Mode::ALL.map(Mode::name)))
}

fn parse_grid(s: &str) -> Result<FrequencyGrid, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [a, b, m] = parts[..] else {
        return Err("expected fmin,fmax,M".into());
    };
    let num = |x: &str| x.parse::<f64>().map_err(|e| format!("{x}: {e}"));
    let m = m.parse::<usize>().map_err(|e| format!("{m}: {e}"))?;
    FrequencyGrid::new(num(a)?, num(b)?, m).map_err(|e| e.to_string())
}

impl Args {
    /// Loads the config (or the defaults), applies the flags and revalidates.
    pub fn spec(&self) -> Result<ExperimentSpec, CliError> {
        let mut spec = match &self.config {
            Some(path) => load_config(path)?,
            None => ExperimentSpec::default(),
        };
        spec.mode = self.mode;
        if let Some(seed) = self.seed {
            spec.scenario.seed = seed;
        }
        if let Some(runs) = self.runs {
            spec.runs = runs;
        }
        if let Some(kmax) = self.kmax {
            spec.kmax = kmax;
        }
        if !self.grids.is_empty() {
            spec.grids = self.grids.clone();
        }
        spec.validate()?;
        Ok(spec)
    }
}

/// Runs `spec.mode` and writes its files, `config.json`, `axes.txt` and
/// `metadata.json` to `out_dir`. Nothing is written if the run fails.
pub fn run(spec: &ExperimentSpec, out_dir: &Path) -> Result<Report, CliError> {
    let registry = experiments();
    let experiment = registry
        .get(spec.mode.name())
        .ok_or_else(|| CliError::Usage(format!("no experiment registered for {}", spec.mode)))?;
    let mut out = OutputSet::default();
    let report = experiment.run(spec, &mut out)?;

    let canonical = spec.dump();
    let data_files: Vec<String> = out.names().map(str::to_owned).collect();
    let meta = Metadata {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        mode: spec.mode.name(),
        config_sha256: config_hash(&canonical),
        grids: &spec.grids,
        window: &spec.window,
        seeds: report.seeds.clone(),
        files: data_files.iter().map(String::as_str).collect(),
    };
    let meta = serde_json::to_string_pretty(&meta).expect("metadata serializes") + "\n";
    let axes = out.axes_text();
    out.add("axes.txt", axes, "this file");
    out.add("metadata.json", meta, "run metadata; not plotted");
    out.add("config.json", canonical, "resolved experiment spec; loadable with --config");
    out.write_all(out_dir)?;
    Ok(report)
}

/// Builds the global rayon pool from `REVGRAPH_THREADS` if set.
pub fn init_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {value:?}")))?;
    // A second call in the same process keeps the first pool.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Full command: thread setup, spec resolution and run. Returns the exit code.
pub fn main_with(args: &Args) -> i32 {
    let result = init_threads().and_then(|()| args.spec()).and_then(|spec| {
        log::info!("{} into {}", spec.mode, args.out.display());
        run(&spec, &args.out)
    });
    match result {
        Ok(report) => {
            for line in &report.lines {
                println!("{line}");
            }
            if report.failed > 0 {
                println!("{} of {} checks failed", report.failed, report.passed + report.failed);
                1
            } else {
                if report.passed > 0 {
                    println!("all {} checks passed", report.passed);
                }
                0
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_flag() {
        let g = parse_grid("2e9,3e9,1024").unwrap();
        assert_eq!((g.f_min(), g.f_max(), g.len()), (2e9, 3e9, 1024));
        assert!(parse_grid("2e9,3e9").is_err());
        assert!(parse_grid("3e9,2e9,16").is_err());
    }

    #[test]
    fn flags_override_config() {
        let args = Args::try_parse_from([
            "revgraph", "ensemble", "--out", "x", "--seed", "7", "--runs", "3", "--grid", "1e9,2e9,16", "--grid",
            "2e9,3e9,32", "--kmax", "2",
        ])
        .unwrap();
        let spec = args.spec().unwrap();
        assert_eq!(spec.mode, Mode::Ensemble);
        assert_eq!((spec.scenario.seed, spec.runs, spec.kmax), (7, 3, 2));
        assert_eq!(spec.grids.len(), 2);
        assert_eq!(spec.grids[1].len(), 32);
    }

    #[test]
    fn zero_runs_is_a_config_error() {
        let args = Args::try_parse_from(["revgraph", "ensemble", "--out", "x", "--runs", "0"]).unwrap();
        let err = args.spec().unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("runs"));
    }
}
