//! Collected output files, written in one pass after all computation.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use revgraph_core::signal::FrequencyGrid;

use crate::CliError;

/// Files keyed by name; a `BTreeMap` keeps the write order stable.
#[derive(Debug, Default)]
pub struct OutputSet {
    files: BTreeMap<String, String>,
    axes: Vec<String>,
}

impl OutputSet {
    pub fn add(&mut self, name: impl Into<String>, contents: String, axes: &str) {
        let name = name.into();
        self.axes.push(format!("{name}: {axes}"));
        self.files.insert(name, contents);
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.keys().map(String::as_str)
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.files.get(name).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.files.len()
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }

    /// Plain-text description of every data file's axes.
    pub fn axes_text(&self) -> String {
        let mut text = String::from("Plot axes per data file. Delays in seconds, frequencies in Hz.\n\n");
        for line in &self.axes {
            text.push_str(line);
            text.push('\n');
        }
        text
    }

    pub fn write_all(&self, dir: &Path) -> Result<(), CliError> {
        let io = |path: &Path| {
            let path = path.display().to_string();
            move |source| CliError::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io(dir))?;
        for (name, contents) in &self.files {
            let path = dir.join(name);
            fs::write(&path, contents).map_err(io(&path))?;
        }
        Ok(())
    }
}

/// Short tag for file names, e.g. `2-3GHz`.
pub fn grid_tag(grid: &FrequencyGrid) -> String {
    format!("{}-{}GHz", grid.f_min() / 1e9, grid.f_max() / 1e9)
}

/// Hex SHA-256 of the canonical config text.
pub fn config_hash(canonical: &str) -> String {
    Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Serialize)]
pub struct Metadata<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub mode: &'a str,
    pub config_sha256: String,
    pub grids: &'a [FrequencyGrid],
    pub window: &'a str,
    pub seeds: Vec<u64>,
    pub files: Vec<&'a str>,
}
