//! CSV output. Floats use Rust's shortest round-trip exponent form, so a
//! file parses back to the exact values written.

use std::fmt::Write as _;

use crate::C64;

use super::{DelayPowerSpectrum, FrequencyGrid, ImpulseResponse};

fn push_row(out: &mut String, values: &[f64]) {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write!(out, "{v:e}").expect("writing to a String");
    }
    out.push('\n');
}

/// `freq_hz,re,im` per grid sample.
pub fn transfer_csv(grid: &FrequencyGrid, h: &[C64]) -> String {
    let mut out = String::from("freq_hz,re,im\n");
    for (f, z) in grid.frequencies().zip(h) {
        push_row(&mut out, &[f, z.re, z.im]);
    }
    out
}

/// `delay_s,re,im` per delay bin.
pub fn response_csv(response: &ImpulseResponse) -> String {
    let mut out = String::from("delay_s,re,im\n");
    for (t, z) in response.delays().into_iter().zip(&response.samples) {
        push_row(&mut out, &[t, z.re, z.im]);
    }
    out
}

/// `delay_s,power,power_db` per delay bin.
pub fn spectrum_csv(spectrum: &DelayPowerSpectrum) -> String {
    let mut out = String::from("delay_s,power,power_db\n");
    for ((t, p), db) in spectrum.delays().into_iter().zip(&spectrum.power).zip(spectrum.db()) {
        push_row(&mut out, &[t, *p, db]);
    }
    out
}

/// Columns sharing one axis: `axis_name,<name>...`.
pub fn columns_csv(axis_name: &str, axis: &[f64], columns: &[(&str, &[f64])]) -> String {
    let mut out = String::from(axis_name);
    for (name, values) in columns {
        assert_eq!(values.len(), axis.len(), "column {name} has the wrong length");
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    let mut row = Vec::with_capacity(columns.len() + 1);
    for (i, x) in axis.iter().enumerate() {
        row.clear();
        row.push(*x);
        row.extend(columns.iter().map(|(_, v)| v[i]));
        push_row(&mut out, &row);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Parses a file written by this module. `inf`, `-inf` and `NaN` are
/// accepted, as written by the dB columns for zero power.
pub fn parse_csv(text: &str) -> Result<Table, String> {
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().ok_or("empty file")?.split(',').map(str::to_owned).collect();
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate() {
        let row = line
            .split(',')
            .map(|v| v.parse::<f64>().map_err(|e| format!("line {}: {v:?}: {e}", n + 2)))
            .collect::<Result<Vec<_>, _>>()?;
        if row.len() != header.len() {
            return Err(format!("line {}: {} fields, header has {}", n + 2, row.len(), header.len()));
        }
        rows.push(row);
    }
    Ok(Table { header, rows })
}
