//! Phase-report and processed-series CSV files.
//!
//! Reports: `t_s,phi_rad,freq_hz`, one report per row. This is also how
//! externally captured traces are ingested. Processed series:
//! `t_s,dphi_rad_per_s` on a uniform grid.

use std::path::Path;

use tapauth_core::dsp::{PhaseReport, ProcessedSeries};
use tapauth_core::units::TWO_PI;

use crate::error::{HarnessError, Result};
use crate::formats::{read_text, write_text};

pub const REPORT_HEADER: [&str; 3] = ["t_s", "phi_rad", "freq_hz"];
pub const SERIES_HEADER: [&str; 2] = ["t_s", "dphi_rad_per_s"];

/// Renders a tidy CSV from a header and rows of already formatted cells.
pub fn render_csv<S: AsRef<str>>(header: &[&str], rows: impl IntoIterator<Item = Vec<S>>) -> String {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r.iter().map(AsRef::as_ref)).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
}

/// Parses a CSV with exactly `header` into rows of floats.
pub fn parse_float_csv(text: &str, header: &[&str], path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let found = r.headers().map_err(|e| HarnessError::format(path, e))?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(HarnessError::format(
            path,
            format!(
                "expected header {}, found {}",
                header.join(","),
                found.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| HarnessError::format(path, e))?;
        let row: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        let row = row.map_err(|e| HarnessError::format(path, format!("row {}: {e}", i + 1)))?;
        if row.iter().any(|x| !x.is_finite()) {
            return Err(HarnessError::format(path, format!("row {}: non-finite value", i + 1)));
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn reports_to_csv(reports: &[PhaseReport]) -> String {
    render_csv(
        &REPORT_HEADER,
        reports
            .iter()
            .map(|r| vec![r.t.to_string(), r.phi.to_string(), r.freq.to_string()]),
    )
}

/// Parses and checks a report CSV: phases in `[0, 2 pi)`, times strictly
/// increasing, positive frequencies.
pub fn reports_from_csv(text: &str, path: &Path) -> Result<Vec<PhaseReport>> {
    let rows = parse_float_csv(text, &REPORT_HEADER, path)?;
    let reports: Vec<PhaseReport> = rows
        .iter()
        .map(|r| PhaseReport {
            t: r[0],
            phi: r[1],
            freq: r[2],
        })
        .collect();
    for (i, r) in reports.iter().enumerate() {
        if !(0.0..TWO_PI).contains(&r.phi) {
            return Err(HarnessError::format(
                path,
                format!("row {}: phase {} outside [0, 2 pi)", i + 1, r.phi),
            ));
        }
        if !(r.freq > 0.0) {
            return Err(HarnessError::format(
                path,
                format!("row {}: frequency must be positive", i + 1),
            ));
        }
        if i > 0 && !(r.t > reports[i - 1].t) {
            return Err(HarnessError::format(
                path,
                format!("row {}: times must strictly increase", i + 1),
            ));
        }
    }
    Ok(reports)
}

pub fn write_reports(path: &Path, reports: &[PhaseReport]) -> Result<()> {
    write_text(path, &reports_to_csv(reports))
}

pub fn read_reports(path: &Path) -> Result<Vec<PhaseReport>> {
    reports_from_csv(&read_text(path)?, path)
}

pub fn series_to_csv(s: &ProcessedSeries) -> String {
    render_csv(
        &SERIES_HEADER,
        s.values
            .iter()
            .enumerate()
            .map(|(i, v)| vec![s.time(i).to_string(), v.to_string()]),
    )
}

/// Parses a series CSV back onto its grid. The processing metadata is not
/// stored in the file and comes back as 1.
pub fn series_from_csv(text: &str, path: &Path) -> Result<ProcessedSeries> {
    let rows = parse_float_csv(text, &SERIES_HEADER, path)?;
    let t: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let values: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    let (t0, dt) = match t.as_slice() {
        [] => return Err(HarnessError::format(path, "empty series")),
        [t0] => (*t0, 1.0),
        [t0, t1, ..] => (*t0, t1 - t0),
    };
    if !(dt > 0.0) {
        return Err(HarnessError::format(path, "times must strictly increase"));
    }
    for (i, ti) in t.iter().enumerate() {
        let expect = t0 + i as f64 * dt;
        if (ti - expect).abs() > 1e-9 * (1.0 + expect.abs()) {
            return Err(HarnessError::format(
                path,
                format!("row {}: grid is not uniform", i + 1),
            ));
        }
    }
    Ok(ProcessedSeries::from_values(t0, dt, values))
}

pub fn write_series(path: &Path, s: &ProcessedSeries) -> Result<()> {
    write_text(path, &series_to_csv(s))
}

pub fn read_series(path: &Path) -> Result<ProcessedSeries> {
    series_from_csv(&read_text(path)?, path)
}
