//! I/Q trace files: a `# iqtrace v1 sample_rate=<Hz> t0=<s>` line, then one
//! `i,q` row per sample. Markers live in a JSON sidecar next to the trace.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use tapauth_core::phy::{IqTrace, Marker};

use crate::error::{HarnessError, Result};
use crate::formats::{read_json, read_text, write_json, write_text};

const MAGIC: &str = "# iqtrace v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MarkerFile {
    markers: Vec<Marker>,
}

/// `trace.iq` -> `trace.markers.json`.
pub fn markers_path(trace: &Path) -> PathBuf {
    trace.with_extension("markers.json")
}

pub fn trace_to_text(trace: &IqTrace) -> String {
    let mut out = format!("{MAGIC} sample_rate={} t0={}\n", trace.sample_rate, trace.t0);
    for s in &trace.samples {
        out.push_str(&format!("{},{}\n", s.re, s.im));
    }
    out
}

/// Parses the sample file; markers are left empty.
pub fn trace_from_text(text: &str, path: &Path) -> Result<IqTrace> {
    let mut lines = text.lines();
    let head = lines.next().ok_or_else(|| HarnessError::format(path, "empty trace"))?;
    let rest = head
        .strip_prefix(MAGIC)
        .ok_or_else(|| HarnessError::format(path, format!("first line must start with `{MAGIC}`")))?;
    let mut sample_rate = None;
    let mut t0 = None;
    for field in rest.split_whitespace() {
        let (k, v) = field
            .split_once('=')
            .ok_or_else(|| HarnessError::format(path, format!("bad header field `{field}`")))?;
        let v: f64 = v
            .parse()
            .map_err(|_| HarnessError::format(path, format!("bad number in `{field}`")))?;
        match k {
            "sample_rate" => sample_rate = Some(v),
            "t0" => t0 = Some(v),
            _ => return Err(HarnessError::format(path, format!("unknown header field `{k}`"))),
        }
    }
    let (Some(sample_rate), Some(t0)) = (sample_rate, t0) else {
        return Err(HarnessError::format(path, "header needs sample_rate and t0"));
    };
    let mut samples = Vec::new();
    for (n, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed = line
            .split_once(',')
            .and_then(|(i, q)| Some(Complex64::new(i.trim().parse().ok()?, q.trim().parse().ok()?)));
        samples.push(parsed.ok_or_else(|| HarnessError::format(path, format!("line {}: expected `i,q`", n + 2)))?);
    }
    let trace = IqTrace {
        sample_rate,
        t0,
        samples,
        markers: Vec::new(),
    };
    trace.validate().map_err(|e| HarnessError::format(path, e))?;
    Ok(trace)
}

pub fn write_trace(path: &Path, trace: &IqTrace) -> Result<()> {
    write_text(path, &trace_to_text(trace))?;
    write_json(
        &markers_path(path),
        &MarkerFile {
            markers: trace.markers.clone(),
        },
    )
}

/// Reads a trace and, if present, its marker sidecar.
pub fn read_trace(path: &Path) -> Result<IqTrace> {
    let mut trace = trace_from_text(&read_text(path)?, path)?;
    let mp = markers_path(path);
    if mp.exists() {
        trace.markers = read_json::<MarkerFile>(&mp)?.markers;
        trace.validate().map_err(|e| HarnessError::format(&mp, e))?;
    }
    Ok(trace)
}
