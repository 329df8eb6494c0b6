//! On-disk formats. CSV files carry plain decimal floats with a header row;
//! everything else is JSON.

pub mod iq;
pub mod link;
pub mod series;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use tapauth_core::adversary::{feasibility_from_measurements, MeasuredFeasibility, SnifferModel};

use crate::error::{HarnessError, Result};

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))
}

/// Writes `text`, creating parent directories.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| HarnessError::format(path, e))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?).map_err(|e| HarnessError::format(path, e))
}

/// Dataset manifest: user id to the report CSVs of that user's trials,
/// relative to the manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub seed: u64,
    pub users: BTreeMap<String, Vec<String>>,
}

impl DatasetManifest {
    pub fn trial_count(&self) -> usize {
        self.users.values().map(Vec::len).sum()
    }
}

pub fn user_id(u: usize) -> String {
    format!("user_{u:02}")
}

/// Outcome of one attack run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackReport {
    pub mode: String,
    pub theta_prime_size: Option<usize>,
    pub n_rounds: usize,
    pub per_round_success_rate: f64,
    /// `None` when no attempt succeeded and no closed form applies.
    pub log10_success_prob: Option<f64>,
    pub verified_accept: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeasibilityInput {
    pub d0_m: f64,
    pub p_cw_dbm: f64,
    pub p_bs_dbm: f64,
}

/// Feasibility report for one set of measured powers.
pub type FeasibilityReport = MeasuredFeasibility;

impl FeasibilityInput {
    pub fn decide(&self, sniffer: &SnifferModel) -> FeasibilityReport {
        feasibility_from_measurements(self.d0_m, self.p_cw_dbm, self.p_bs_dbm, sniffer)
    }
}
