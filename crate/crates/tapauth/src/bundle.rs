//! The summary every command writes as `bundle.json`.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::formats::write_json;
use crate::scenario::Scenario;

/// JSON schema for `bundle.json`.
pub const RESULT_BUNDLE_SCHEMA: &str = include_str!("../schema/result_bundle.schema.json");

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Metric names that are rates and must lie in `[0, 1]`.
const RATE_PREFIXES: [&str; 8] = [
    "accuracy",
    "tpr",
    "tnr",
    "fpr",
    "fnr",
    "rejection_rate",
    "accept_rate",
    "success_rate",
];

pub fn is_rate(name: &str) -> bool {
    RATE_PREFIXES
        .iter()
        .any(|p| name == *p || name.strip_prefix(p).is_some_and(|rest| rest.starts_with('_')))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Artifact {
    pub kind: String,
    /// Relative to the bundle directory.
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub scenario_hash: String,
    pub tool_version: String,
    pub seed: u64,
    pub created_unix_s: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultBundle {
    pub command: String,
    pub metrics: BTreeMap<String, f64>,
    pub artifacts: Vec<Artifact>,
    pub provenance: Provenance,
}

impl ResultBundle {
    pub fn new(command: &str, scenario: &Scenario, with_time: bool) -> Self {
        let created_unix_s = with_time.then(|| SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()));
        Self {
            command: command.into(),
            metrics: BTreeMap::new(),
            artifacts: Vec::new(),
            provenance: Provenance {
                scenario_hash: scenario.hash(),
                tool_version: TOOL_VERSION.into(),
                seed: scenario.seed,
                created_unix_s,
            },
        }
    }

    /// Records a metric. Non-finite values are dropped, since JSON cannot
    /// carry them.
    pub fn metric(&mut self, name: &str, value: f64) {
        debug_assert!(!is_rate(name) || (0.0..=1.0).contains(&value), "{name} = {value}");
        if value.is_finite() {
            self.metrics.insert(name.into(), value);
        }
    }

    pub fn artifact(&mut self, kind: &str, path: &str) {
        self.artifacts.push(Artifact {
            kind: kind.into(),
            path: path.into(),
        });
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_json(&dir.join("bundle.json"), self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_names() {
        for n in [
            "accuracy",
            "accuracy_k10",
            "tpr_k4",
            "rejection_rate",
            "accept_rate_first_replay",
            "success_rate",
        ] {
            assert!(is_rate(n), "{n}");
        }
        for n in ["accuracyish", "log10_success_prob", "users", "gap_db", "reserve_chi2"] {
            assert!(!is_rate(n), "{n}");
        }
    }

    #[test]
    fn non_finite_metrics_are_dropped() {
        let mut b = ResultBundle::new("eval", &Scenario::minimal(1), false);
        b.metric("log10_success_prob", f64::NEG_INFINITY);
        b.metric("users", 19.0);
        assert_eq!(b.metrics.len(), 1);
        assert_eq!(b.provenance.created_unix_s, None);
        assert_eq!(b.provenance.scenario_hash, Scenario::minimal(1).hash());
    }
}
