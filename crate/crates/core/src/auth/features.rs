//! Inter-tap gap features.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::detect::TapEventSeq;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    /// Gaps before padding (`M - 1`).
    pub raw_len: usize,
}

impl FeatureVector {
    pub fn padded_len(&self) -> usize {
        self.values.len()
    }
}

/// Gaps `F_i = press_{i+1} - release_i`.
pub fn gaps(events: &TapEventSeq) -> Result<Vec<f64>> {
    if events.len() < 2 {
        return Err(invalid("need at least two taps for gap features"));
    }
    Ok(events
        .events
        .windows(2)
        .map(|w| (w[1].press - w[0].release).max(0.0))
        .collect())
}

/// Zero-pads or truncates `raw` to exactly `len`.
pub fn fit_length(raw: &[f64], len: usize) -> Vec<f64> {
    let mut v: Vec<f64> = raw.iter().copied().take(len).collect();
    v.resize(len, 0.0);
    v
}

pub fn extract_features(events: &TapEventSeq, padded_len: usize) -> Result<FeatureVector> {
    let raw = gaps(events)?;
    if padded_len < raw.len() {
        return Err(invalid("padded length shorter than the gap count"));
    }
    Ok(FeatureVector {
        raw_len: raw.len(),
        values: fit_length(&raw, padded_len),
    })
}
