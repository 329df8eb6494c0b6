//! Tap-event detection on `Phi`.
//!
//! A press shows up as a dip in the phase slope and a release as a bump. The
//! detector keeps extrema beyond the thresholds, pairs each dip with an
//! immediately following bump, and walks outwards from the pair to the
//! nearest near-zero samples to time the press and release.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::channel::RhythmSpec;
use crate::dsp::ProcessedSeries;
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectConfig {
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
}

impl Default for DetectConfig {
    fn default() -> Self {
        Self {
            delta1: 0.5,
            delta2: -0.5,
            delta3: 0.1,
        }
    }
}

impl DetectConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta1 > 0.0 && self.delta2 < 0.0 && self.delta3 > 0.0) {
            return Err(invalid("detection thresholds need delta1 > 0 > delta2 and delta3 > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventSource {
    GroundTruth,
    Detected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TapEvent {
    pub press: f64,
    pub release: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TapEventSeq {
    pub events: Vec<TapEvent>,
    pub source: EventSource,
}

impl TapEventSeq {
    pub fn new(events: Vec<TapEvent>, source: EventSource) -> Result<Self> {
        if events.is_empty() {
            return Err(invalid("event sequence is empty"));
        }
        for (i, e) in events.iter().enumerate() {
            if !(e.press <= e.release) {
                return Err(invalid("event released before pressed"));
            }
            if let Some(n) = events.get(i + 1) {
                if n.press < e.release {
                    return Err(invalid("events overlap"));
                }
            }
        }
        Ok(Self { events, source })
    }

    pub fn from_rhythm(r: &RhythmSpec) -> Self {
        Self {
            events: r
                .taps
                .iter()
                .map(|t| TapEvent {
                    press: t.press,
                    release: t.release,
                })
                .collect(),
            source: EventSource::GroundTruth,
        }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Max,
    Min,
}

#[derive(Debug, Clone, Copy)]
struct Extremum {
    kind: Kind,
    /// First and last index of the (possibly flat) extremal run.
    first: usize,
    last: usize,
}

/// Strict local extrema, treating runs of equal values as one point.
fn extrema(v: &[f64], cfg: &DetectConfig) -> Vec<Extremum> {
    let mut out = Vec::new();
    let n = v.len();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && v[j + 1] == v[i] {
            j += 1;
        }
        if i > 0 && j + 1 < n {
            let (prev, next, x) = (v[i - 1], v[j + 1], v[i]);
            if x > prev && x > next && x > cfg.delta1 {
                out.push(Extremum {
                    kind: Kind::Max,
                    first: i,
                    last: j,
                });
            } else if x < prev && x < next && x < cfg.delta2 {
                out.push(Extremum {
                    kind: Kind::Min,
                    first: i,
                    last: j,
                });
            }
        }
        i = j + 1;
    }
    out
}

pub fn detect_taps(series: &ProcessedSeries, cfg: &DetectConfig) -> Result<TapEventSeq> {
    cfg.validate()?;
    let v = &series.values;
    if v.is_empty() {
        return Err(invalid("empty series"));
    }
    let near_zero = |i: usize| v[i].abs() <= cfg.delta3;
    let ex = extrema(v, cfg);
    // (press index, release index, min index, max index)
    let mut pairs: Vec<(usize, usize, usize, usize)> = Vec::new();
    for w in ex.windows(2) {
        if w[0].kind != Kind::Min || w[1].kind != Kind::Max {
            continue;
        }
        let (lo, hi) = (w[0], w[1]);
        let press = (0..lo.first).rev().find(|&i| near_zero(i));
        let release = (hi.last + 1..v.len()).find(|&i| near_zero(i));
        if let (Some(p), Some(r)) = (press, release) {
            pairs.push((p, r, lo.first, hi.last));
        }
    }
    // Resolve overlaps between neighbours at the smallest-magnitude sample
    // between the earlier bump and the later dip.
    for k in 1..pairs.len() {
        let (prev, cur) = (pairs[k - 1], pairs[k]);
        if cur.0 < prev.1 {
            let a = prev.3.min(cur.2);
            let b = prev.3.max(cur.2);
            let mid = (a..=b).min_by(|&x, &y| v[x].abs().total_cmp(&v[y].abs())).unwrap_or(a);
            pairs[k - 1].1 = mid;
            pairs[k].0 = mid;
        }
    }
    let mut events: Vec<TapEvent> = Vec::with_capacity(pairs.len());
    for (p, r, _, _) in pairs {
        let e = TapEvent {
            press: series.time(p),
            release: series.time(r),
        };
        // A dip whose walk-back crossed the previous event entirely is
        // dropped rather than producing a non-monotone sequence.
        if events.last().is_some_and(|last| e.press < last.release) {
            continue;
        }
        events.push(e);
    }
    if events.is_empty() {
        return Err(Error::NoRhythmDetected);
    }
    TapEventSeq::new(events, EventSource::Detected)
}
