//! The reader's `[phi, f, t]` report stream.

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub const REPORT_INTERVAL_DEFAULT: f64 = 4e-3;
pub const REPORT_JITTER_DEFAULT: f64 = 0.5e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseReport {
    pub t: f64,
    pub phi: f64,
    pub freq: f64,
}

/// The phase the reader extracted from one round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundObservation {
    pub t_start: f64,
    pub freq: f64,
    pub phase: Result<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReportStream {
    pub reports: Vec<PhaseReport>,
    /// Report instants dropped because their round was unusable.
    pub gaps: Vec<f64>,
}

/// Report instants in `(start, end]`: successive gaps of `interval` plus
/// uniform jitter in `[-jitter, jitter]`.
pub fn report_times<R: Rng + ?Sized>(
    start: f64,
    end: f64,
    interval: f64,
    jitter: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !(interval > 0.0) || !(jitter >= 0.0 && jitter < interval) {
        return Err(invalid("report interval must be positive and exceed its jitter"));
    }
    let mut out = Vec::with_capacity(((end - start) / interval).max(0.0) as usize + 1);
    let mut t = start;
    loop {
        let step = if jitter > 0.0 {
            interval + rng.random_range(-jitter..=jitter)
        } else {
            interval
        };
        t += step;
        if t > end {
            break;
        }
        out.push(t);
    }
    Ok(out)
}

/// One report per instant, carrying the phase of the latest round that
/// started at or before it.
pub fn report_stream(rounds: &[RoundObservation], times: &[f64]) -> Result<ReportStream> {
    if rounds.windows(2).any(|w| w[1].t_start < w[0].t_start) {
        return Err(invalid("rounds must be time-ordered"));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("report instants must be strictly increasing"));
    }
    let mut out = ReportStream::default();
    for &t in times {
        let k = rounds.partition_point(|r| r.t_start <= t);
        match k.checked_sub(1).map(|i| &rounds[i]) {
            Some(RoundObservation {
                freq, phase: Ok(phi), ..
            }) => out.reports.push(PhaseReport {
                t,
                phi: *phi,
                freq: *freq,
            }),
            Some(RoundObservation {
                phase: Err(Error::DegenerateGeometry(_) | Error::RecoveryFailed(_)),
                ..
            })
            | None => out.gaps.push(t),
            Some(RoundObservation { phase: Err(e), .. }) => return Err(e.clone()),
        }
    }
    Ok(out)
}
