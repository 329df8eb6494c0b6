//! Complex-baseband synthesis of a query round.
//!
//! The receiver sees the reader's own CW leakage `g e^{j theta_cw(t)}` at all
//! times (state S1). While the card reflects (high FM0 half-symbols) the
//! backscatter `b e^{j(theta_cw + arg g + psi)}` adds on top (state S2), where
//! `psi` is the propagation phase plus any tap rotation. Referencing the
//! backscatter to `arg g` keeps the S1-to-S2 geometry independent of the CW
//! phase the reader happens to transmit.

use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Range;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::fm0::Fm0Config;
use super::timing::{QueryRound, SegmentKind};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SampleState {
    /// Reader is modulating the Query; neither S1 nor S2.
    Command,
    /// S1: CW only.
    Cw,
    /// S2: CW plus backscatter.
    Backscatter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Marker {
    pub label: String,
    pub t_start: f64,
    pub t_end: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IqTrace {
    pub sample_rate: f64,
    pub t0: f64,
    pub samples: Vec<Complex64>,
    pub markers: Vec<Marker>,
}

impl IqTrace {
    pub fn time_of(&self, i: usize) -> f64 {
        self.t0 + i as f64 / self.sample_rate
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn end(&self) -> f64 {
        self.t0 + self.duration()
    }

    /// Indices of samples whose timestamps fall in `[a, b)`.
    pub fn index_range(&self, a: f64, b: f64) -> Range<usize> {
        let n = self.samples.len();
        let idx = |t: f64| {
            let x = ((t - self.t0) * self.sample_rate).ceil();
            if x <= 0.0 {
                0
            } else {
                (x as usize).min(n)
            }
        };
        let (lo, hi) = (idx(a), idx(b));
        lo..hi.max(lo)
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples.is_empty() {
            return Err(invalid("I/Q trace has no samples"));
        }
        if !(self.sample_rate > 0.0) || !self.t0.is_finite() {
            return Err(invalid("I/Q trace needs a positive sample rate and finite t0"));
        }
        if self.samples.iter().any(|s| !s.re.is_finite() || !s.im.is_finite()) {
            return Err(invalid("I/Q trace contains non-finite samples"));
        }
        let (lo, hi) = (self.t0, self.end());
        let tol = 1e-12;
        for m in &self.markers {
            if m.t_start < lo - tol || m.t_end > hi + tol || m.t_start > m.t_end {
                return Err(invalid("I/Q marker outside the trace span"));
            }
        }
        Ok(())
    }
}

/// Receive-side channel seen by one antenna.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Channel {
    /// Complex gain applied to the CW leakage.
    pub cw_gain: Complex64,
    /// Backscatter amplitude at the receiver.
    pub bs_amplitude: f64,
    /// Phase of the backscatter relative to the leakage with no tap, radians.
    pub bs_phase: f64,
    /// Noise level relative to the CW power; `None` is noise-free.
    pub snr_db: Option<f64>,
}

impl Channel {
    /// Per-component standard deviation of the additive noise.
    pub fn noise_sigma(&self) -> f64 {
        match self.snr_db {
            Some(snr) => self.cw_gain.norm() * 10f64.powf(-snr / 20.0) / core::f64::consts::SQRT_2,
            None => 0.0,
        }
    }

    /// Noise-free S1 point for CW phase `theta_cw`.
    pub fn s1(&self, theta_cw: f64) -> Complex64 {
        self.cw_gain * Complex64::from_polar(1.0, theta_cw)
    }

    /// Noise-free S2 point for CW phase `theta_cw` and tap rotation `tap`.
    pub fn s2(&self, theta_cw: f64, tap: f64) -> Complex64 {
        let arg = theta_cw + self.cw_gain.arg() + self.bs_phase + tap;
        self.s1(theta_cw) + Complex64::from_polar(self.bs_amplitude, arg)
    }
}

pub fn complex_noise<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> Complex64 {
    if sigma == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(sigma * re, sigma * im)
}

/// Which part of the round to synthesize.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthSpan {
    FullRound,
    /// From the end of the Query command to the end of the round.
    AfterQuery,
}

/// A synthesized trace plus the ground-truth state of every sample.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundCapture {
    pub trace: IqTrace,
    pub states: Vec<SampleState>,
}

impl RoundCapture {
    pub fn samples_in(&self, state: SampleState) -> impl Iterator<Item = Complex64> + '_ {
        self.trace
            .samples
            .iter()
            .zip(&self.states)
            .filter(move |(_, s)| **s == state)
            .map(|(x, _)| *x)
    }
}

/// Synthesizes the receiver's I/Q samples for one round.
pub fn synthesize_round<R, C, T>(
    round: &QueryRound,
    cw_phase: C,
    channel: &Channel,
    tap_phase: T,
    cfg: &Fm0Config,
    span: SynthSpan,
    rng: &mut R,
) -> RoundCapture
where
    R: Rng + ?Sized,
    C: Fn(f64) -> f64,
    T: Fn(f64) -> f64,
{
    let start = match span {
        SynthSpan::FullRound => round.t0,
        SynthSpan::AfterQuery => round.query_end(),
    };
    let fs = cfg.sample_rate;
    let n = (((round.end() - start) * fs).round() as usize).max(1);
    let sigma = channel.noise_sigma();
    let mut samples = Vec::with_capacity(n);
    let mut states = Vec::with_capacity(n);
    let mut last_theta = f64::NAN;
    let mut s1 = Complex64::new(0.0, 0.0);
    for i in 0..n {
        let t = start + i as f64 / fs;
        let state = round.state_at(t).unwrap_or(SampleState::Cw);
        let theta = cw_phase(t);
        if theta != last_theta {
            s1 = channel.s1(theta);
            last_theta = theta;
        }
        let clean = match state {
            SampleState::Backscatter => channel.s2(theta, tap_phase(t)),
            // Command samples are rendered as unmodulated carrier.
            SampleState::Cw | SampleState::Command => s1,
        };
        samples.push(clean + complex_noise(rng, sigma));
        states.push(state);
    }
    let end = start + n as f64 / fs;
    let markers = round
        .segments
        .iter()
        .filter_map(|seg| {
            let label = match seg.kind {
                SegmentKind::QueryCmd => "query-cmd",
                SegmentKind::Reply => "backscatter-window",
                _ => "cw",
            };
            let (a, b) = (seg.start.max(start), seg.end.min(end));
            (a < b).then(|| Marker {
                label: label.into(),
                t_start: a,
                t_end: b,
            })
        })
        .collect();
    RoundCapture {
        trace: IqTrace {
            sample_rate: fs,
            t0: start,
            samples,
            markers,
        },
        states,
    }
}
