//! Single-sniffer attacker that records the reader's channel and tries to
//! recover the backscatter phase the same way the reader does.
//!
//! The attacker is granted the S1/S2 label of every sample and the hop grid,
//! but not the schedule. Under phase hopping it sees many S1 phases and must
//! guess which one matches a given S2 symbol.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::auth::TapEventSeq;
use crate::channel::{RhythmSpec, Tap};
use crate::dsp::Centroids;
use crate::error::{invalid, Result};
use crate::phy::{RoundCapture, SampleState};
use crate::units::{deg_to_rad, wrap_2pi, wrap_pi};

/// A guess counts as correct within this many radians of the true phase.
pub const SUCCESS_TOLERANCE: f64 = 0.05;

/// Angular gap that separates two S1 clusters.
const CLUSTER_GAP_DEG: f64 = 0.5;
/// Minimum spacing between padded spurious candidates and any other candidate.
const PAD_SPACING_DEG: f64 = 1.0;

/// Mean of a run of samples sharing one hop interval and one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SniffedSymbol {
    pub value: Complex64,
    pub samples: usize,
    pub backscatter: bool,
    /// True backscatter phase at the sniffer for S2 symbols, `[0, 2 pi)`.
    pub truth: f64,
}

/// Groups a captured round into symbols. `grid` maps a sample time to its
/// hop-interval index; samples outside the hop span (`None`) are dropped.
pub fn symbols_from_capture<G, T>(cap: &RoundCapture, grid: G, truth: T) -> Vec<SniffedSymbol>
where
    G: Fn(f64) -> Option<usize>,
    T: Fn(f64) -> f64,
{
    let mut out = Vec::new();
    let mut key = None;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut truth_acc = 0.0;
    let mut n = 0usize;
    let flush = |out: &mut Vec<SniffedSymbol>, key: Option<(usize, bool)>, acc, truth_acc: f64, n: usize| {
        if let (Some((_, bs)), true) = (key, n > 0) {
            out.push(SniffedSymbol {
                value: acc / n as f64,
                samples: n,
                backscatter: bs,
                truth: if bs { wrap_2pi(truth_acc / n as f64) } else { 0.0 },
            });
        }
    };
    for (i, (x, s)) in cap.trace.samples.iter().zip(&cap.states).enumerate() {
        let t = cap.trace.time_of(i);
        let Some(slot) = grid(t) else { continue };
        let k = (slot, *s == SampleState::Backscatter);
        if key != Some(k) {
            flush(&mut out, key, acc, truth_acc, n);
            key = Some(k);
            acc = Complex64::new(0.0, 0.0);
            truth_acc = 0.0;
            n = 0;
        }
        acc += x;
        if k.1 {
            truth_acc += truth(t);
        }
        n += 1;
    }
    flush(&mut out, key, acc, truth_acc, n);
    out
}

/// Clusters S1 symbols by angle and returns one weighted centroid per cluster,
/// sorted by angle.
fn s1_clusters(symbols: &[SniffedSymbol]) -> Vec<Complex64> {
    let mut pts: Vec<(f64, Complex64, usize)> = symbols
        .iter()
        .filter(|s| !s.backscatter)
        .map(|s| (wrap_2pi(s.value.arg()), s.value, s.samples))
        .collect();
    if pts.is_empty() {
        return Vec::new();
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Start after the widest gap so no cluster straddles the wrap point.
    let m = pts.len();
    let gap = |i: usize| wrap_2pi(pts[(i + 1) % m].0 - pts[i].0);
    let widest = (0..m).max_by(|&a, &b| gap(a).total_cmp(&gap(b))).unwrap_or(0);
    let split = deg_to_rad(CLUSTER_GAP_DEG);
    let mut out = Vec::new();
    let mut sum = Complex64::new(0.0, 0.0);
    let mut count = 0usize;
    for j in 0..m {
        let i = (widest + 1 + j) % m;
        if count > 0 && gap((i + m - 1) % m) > split {
            out.push(sum / count as f64);
            sum = Complex64::new(0.0, 0.0);
            count = 0;
        }
        sum += pts[i].1 * pts[i].2 as f64;
        count += pts[i].2;
    }
    out.push(sum / count as f64);
    out
}

/// The attacker's candidate S1 set. With `size` given, the observed clusters
/// are randomly subset or padded with spurious phases to exactly that size.
pub fn candidate_set<R: Rng + ?Sized>(symbols: &[SniffedSymbol], size: Option<usize>, rng: &mut R) -> Vec<Complex64> {
    let mut c = s1_clusters(symbols);
    let Some(size) = size else { return c };
    if c.len() > size {
        c.shuffle(rng);
        c.truncate(size);
        return c;
    }
    if c.is_empty() {
        return c;
    }
    let radius = c.iter().map(|z| z.norm()).sum::<f64>() / c.len() as f64;
    let spacing = deg_to_rad(PAD_SPACING_DEG);
    while c.len() < size {
        let a = rng.random_range(0.0..2.0 * PI);
        if c.iter().all(|z| wrap_pi(z.arg() - a).abs() >= spacing) {
            c.push(Complex64::from_polar(radius, a));
        }
    }
    c
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundGuess {
    pub guess: f64,
    pub truth: f64,
    pub success: bool,
}

/// One round of the attack. With a single candidate the attacker has nothing
/// to choose between and uses the aggregate S2 centroid, exactly as the
/// reader does; otherwise it pairs a random S2 symbol with a random candidate.
pub fn guess_round<R: Rng + ?Sized>(
    symbols: &[SniffedSymbol],
    candidates: &[Complex64],
    rng: &mut R,
) -> Option<RoundGuess> {
    let s2: Vec<&SniffedSymbol> = symbols.iter().filter(|s| s.backscatter).collect();
    if s2.is_empty() || candidates.is_empty() {
        return None;
    }
    let (value, truth, cand) = if candidates.len() == 1 {
        let n: usize = s2.iter().map(|s| s.samples).sum();
        let sum: Complex64 = s2.iter().map(|s| s.value * s.samples as f64).sum();
        // Circular mean of the per-symbol truths.
        let t: Complex64 = s2
            .iter()
            .map(|s| Complex64::from_polar(s.samples as f64, s.truth))
            .sum();
        (sum / n as f64, wrap_2pi(t.arg()), candidates[0])
    } else {
        let s = s2[rng.random_range(0..s2.len())];
        (s.value, s.truth, candidates[rng.random_range(0..candidates.len())])
    };
    let guess = Centroids::from_means(cand, value).ok()?.full_angle();
    Some(RoundGuess {
        guess,
        truth,
        success: wrap_pi(guess - truth).abs() < SUCCESS_TOLERANCE,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackOutcome {
    pub theta_prime_size: Option<usize>,
    pub guesses: Vec<RoundGuess>,
    /// Rounds with no usable S2 symbol or no candidate.
    pub skipped_rounds: usize,
    pub log10_success_prob: f64,
    pub recovered_rhythm: Option<TapEventSeq>,
}

impl AttackOutcome {
    pub fn success_rate(&self) -> f64 {
        if self.guesses.is_empty() {
            return 0.0;
        }
        self.guesses.iter().filter(|g| g.success).count() as f64 / self.guesses.len() as f64
    }
}

/// `log10((1 / size)^rounds)`.
pub fn attack_success_logprob(theta_prime_size: usize, n_rounds: usize) -> Result<f64> {
    if theta_prime_size == 0 || n_rounds == 0 {
        return Err(invalid("candidate set size and round count must be positive"));
    }
    Ok(-(n_rounds as f64) * (theta_prime_size as f64).log10())
}

pub fn rounds_needed(rhythm_duration: f64, round_len: f64) -> Result<usize> {
    if !(rhythm_duration > 0.0 && round_len > 0.0) {
        return Err(invalid("durations must be positive"));
    }
    // Guard against 1.0000000000000002 style ratios for exact multiples.
    let ratio = rhythm_duration / round_len;
    let r = ratio.round();
    Ok(if (ratio - r).abs() < 1e-9 {
        r as usize
    } else {
        ratio.ceil() as usize
    }
    .max(1))
}

/// Turns detected events into a rhythm the attacker can tap out. Events that
/// touch or overlap are pulled apart by a millisecond.
pub fn rhythm_from_events(events: &TapEventSeq, duration: f64) -> Result<RhythmSpec> {
    const SEP: f64 = 1e-3;
    let mut taps: Vec<Tap> = Vec::with_capacity(events.len());
    for e in &events.events {
        let mut press = e.press.max(0.0);
        if let Some(prev) = taps.last() {
            press = press.max(prev.release + SEP);
        }
        let release = e.release.max(press + SEP);
        taps.push(Tap { press, release });
    }
    let end = taps.last().map_or(0.0, |t| t.release);
    RhythmSpec::new(taps, duration.max(end))
}
