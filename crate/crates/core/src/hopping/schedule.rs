//! Phase library and per-round hopping schedule.
//!
//! After the Query the reader waits `t1'`, then steps its CW phase every
//! `tau` through 120 intervals. Each of the 24 library phases is used five
//! times. One of them, `theta_reserve`, sits on the odd positions of a
//! 10-interval recovery window starting at a secret index `n`, so the reader
//! sees the card's reply against a constant CW there.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::phy::timing::{T1_CORE_HI, T1_CORE_LO};
use crate::units::deg_to_rad;

pub const PHASES_PER_LIBRARY: usize = 24;
pub const N_INTERVALS: usize = 120;
pub const USES_PER_PHASE: usize = 5;
pub const RECOVERY_LEN: usize = 10;
pub const RECOVERY_START_MAX: usize = 110;
/// `T_pri / 5` at 40 kHz BLF.
pub const TAU_DEFAULT: f64 = 5e-6;
pub const T1_PRIME_DEFAULT: f64 = 240e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseLibrary {
    pub theta_init: u32,
}

impl PhaseLibrary {
    pub fn new(theta_init: u32) -> Option<Self> {
        (theta_init < 360).then_some(Self { theta_init })
    }

    /// Integer degrees `theta_init .. theta_init + 23`, not reduced.
    pub fn phases(&self) -> [u32; PHASES_PER_LIBRARY] {
        core::array::from_fn(|i| self.theta_init + i as u32)
    }

    pub fn contains(&self, deg: u32) -> bool {
        (self.theta_init..self.theta_init + PHASES_PER_LIBRARY as u32).contains(&deg)
    }
}

pub fn make_library<R: Rng + ?Sized>(rng: &mut R) -> PhaseLibrary {
    PhaseLibrary {
        theta_init: rng.random_range(0..360),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoppingSchedule {
    pub theta_init: u32,
    pub theta_reserve: u32,
    pub n: usize,
    #[serde(rename = "tau_s")]
    pub tau: f64,
    #[serde(rename = "t1_prime_s")]
    pub t1_prime: f64,
    /// Phase of each interval, integer degrees from the library.
    pub assignment: Vec<u32>,
}

pub fn make_schedule<R: Rng + ?Sized>(rng: &mut R, lib: &PhaseLibrary) -> HoppingSchedule {
    let phases = lib.phases();
    let n = rng.random_range(0..=RECOVERY_START_MAX);
    let theta_reserve = phases[rng.random_range(0..PHASES_PER_LIBRARY)];
    let mut rest: Vec<u32> = phases
        .iter()
        .filter(|p| **p != theta_reserve)
        .flat_map(|p| core::iter::repeat_n(*p, USES_PER_PHASE))
        .collect();
    rest.shuffle(rng);
    let mut rest = rest.into_iter();
    let assignment = (0..N_INTERVALS)
        .map(|k| {
            if is_reserve_slot(n, k) {
                theta_reserve
            } else {
                rest.next().expect("115 non-reserve slots")
            }
        })
        .collect();
    HoppingSchedule {
        theta_init: lib.theta_init,
        theta_reserve,
        n,
        tau: TAU_DEFAULT,
        t1_prime: T1_PRIME_DEFAULT,
        assignment,
    }
}

fn is_reserve_slot(n: usize, k: usize) -> bool {
    k >= n && k < n + RECOVERY_LEN && (k - n).is_multiple_of(2)
}

impl HoppingSchedule {
    pub fn library(&self) -> PhaseLibrary {
        PhaseLibrary {
            theta_init: self.theta_init,
        }
    }

    /// The five intervals that carry `theta_reserve` inside the recovery window.
    pub fn reserve_intervals(&self) -> [usize; 5] {
        core::array::from_fn(|i| self.n + 2 * i)
    }

    pub fn is_reserve(&self, k: usize) -> bool {
        is_reserve_slot(self.n, k)
    }

    pub fn hop_start(&self) -> f64 {
        self.t1_prime
    }

    pub fn hop_end(&self) -> f64 {
        self.t1_prime + self.assignment.len() as f64 * self.tau
    }

    /// Interval index at `dt` seconds after the Query ends.
    pub fn interval_at(&self, dt: f64) -> Option<usize> {
        // Nudge so grid-aligned sample instants land in the interval they start.
        let x = (dt - self.t1_prime) / self.tau + 1e-6;
        if x < 0.0 {
            return None;
        }
        let k = x as usize;
        (k < self.assignment.len()).then_some(k)
    }

    /// CW phase in radians at `dt` after the Query; 0 outside the hopping span.
    pub fn cw_phase_at(&self, dt: f64) -> f64 {
        self.interval_at(dt)
            .map_or(0.0, |k| deg_to_rad(f64::from(self.assignment[k] % 360)))
    }

    pub fn reserve_phase_rad(&self) -> f64 {
        deg_to_rad(f64::from(self.theta_reserve % 360))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub code: &'static str,
    pub detail: String,
}

fn violation(code: &'static str, detail: String) -> Violation {
    Violation { code, detail }
}

/// Checks every schedule invariant; an empty list means valid.
///
/// `t_rn16` is the reply length whose latest start-plus-length must be
/// covered by the hopping span.
pub fn verify_schedule(s: &HoppingSchedule, t_rn16: f64) -> Vec<Violation> {
    let mut out = Vec::new();
    let tol = 1e-12;
    if s.assignment.len() != N_INTERVALS {
        out.push(violation("interval-count", format!("{} intervals", s.assignment.len())));
    }
    if (s.tau * N_INTERVALS as f64 - 600e-6).abs() > tol {
        out.push(violation("hop-duration", format!("tau {} s", s.tau)));
    }
    if s.theta_init >= 360 {
        out.push(violation("theta-init-range", format!("theta_init {}", s.theta_init)));
    }
    let lib = s.library();
    if !lib.contains(s.theta_reserve) {
        out.push(violation(
            "reserve-membership",
            format!("theta_reserve {}", s.theta_reserve),
        ));
    }
    for (k, p) in s.assignment.iter().enumerate() {
        if !lib.contains(*p) {
            out.push(violation("library-membership", format!("interval {k} phase {p}")));
        }
    }
    for p in lib.phases() {
        let c = s.assignment.iter().filter(|x| **x == p).count();
        if c != USES_PER_PHASE {
            out.push(violation("phase-count", format!("phase {p} used {c} times")));
        }
    }
    if s.n > RECOVERY_START_MAX {
        out.push(violation("recovery-start-range", format!("n = {}", s.n)));
    } else {
        for k in s.reserve_intervals() {
            if s.assignment.get(k) != Some(&s.theta_reserve) {
                out.push(violation("reserve-placement", format!("interval {k}")));
            }
        }
    }
    if s.hop_start() > T1_CORE_LO + tol || s.hop_end() < T1_CORE_HI + t_rn16 - tol {
        out.push(violation(
            "coverage",
            format!("span [{}, {}] s", s.hop_start(), s.hop_end()),
        ));
    }
    out
}
