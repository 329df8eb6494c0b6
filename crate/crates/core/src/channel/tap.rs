//! Finger-pressure phase rotation.
//!
//! Pressing the card detunes its antenna and rotates the backscatter phase by
//! `phi_tap`. Each tap is modeled as a raised-cosine ramp from 0 to the
//! plateau shift starting at the press instant, held, and ramped back so that
//! it returns to 0 at the release instant. The derivative therefore has one
//! extremum of the plateau's sign during the press ramp and one of the
//! opposite sign during the release ramp.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Fewest taps an enrollable rhythm may have.
pub const MIN_RHYTHM_TAPS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TapProfile {
    /// Rise/fall time of the finger pressure, seconds.
    pub transition_width: f64,
    /// Steady rotation while fully pressed, radians.
    pub plateau_shift: f64,
}

impl Default for TapProfile {
    fn default() -> Self {
        Self {
            transition_width: 0.060,
            plateau_shift: -0.6,
        }
    }
}

impl TapProfile {
    pub fn validate(&self) -> Result<()> {
        if !(self.transition_width > 0.0) {
            return Err(invalid("transition width must be positive"));
        }
        if !(self.plateau_shift != 0.0 && self.plateau_shift.abs() < PI) {
            return Err(invalid("plateau shift must be non-zero with magnitude below pi"));
        }
        Ok(())
    }

    /// Peak phase slope of a full press ramp, rad/s.
    pub fn peak_slope(&self) -> f64 {
        self.plateau_shift.abs() * PI / (2.0 * self.transition_width)
    }

    /// Magnitude of the derivative dip at a press.
    pub fn press_dip_depth(&self) -> f64 {
        self.peak_slope()
    }

    /// Height of the derivative bump at a release.
    pub fn release_bump_height(&self) -> f64 {
        self.peak_slope()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tap {
    #[serde(rename = "press_s")]
    pub press: f64,
    #[serde(rename = "release_s")]
    pub release: f64,
}

/// Ground-truth timing of a tapped rhythm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRhythm", deny_unknown_fields)]
pub struct RhythmSpec {
    #[serde(rename = "duration_s")]
    pub duration: f64,
    pub taps: Vec<Tap>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRhythm {
    duration_s: f64,
    taps: Vec<Tap>,
}

impl TryFrom<RawRhythm> for RhythmSpec {
    type Error = Error;
    fn try_from(r: RawRhythm) -> Result<Self> {
        RhythmSpec::new(r.taps, r.duration_s)
    }
}

impl RhythmSpec {
    pub fn new(taps: Vec<Tap>, duration: f64) -> Result<Self> {
        if taps.is_empty() {
            return Err(invalid("a rhythm needs at least one tap"));
        }
        if taps.iter().any(|t| !t.press.is_finite() || !t.release.is_finite()) || !duration.is_finite() {
            return Err(invalid("rhythm times must be finite"));
        }
        if taps[0].press < 0.0 {
            return Err(invalid("rhythm starts before t = 0"));
        }
        for (i, t) in taps.iter().enumerate() {
            if !(t.press < t.release) {
                return Err(invalid("each tap must be released after it is pressed"));
            }
            if let Some(next) = taps.get(i + 1) {
                if !(t.release < next.press) {
                    return Err(invalid("taps must be strictly ordered"));
                }
            }
        }
        if duration < taps[taps.len() - 1].release {
            return Err(invalid("duration ends before the last release"));
        }
        Ok(Self { duration, taps })
    }

    pub fn tap_count(&self) -> usize {
        self.taps.len()
    }

    /// Checks the rhythm is long enough to enroll or verify with.
    pub fn require_enrollable(&self) -> Result<()> {
        if self.taps.len() < MIN_RHYTHM_TAPS {
            return Err(invalid("rhythm needs at least 4 taps"));
        }
        Ok(())
    }

    pub fn presses(&self) -> impl Iterator<Item = f64> + '_ {
        self.taps.iter().map(|t| t.press)
    }

    pub fn releases(&self) -> impl Iterator<Item = f64> + '_ {
        self.taps.iter().map(|t| t.release)
    }
}

fn raised_cosine(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        0.5 * (1.0 - (PI * x).cos())
    }
}

/// `phi_tap(t)` without the domain check; 0 outside the rhythm.
pub fn tap_phase_at(t: f64, rhythm: &RhythmSpec, profile: &TapProfile) -> f64 {
    let k = rhythm.taps.partition_point(|tap| tap.press <= t);
    if k == 0 {
        return 0.0;
    }
    let tap = rhythm.taps[k - 1];
    if t >= tap.release {
        return 0.0;
    }
    let w = profile.transition_width;
    profile.plateau_shift * raised_cosine((t - tap.press) / w).min(raised_cosine((tap.release - t) / w))
}

/// Tap-induced phase rotation at `t`, for `t` within the rhythm.
pub fn tap_phase(t: f64, rhythm: &RhythmSpec, profile: &TapProfile) -> Result<f64> {
    if !(0.0..=rhythm.duration).contains(&t) {
        return Err(Error::Domain {
            value: t,
            lo: 0.0,
            hi: rhythm.duration,
        });
    }
    Ok(tap_phase_at(t, rhythm, profile))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn single() -> RhythmSpec {
        RhythmSpec::new(
            vec![Tap {
                press: 1.0,
                release: 1.4,
            }],
            2.0,
        )
        .unwrap()
    }

    #[test]
    fn zero_between_taps_and_plateau_mid_press() {
        let p = TapProfile::default();
        let r = single();
        assert_eq!(tap_phase(0.5, &r, &p).unwrap(), 0.0);
        assert_eq!(tap_phase(1.7, &r, &p).unwrap(), 0.0);
        assert_eq!(tap_phase(1.2, &r, &p).unwrap(), p.plateau_shift);
    }

    #[test]
    fn outside_domain() {
        let r = single();
        assert!(matches!(
            tap_phase(2.5, &r, &TapProfile::default()),
            Err(Error::Domain { .. })
        ));
        assert!(tap_phase(-0.1, &r, &TapProfile::default()).is_err());
    }

    // Finite differences at 0.1 ms, then count strict local extrema of the slope.
    fn slope_extrema(r: &RhythmSpec, p: &TapProfile) -> Vec<(f64, f64)> {
        let h = 1e-4;
        let n = (r.duration / h) as usize;
        let d: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 * h;
                (tap_phase_at(t + h, r, p) - tap_phase_at(t, r, p)) / h
            })
            .collect();
        let mut out = Vec::new();
        let mut i = 1;
        while i + 1 < d.len() {
            // compress flat runs so plateaus count once
            let mut j = i;
            while j + 1 < d.len() && d[j + 1] == d[i] {
                j += 1;
            }
            if j + 1 >= d.len() {
                break;
            }
            let (prev, next) = (d[i - 1], d[j + 1]);
            if (d[i] < prev && d[i] < next && d[i] < -1e-9) || (d[i] > prev && d[i] > next && d[i] > 1e-9) {
                out.push((i as f64 * h, d[i]));
            }
            i = j + 1;
        }
        out
    }

    #[test]
    fn one_dip_then_one_bump_per_tap() {
        let p = TapProfile::default();
        let ex = slope_extrema(&single(), &p);
        assert_eq!(ex.len(), 2, "{ex:?}");
        assert!(ex[0].1 < 0.0 && ex[1].1 > 0.0);
        assert!(ex[0].0 < ex[1].0);
        assert!((ex[0].1.abs() - p.press_dip_depth()).abs() / p.press_dip_depth() < 0.01);
    }

    #[test]
    fn rhythm_validation() {
        assert!(RhythmSpec::new(vec![], 1.0).is_err());
        assert!(RhythmSpec::new(
            vec![Tap {
                press: 1.0,
                release: 0.9
            }],
            2.0
        )
        .is_err());
        let overlap = vec![
            Tap {
                press: 0.1,
                release: 0.5,
            },
            Tap {
                press: 0.5,
                release: 0.7,
            },
        ];
        assert!(RhythmSpec::new(overlap, 1.0).is_err());
        assert!(RhythmSpec::new(
            vec![Tap {
                press: 0.1,
                release: 0.5
            }],
            0.4
        )
        .is_err());
        assert!(single().require_enrollable().is_err());
    }

    #[test]
    fn rhythm_json_round_trip() {
        let r = single();
        let s = serde_json::to_string(&r).unwrap();
        assert_eq!(s, r#"{"duration_s":2.0,"taps":[{"press_s":1.0,"release_s":1.4}]}"#);
        let back: RhythmSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
        assert!(serde_json::from_str::<RhythmSpec>(r#"{"duration_s":1.0,"taps":[]}"#).is_err());
    }

    proptest! {
        #[test]
        fn continuous_and_supported_on_taps(
            gaps in proptest::collection::vec((0.05f64..1.0, 0.05f64..0.8), 1..8),
            shift in -3.0f64..3.0,
            w in 0.005f64..0.1,
        ) {
            prop_assume!(shift.abs() > 1e-3);
            let mut t = 0.1;
            let mut taps = Vec::new();
            for (g, hold) in gaps {
                taps.push(Tap { press: t, release: t + hold });
                t += hold + g;
            }
            let r = RhythmSpec::new(taps, t).unwrap();
            let p = TapProfile { transition_width: w, plateau_shift: shift };
            let h = 1e-4;
            let bound = shift.abs() * PI / (2.0 * w) * h * 1.001 + 1e-12;
            let mut prev = tap_phase_at(0.0, &r, &p);
            let mut s = h;
            while s < r.duration {
                let v = tap_phase_at(s, &r, &p);
                prop_assert!((v - prev).abs() <= bound);
                let inside = r.taps.iter().any(|k| s > k.press && s < k.release);
                if !inside {
                    prop_assert_eq!(v, 0.0);
                }
                prop_assert!(v.abs() <= shift.abs());
                prev = v;
                s += h;
            }
        }
    }
}
