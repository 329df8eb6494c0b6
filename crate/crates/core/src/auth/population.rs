//! Synthetic tapping users standing in for human volunteers.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::channel::{RhythmSpec, Tap, TapProfile, MIN_RHYTHM_TAPS};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PopulationConfig {
    pub users: usize,
    pub trials_per_user: usize,
    pub min_taps: usize,
    pub max_taps: usize,
    pub duration_mean: f64,
    pub duration_var: f64,
    pub duration_min: f64,
    pub duration_max: f64,
    /// Quiet time before the first press and after the last release.
    pub lead_time: f64,
    pub hold_median: f64,
    pub min_hold: f64,
    pub min_gap: f64,
    pub short_gap_median: f64,
    pub long_gap_median: f64,
    pub long_gap_prob: f64,
    pub jitter_sd: f64,
    /// Smallest hold or gap a noisy trial may contain.
    pub trial_floor: f64,
}

impl Default for PopulationConfig {
    fn default() -> Self {
        Self {
            users: 19,
            trials_per_user: 40,
            min_taps: 8,
            max_taps: 24,
            duration_mean: 9.61,
            duration_var: 5.86,
            duration_min: 6.0,
            duration_max: 12.0,
            lead_time: 0.5,
            hold_median: 0.22,
            min_hold: 0.15,
            min_gap: 0.2,
            short_gap_median: 0.3,
            long_gap_median: 0.8,
            long_gap_prob: 0.3,
            jitter_sd: 0.03,
            trial_floor: 0.08,
        }
    }
}

impl PopulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.users == 0 || self.trials_per_user == 0 {
            return Err(invalid("population needs users and trials"));
        }
        if self.min_taps < MIN_RHYTHM_TAPS || self.min_taps > self.max_taps {
            return Err(invalid("tap count range must satisfy 4 <= min <= max"));
        }
        if !(self.duration_min > 2.0 * self.lead_time && self.duration_min <= self.duration_max) {
            return Err(invalid("duration range must leave room for the lead-in and lead-out"));
        }
        let positive = [
            self.duration_var,
            self.hold_median,
            self.min_hold,
            self.min_gap,
            self.short_gap_median,
            self.long_gap_median,
            self.trial_floor,
        ];
        if positive.iter().any(|v| !(*v > 0.0))
            || !(0.0..=1.0).contains(&self.long_gap_prob)
            || !(self.jitter_sd >= 0.0)
        {
            return Err(invalid("population timing parameters must be positive"));
        }
        let span = self.duration_min - 2.0 * self.lead_time;
        if MIN_RHYTHM_TAPS as f64 * self.min_hold + (MIN_RHYTHM_TAPS - 1) as f64 * self.min_gap > span {
            return Err(invalid("shortest duration cannot hold four taps"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticUser {
    pub id: usize,
    pub base: RhythmSpec,
    pub timing_jitter_sd: f64,
    pub profile: TapProfile,
    /// Smallest hold or gap a trial may contain.
    pub trial_floor: f64,
}

fn normal(mean: f64, sd: f64) -> Normal<f64> {
    Normal::new(mean, sd).expect("finite parameters")
}

fn lognormal(median: f64, sigma: f64) -> LogNormal<f64> {
    LogNormal::new(median.ln(), sigma).expect("finite parameters")
}

pub fn gen_user<R: Rng + ?Sized>(id: usize, cfg: &PopulationConfig, rng: &mut R) -> Result<SyntheticUser> {
    cfg.validate()?;
    let duration = normal(cfg.duration_mean, cfg.duration_var.sqrt())
        .sample(rng)
        .clamp(cfg.duration_min, cfg.duration_max);
    let span = duration - 2.0 * cfg.lead_time;
    let fit = ((span + cfg.min_gap) / (cfg.min_hold + cfg.min_gap)).floor() as usize;
    let m = rng
        .random_range(cfg.min_taps..=cfg.max_taps)
        .min(fit)
        .max(MIN_RHYTHM_TAPS);

    let hold_dist = lognormal(cfg.hold_median, 0.3);
    let mut holds: Vec<f64> = (0..m).map(|_| hold_dist.sample(rng).max(cfg.min_hold)).collect();
    let short = lognormal(cfg.short_gap_median, 0.35);
    let long = lognormal(cfg.long_gap_median, 0.3);
    let mut gaps: Vec<f64> = (0..m - 1)
        .map(|_| {
            if rng.random::<f64>() < cfg.long_gap_prob {
                long.sample(rng)
            } else {
                short.sample(rng)
            }
        })
        .collect();

    // Shrink holds first if they alone overflow the span, then fit gaps.
    let hold_room = span - (m - 1) as f64 * cfg.min_gap;
    let hold_sum: f64 = holds.iter().sum();
    if hold_sum > hold_room {
        let excess: f64 = holds.iter().map(|h| h - cfg.min_hold).sum();
        let k = (hold_sum - hold_room) / excess;
        holds.iter_mut().for_each(|h| *h -= (*h - cfg.min_hold) * k);
    }
    let gap_room = span - holds.iter().sum::<f64>();
    let free = gap_room - (m - 1) as f64 * cfg.min_gap;
    let raw: f64 = gaps.iter().sum();
    gaps.iter_mut().for_each(|g| *g = cfg.min_gap + *g / raw * free);

    let mut taps = Vec::with_capacity(m);
    let mut t = cfg.lead_time;
    for k in 0..m {
        taps.push(Tap {
            press: t,
            release: t + holds[k],
        });
        t += holds[k] + gaps.get(k).copied().unwrap_or(0.0);
    }
    let profile = sample_profile(rng);
    Ok(SyntheticUser {
        id,
        base: RhythmSpec::new(taps, duration)?,
        timing_jitter_sd: cfg.jitter_sd,
        profile,
        trial_floor: cfg.trial_floor,
    })
}

/// A finger: transition width 45 to 75 ms, plateau shift -0.45 to -0.75 rad.
pub fn sample_profile<R: Rng + ?Sized>(rng: &mut R) -> TapProfile {
    TapProfile {
        transition_width: rng.random_range(0.045..0.075),
        plateau_shift: -rng.random_range(0.45..0.75),
    }
}

fn valid_timing(taps: &[Tap], floor: f64, duration: f64) -> bool {
    taps.first().is_some_and(|t| t.press >= floor)
        && taps.last().is_some_and(|t| t.release <= duration - floor)
        && taps.iter().all(|t| t.release - t.press >= floor)
        && taps.windows(2).all(|w| w[1].press - w[0].release >= floor)
}

/// Perturbs every press and release of `base` by `N(0, sd)`, redrawing until
/// the result keeps its order and minimum spacing.
pub fn jitter_rhythm<R: Rng + ?Sized>(base: &RhythmSpec, sd: f64, floor: f64, rng: &mut R) -> RhythmSpec {
    if sd == 0.0 {
        return base.clone();
    }
    let n = normal(0.0, sd);
    for _ in 0..1000 {
        let taps: Vec<Tap> = base
            .taps
            .iter()
            .map(|t| Tap {
                press: t.press + n.sample(rng),
                release: t.release + n.sample(rng),
            })
            .collect();
        if valid_timing(&taps, floor, base.duration) {
            return RhythmSpec::new(taps, base.duration).expect("validated ordering");
        }
    }
    base.clone()
}

pub fn sample_trial<R: Rng + ?Sized>(user: &SyntheticUser, rng: &mut R) -> RhythmSpec {
    jitter_rhythm(&user.base, user.timing_jitter_sd, user.trial_floor, rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObserverSkill {
    OneShot,
    Studied,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObserverConfig {
    pub one_shot_sd: f64,
    pub one_shot_indel: f64,
    pub studied_sd: f64,
    pub studied_indel: f64,
}

impl Default for ObserverConfig {
    fn default() -> Self {
        Self {
            one_shot_sd: 0.12,
            one_shot_indel: 0.1,
            studied_sd: 0.06,
            studied_indel: 0.03,
        }
    }
}

impl ObserverConfig {
    pub fn params(&self, skill: ObserverSkill) -> (f64, f64) {
        match skill {
            ObserverSkill::OneShot => (self.one_shot_sd, self.one_shot_indel),
            ObserverSkill::Studied => (self.studied_sd, self.studied_indel),
        }
    }
}

/// A rhythm reproduced by someone who watched `target` tap.
///
/// Each tap is independently dropped or followed by a spurious extra tap
/// with total probability `indel`, then all timings get observer jitter.
pub fn emulate_observer<R: Rng + ?Sized>(
    target: &SyntheticUser,
    skill: ObserverSkill,
    cfg: &ObserverConfig,
    rng: &mut R,
) -> RhythmSpec {
    let (sd, indel) = cfg.params(skill);
    let base = &target.base;
    let floor = target.trial_floor;
    let mut taps: Vec<Tap> = Vec::with_capacity(base.taps.len() + 2);
    for (k, t) in base.taps.iter().enumerate() {
        let u = rng.random::<f64>();
        if u < indel / 2.0 && base.taps.len() - k + taps.len() > 2 {
            continue;
        }
        taps.push(*t);
        if u >= indel / 2.0 && u < indel {
            if let Some(next) = base.taps.get(k + 1) {
                let room = next.press - t.release;
                let hold = (t.release - t.press).min(room / 3.0);
                if hold >= floor {
                    let press = t.release + (room - hold) / 2.0;
                    taps.push(Tap {
                        press,
                        release: press + hold,
                    });
                }
            }
        }
    }
    let spec = RhythmSpec::new(taps, base.duration).expect("subset of an ordered rhythm");
    jitter_rhythm(&spec, sd, floor.min(0.05), rng)
}
