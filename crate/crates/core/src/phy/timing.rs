//! Gen-2 link timing and the query-round timeline.
//!
//! A rhythm-query round is `[T4 CW][Query][CW T1][RN16 reply][CW T2]`. The
//! Query command itself is an opaque segment; its default length makes a
//! nominal round last 2.179 ms.

use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::fm0::{Fm0Config, Fm0Waveform, Level, Rn16Message};
use super::iq::SampleState;
use crate::error::{invalid, Result};

pub const RTCAL_DEFAULT: f64 = 72e-6;
pub const T1_MIN: f64 = 238e-6;
pub const T1_MAX: f64 = 262e-6;
pub const T1_NOMINAL: f64 = 250e-6;
/// Measured concentration of T1: 98.92% of draws fall in [244, 247] us.
pub const T1_CORE_LO: f64 = 244e-6;
pub const T1_CORE_HI: f64 = 247e-6;
pub const T1_CORE_MASS: f64 = 0.9892;
pub const T2_MIN: f64 = 75e-6;
pub const T2_MAX: f64 = 500e-6;
pub const T2_NOMINAL: f64 = 0.5 * (T2_MIN + T2_MAX);
/// Measured length of one rhythm-query round.
pub const ROUND_LEN_NOMINAL: f64 = 2.179e-3;
/// Query segment length that makes a nominal round last [`ROUND_LEN_NOMINAL`].
pub const QUERY_CMD_DEFAULT: f64 = ROUND_LEN_NOMINAL - 2.0 * RTCAL_DEFAULT - (T1_NOMINAL + 23.0 / 40e3 + T2_NOMINAL);

/// Draws T1 from the measured distribution.
pub fn sample_t1<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    if rng.random::<f64>() < T1_CORE_MASS {
        rng.random_range(T1_CORE_LO..=T1_CORE_HI)
    } else {
        // Uniform over the legal range with the core removed.
        let below = T1_CORE_LO - T1_MIN;
        let above = T1_MAX - T1_CORE_HI;
        let u = rng.random::<f64>() * (below + above);
        if u < below {
            T1_MIN + u
        } else {
            (T1_CORE_HI + (u - below)).min(T1_MAX)
        }
    }
}

pub fn sample_t2<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random_range(T2_MIN..=T2_MAX)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gen2Timing {
    pub rtcal: f64,
    pub t4: f64,
    pub t1: f64,
    pub t2: f64,
    pub t_rn16: f64,
}

impl Gen2Timing {
    pub fn nominal(cfg: &Fm0Config) -> Self {
        Self {
            rtcal: RTCAL_DEFAULT,
            t4: 2.0 * RTCAL_DEFAULT,
            t1: T1_NOMINAL,
            t2: T2_NOMINAL,
            t_rn16: Rn16Message::SYMBOLS as f64 * cfg.t_pri(),
        }
    }

    /// Nominal timing with T1 and T2 drawn per round.
    pub fn sample<R: Rng + ?Sized>(cfg: &Fm0Config, rng: &mut R) -> Self {
        Self {
            t1: sample_t1(rng),
            t2: sample_t2(rng),
            ..Self::nominal(cfg)
        }
    }

    pub fn validate(&self, cfg: &Fm0Config) -> Result<()> {
        if (self.t4 - 2.0 * self.rtcal).abs() > 1e-12 {
            return Err(invalid("T4 must equal 2 RTcal"));
        }
        if !(T1_MIN..=T1_MAX).contains(&self.t1) {
            return Err(invalid("T1 outside [238 us, 262 us]"));
        }
        if !(T2_MIN..=T2_MAX).contains(&self.t2) {
            return Err(invalid("T2 outside [75 us, 500 us]"));
        }
        let expect = Rn16Message::SYMBOLS as f64 * cfg.t_pri();
        if (self.t_rn16 - expect).abs() > 1e-12 {
            return Err(invalid("T_RN16 must equal 23 symbol periods"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SegmentKind {
    PowerUpCw,
    QueryCmd,
    CwWait,
    Reply,
    CwTail,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub kind: SegmentKind,
    pub start: f64,
    pub end: f64,
}

impl Segment {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start && t < self.end
    }
}

/// One query round laid out on an absolute time axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRound {
    pub t0: f64,
    pub timing: Gen2Timing,
    pub query_cmd: f64,
    pub segments: Vec<Segment>,
    pub reply: Fm0Waveform,
}

/// Lays out a round starting at t = 0 with the default Query length.
pub fn build_query_round(timing: &Gen2Timing, rn16: &Rn16Message, cfg: &Fm0Config) -> Result<QueryRound> {
    QueryRound::build(timing, rn16, cfg, QUERY_CMD_DEFAULT, 0.0)
}

impl QueryRound {
    pub fn build(timing: &Gen2Timing, rn16: &Rn16Message, cfg: &Fm0Config, query_cmd: f64, t0: f64) -> Result<Self> {
        timing.validate(cfg)?;
        if !(query_cmd > 0.0) {
            return Err(invalid("Query command duration must be positive"));
        }
        let spans = [
            (SegmentKind::PowerUpCw, timing.t4),
            (SegmentKind::QueryCmd, query_cmd),
            (SegmentKind::CwWait, timing.t1),
            (SegmentKind::Reply, timing.t_rn16),
            (SegmentKind::CwTail, timing.t2),
        ];
        let mut segments = Vec::with_capacity(spans.len());
        let mut t = t0;
        for (kind, d) in spans {
            segments.push(Segment {
                kind,
                start: t,
                end: t + d,
            });
            t += d;
        }
        Ok(Self {
            t0,
            timing: *timing,
            query_cmd,
            segments,
            reply: rn16.encode(cfg),
        })
    }

    fn segment(&self, kind: SegmentKind) -> &Segment {
        self.segments
            .iter()
            .find(|s| s.kind == kind)
            .expect("every round has all segment kinds")
    }

    pub fn query_end(&self) -> f64 {
        self.segment(SegmentKind::QueryCmd).end
    }

    pub fn reply_start(&self) -> f64 {
        self.segment(SegmentKind::Reply).start
    }

    pub fn reply_end(&self) -> f64 {
        self.segment(SegmentKind::Reply).end
    }

    pub fn end(&self) -> f64 {
        self.segments.last().map_or(self.t0, |s| s.end)
    }

    pub fn duration(&self) -> f64 {
        self.end() - self.t0
    }

    /// Length of the CW the reader keeps up after the Query.
    pub fn cw_span(&self) -> f64 {
        self.timing.t1 + self.timing.t_rn16 + self.timing.t2
    }

    /// Receive state at absolute time `t`, or `None` outside the round.
    pub fn state_at(&self, t: f64) -> Option<SampleState> {
        let seg = self.segments.iter().find(|s| s.contains(t))?;
        Some(match seg.kind {
            SegmentKind::QueryCmd => SampleState::Command,
            SegmentKind::Reply => match self.reply.level_at(t - seg.start) {
                Some(Level::Hi) => SampleState::Backscatter,
                _ => SampleState::Cw,
            },
            _ => SampleState::Cw,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn cfg() -> Fm0Config {
        Fm0Config::default()
    }

    #[test]
    fn t1_concentration_and_range() {
        let mut rng = seeded(11);
        let n = 100_000;
        let mut core = 0usize;
        for _ in 0..n {
            let t1 = sample_t1(&mut rng);
            assert!((T1_MIN..=T1_MAX).contains(&t1));
            if (T1_CORE_LO..=T1_CORE_HI).contains(&t1) {
                core += 1;
            }
        }
        let frac = core as f64 / n as f64;
        assert!((frac - 0.9892).abs() < 0.005, "{frac}");
    }

    #[test]
    fn t1_draws_are_reproducible() {
        let a: Vec<f64> = (0..5)
            .map({
                let mut r = seeded(4);
                move |_| sample_t1(&mut r)
            })
            .collect();
        let b: Vec<f64> = (0..5)
            .map({
                let mut r = seeded(4);
                move |_| sample_t1(&mut r)
            })
            .collect();
        assert_eq!(a, b);
    }

    #[test]
    fn nominal_timing() {
        let t = Gen2Timing::nominal(&cfg());
        assert!((t.t4 - 144e-6).abs() < 1e-15);
        assert!((t.t_rn16 - 575e-6).abs() < 1e-15);
        assert!(t.validate(&cfg()).is_ok());
    }

    #[test]
    fn reply_window_is_offset_by_t1() {
        let timing = Gen2Timing {
            t1: 250e-6,
            t2: 100e-6,
            ..Gen2Timing::nominal(&cfg())
        };
        let r = build_query_round(&timing, &Rn16Message::from_payload(7), &cfg()).unwrap();
        let qe = r.query_end();
        assert!((r.cw_span() - 925e-6).abs() < 1e-12);
        assert!((r.reply_start() - qe - 250e-6).abs() < 1e-12);
        assert!((r.reply_end() - qe - 825e-6).abs() < 1e-12);
    }

    #[test]
    fn nominal_round_lasts_measured_length() {
        let t = Gen2Timing::nominal(&cfg());
        let r = build_query_round(&t, &Rn16Message::from_payload(0), &cfg()).unwrap();
        assert!((r.duration() - ROUND_LEN_NOMINAL).abs() < 1e-12);
        assert!((r.reply_start() - r.query_end() - T1_NOMINAL).abs() < 1e-12);
    }

    #[test]
    fn sampled_rounds_conserve_time_and_bound_reply() {
        let mut rng = seeded(5);
        for _ in 0..10_000 {
            let timing = Gen2Timing::sample(&cfg(), &mut rng);
            let r = QueryRound::build(&timing, &Rn16Message::random(&mut rng), &cfg(), QUERY_CMD_DEFAULT, 1.0).unwrap();
            let total: f64 = r.segments.iter().map(Segment::duration).sum();
            let expect = timing.t4 + QUERY_CMD_DEFAULT + timing.t1 + timing.t2 + timing.t_rn16;
            assert!((total - expect).abs() < 1e-12);
            assert!((r.duration() - expect).abs() < 1e-12);
            let lo = r.reply_start() - r.query_end();
            let hi = r.reply_end() - r.query_end();
            assert!(lo >= T1_MIN - 1e-12 && hi <= T1_MAX + 575e-6 + 1e-12);
        }
    }

    #[test]
    fn states_follow_reply_levels() {
        let t = Gen2Timing::nominal(&cfg());
        let r = build_query_round(&t, &Rn16Message::from_payload(0), &cfg()).unwrap();
        assert_eq!(r.state_at(r.t0 + 1e-6), Some(SampleState::Cw));
        assert_eq!(r.state_at(r.query_end() - 1e-6), Some(SampleState::Command));
        // preamble starts high
        assert_eq!(r.state_at(r.reply_start() + 1e-6), Some(SampleState::Backscatter));
        assert_eq!(r.state_at(r.reply_start() + 13e-6), Some(SampleState::Backscatter));
        assert_eq!(r.state_at(r.reply_start() + 26e-6), Some(SampleState::Cw));
        assert_eq!(r.state_at(r.end() + 1e-6), None);
    }

    #[test]
    fn invalid_timing_rejected() {
        let t = Gen2Timing {
            t1: 300e-6,
            ..Gen2Timing::nominal(&cfg())
        };
        assert!(build_query_round(&t, &Rn16Message::from_payload(0), &cfg()).is_err());
    }
}
