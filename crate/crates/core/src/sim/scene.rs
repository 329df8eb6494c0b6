//! A card on a reader with a rhythm tapped on it: round planning, per-round
//! capture at the reader and at a sniffer, and the reader's report stream.

use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::adversary::{symbols_from_capture, SniffedSymbol};
use crate::channel::tap::tap_phase_at;
use crate::channel::{baseline_phase, CarrierPlan, RhythmSpec, TapProfile, PHI_CARD_DEFAULT, PHI_READER_DEFAULT};
use crate::dsp::report::{REPORT_INTERVAL_DEFAULT, REPORT_JITTER_DEFAULT};
use crate::dsp::{
    backscatter_phase, process_reports, report_stream, report_times, Centroids, PipelineConfig, ProcessedSeries,
    ReportStream, RoundObservation,
};
use crate::error::{invalid, Error, Result};
use crate::hopping::schedule::{N_INTERVALS, T1_PRIME_DEFAULT, TAU_DEFAULT};
use crate::hopping::{make_library, make_schedule, reader_recover, HoppingSchedule};
use crate::phy::iq::complex_noise;
use crate::phy::timing::QUERY_CMD_DEFAULT;
use crate::phy::{
    synthesize_round, Channel, Fm0Config, Gen2Timing, QueryRound, Rn16Message, RoundCapture, SampleState, SynthSpan,
};
use crate::rng::sub_rng;

/// How a round's phase is computed.
///
/// `Samples` synthesizes every I/Q sample with its own noise. `Centroids`
/// synthesizes noise-free samples and adds the noise of the mean directly,
/// `N(0, sigma^2 / n)`, which has the same distribution as the centroid of
/// `n` noisy samples and is several times faster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fidelity {
    Samples,
    #[default]
    Centroids,
}

/// The reader's receive geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReaderChannel {
    pub cw_gain: f64,
    pub cw_gain_phase: f64,
    /// Backscatter amplitude relative to a unit CW gain.
    pub bs_amplitude: f64,
    /// Card-reader distance, m.
    pub d0: f64,
    pub phi_reader: f64,
    pub phi_card: f64,
    pub snr_db: Option<f64>,
}

impl Default for ReaderChannel {
    fn default() -> Self {
        Self {
            cw_gain: 1.0,
            cw_gain_phase: 0.3,
            bs_amplitude: 2.5,
            d0: 0.5,
            phi_reader: PHI_READER_DEFAULT,
            phi_card: PHI_CARD_DEFAULT,
            snr_db: Some(30.0),
        }
    }
}

impl ReaderChannel {
    pub fn channel(&self, freq: f64) -> Channel {
        Channel {
            cw_gain: Complex64::from_polar(self.cw_gain, self.cw_gain_phase),
            bs_amplitude: self.bs_amplitude,
            bs_phase: baseline_phase(self.d0, freq, self.phi_reader, self.phi_card),
            snr_db: self.snr_db,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cw_gain > 0.0 && self.bs_amplitude > 0.0 && self.d0 > 0.0) {
            return Err(invalid("reader gains and distance must be positive"));
        }
        Ok(())
    }
}

/// What a passive sniffer near the card receives. Its backscatter is much
/// weaker than the leakage it hears from the reader.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SnifferChannel {
    pub cw_gain: f64,
    pub cw_gain_phase: f64,
    pub bs_amplitude: f64,
    pub bs_phase: f64,
    pub snr_db: Option<f64>,
}

impl Default for SnifferChannel {
    fn default() -> Self {
        Self {
            cw_gain: 1.0,
            cw_gain_phase: 1.3,
            bs_amplitude: 0.1,
            bs_phase: 0.4,
            snr_db: Some(60.0),
        }
    }
}

impl SnifferChannel {
    pub fn channel(&self) -> Channel {
        Channel {
            cw_gain: Complex64::from_polar(self.cw_gain, self.cw_gain_phase),
            bs_amplitude: self.bs_amplitude,
            bs_phase: self.bs_phase,
            snr_db: self.snr_db,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    pub fm0: Fm0Config,
    pub query_cmd_s: f64,
    /// Fixed link timing; per-round draws are used when absent.
    pub t1_s: Option<f64>,
    pub t2_s: Option<f64>,
    pub report_interval_s: f64,
    pub report_jitter_s: f64,
    pub reader: ReaderChannel,
    pub carrier: CarrierPlan,
    pub hopping: bool,
    pub fidelity: Fidelity,
    pub pipeline: PipelineConfig,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            fm0: Fm0Config::default(),
            query_cmd_s: QUERY_CMD_DEFAULT,
            t1_s: None,
            t2_s: None,
            report_interval_s: REPORT_INTERVAL_DEFAULT,
            report_jitter_s: REPORT_JITTER_DEFAULT,
            reader: ReaderChannel::default(),
            carrier: CarrierPlan::default(),
            hopping: false,
            fidelity: Fidelity::default(),
            pipeline: PipelineConfig::default(),
        }
    }
}

impl SceneConfig {
    /// `drawn` with any fixed T1/T2 applied.
    pub fn timing(&self, drawn: Gen2Timing) -> Gen2Timing {
        Gen2Timing {
            t1: self.t1_s.unwrap_or(drawn.t1),
            t2: self.t2_s.unwrap_or(drawn.t2),
            ..drawn
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.fm0.validate()?;
        self.reader.validate()?;
        self.carrier.validate()?;
        if !(self.query_cmd_s > 0.0) {
            return Err(invalid("Query length must be positive"));
        }
        self.timing(Gen2Timing::nominal(&self.fm0)).validate(&self.fm0)?;
        if !(self.report_interval_s > 0.0 && (0.0..self.report_interval_s).contains(&self.report_jitter_s)) {
            return Err(invalid("report interval must be positive and exceed its jitter"));
        }
        Ok(())
    }
}

/// Everything decided for one round before any sample is drawn.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundPlan {
    pub index: u64,
    pub round: QueryRound,
    pub schedule: Option<HoppingSchedule>,
    pub freq: f64,
}

impl RoundPlan {
    /// CW phase the reader transmits at absolute time `t`.
    pub fn cw_phase(&self, t: f64) -> f64 {
        let qe = self.round.query_end();
        self.schedule.as_ref().map_or(0.0, |s| s.cw_phase_at(t - qe))
    }

    /// Hop-interval index at `t`, on the default grid when not hopping.
    pub fn hop_slot(&self, t: f64) -> Option<usize> {
        let dt = t - self.round.query_end();
        match &self.schedule {
            Some(s) => s.interval_at(dt),
            None => {
                let x = (dt - T1_PRIME_DEFAULT) / TAU_DEFAULT + 1e-6;
                (x >= 0.0 && (x as usize) < N_INTERVALS).then_some(x as usize)
            }
        }
    }
}

/// Back-to-back rounds covering `[0, end)`. Round `k` draws its timing, RN16
/// and schedule from its own stream, so two scenes that differ only in
/// carrier plan or channel see identical rounds.
pub fn plan_rounds(scene: &SceneConfig, seed: u64, end: f64) -> Result<Vec<RoundPlan>> {
    let mut plans = Vec::new();
    let mut t = 0.0;
    let mut k = 0u64;
    while t < end {
        let mut rng = sub_rng(seed, "round", k);
        let timing = scene.timing(Gen2Timing::sample(&scene.fm0, &mut rng));
        let rn16 = Rn16Message::random(&mut rng);
        let schedule = scene.hopping.then(|| {
            let lib = make_library(&mut rng);
            make_schedule(&mut rng, &lib)
        });
        let round = QueryRound::build(&timing, &rn16, &scene.fm0, scene.query_cmd_s, t)?;
        t = round.end();
        plans.push(RoundPlan {
            index: k,
            freq: scene.carrier.carrier_at(round.t0),
            round,
            schedule,
        });
        k += 1;
    }
    Ok(plans)
}

fn capture_after_query(
    plan: &RoundPlan,
    ch: &Channel,
    tap: impl Fn(f64) -> f64,
    fm0: &Fm0Config,
    seed: u64,
    label: &str,
    noisy: bool,
) -> RoundCapture {
    let mut rng = sub_rng(seed, label, plan.index);
    let ch = if noisy { *ch } else { Channel { snr_db: None, ..*ch } };
    synthesize_round(
        &plan.round,
        |t| plan.cw_phase(t),
        &ch,
        tap,
        fm0,
        SynthSpan::AfterQuery,
        &mut rng,
    )
}

fn noisy_mean(sum: Complex64, n: usize, sigma: f64, rng: &mut crate::rng::SimRng) -> Option<Complex64> {
    (n > 0).then(|| sum / n as f64 + complex_noise(rng, sigma / (n as f64).sqrt()))
}

/// The reader's full-circle phase for one round.
pub fn reader_round_phase(
    plan: &RoundPlan,
    scene: &SceneConfig,
    rhythm: &RhythmSpec,
    profile: &TapProfile,
    seed: u64,
) -> Result<f64> {
    let ch = scene.reader.channel(plan.freq);
    let tap = |t: f64| tap_phase_at(t, rhythm, profile);
    let qe = plan.round.query_end();
    match scene.fidelity {
        Fidelity::Samples => {
            let cap = capture_after_query(plan, &ch, tap, &scene.fm0, seed, "reader-noise", true);
            match &plan.schedule {
                Some(s) => reader_recover(&cap.trace, s, qe),
                None => {
                    let s1: Vec<Complex64> = cap.samples_in(SampleState::Cw).collect();
                    let s2: Vec<Complex64> = cap.samples_in(SampleState::Backscatter).collect();
                    backscatter_phase(&s1, &s2)
                }
            }
        }
        Fidelity::Centroids => {
            let cap = capture_after_query(plan, &ch, tap, &scene.fm0, seed, "reader-noise", false);
            let mut sums = [Complex64::new(0.0, 0.0); 2];
            let mut counts = [0usize; 2];
            for (i, (x, st)) in cap.trace.samples.iter().zip(&cap.states).enumerate() {
                if let Some(s) = &plan.schedule {
                    let in_reserve = s
                        .interval_at(cap.trace.time_of(i) - qe)
                        .is_some_and(|k| s.is_reserve(k));
                    if !in_reserve {
                        continue;
                    }
                }
                let j = usize::from(*st == SampleState::Backscatter);
                sums[j] += x;
                counts[j] += 1;
            }
            let mut rng = sub_rng(seed, "reader-noise", plan.index);
            let sigma = ch.noise_sigma();
            let s1 = noisy_mean(sums[0], counts[0], sigma, &mut rng);
            let s2 = noisy_mean(sums[1], counts[1], sigma, &mut rng);
            let result = match (s1, s2) {
                (Some(a), Some(b)) => Centroids::from_means(a, b).map(|c| c.full_angle()),
                _ => Err(Error::DegenerateGeometry("empty cluster")),
            };
            if plan.schedule.is_some() {
                result.map_err(|_| Error::RecoveryFailed("reserve samples form a single cluster"))
            } else {
                result
            }
        }
    }
}

/// What a sniffer records in one round, grouped into symbols on the hop grid.
pub fn sniff_round(
    plan: &RoundPlan,
    sniffer: &SnifferChannel,
    scene: &SceneConfig,
    rhythm: &RhythmSpec,
    profile: &TapProfile,
    seed: u64,
) -> Vec<SniffedSymbol> {
    let ch = sniffer.channel();
    let tap = |t: f64| tap_phase_at(t, rhythm, profile);
    let truth = |t: f64| ch.bs_phase + tap(t);
    let noisy = scene.fidelity == Fidelity::Samples;
    let cap = capture_after_query(plan, &ch, tap, &scene.fm0, seed, "sniffer-noise", noisy);
    let mut symbols = symbols_from_capture(&cap, |t| plan.hop_slot(t), truth);
    if !noisy {
        let mut rng = sub_rng(seed, "sniffer-noise", plan.index);
        let sigma = ch.noise_sigma();
        for s in &mut symbols {
            s.value += complex_noise(&mut rng, sigma / (s.samples as f64).sqrt());
        }
    }
    symbols
}

/// Index of the latest round that started at or before each instant.
pub fn covering_rounds(plans: &[RoundPlan], times: &[f64]) -> Vec<usize> {
    times
        .iter()
        .map(|&t| plans.partition_point(|p| p.round.t0 <= t).saturating_sub(1))
        .collect()
}

/// Report instants over a rhythm, from the scene's report clock.
pub fn scene_report_times(scene: &SceneConfig, seed: u64, duration: f64) -> Result<Vec<f64>> {
    let mut rng = sub_rng(seed, "reports", 0);
    report_times(0.0, duration, scene.report_interval_s, scene.report_jitter_s, &mut rng)
}

/// The reader's report stream while `rhythm` is tapped. Only rounds that some
/// report reads are simulated.
pub fn capture_reports(
    rhythm: &RhythmSpec,
    profile: &TapProfile,
    scene: &SceneConfig,
    seed: u64,
) -> Result<ReportStream> {
    scene.validate()?;
    profile.validate()?;
    let times = scene_report_times(scene, seed, rhythm.duration)?;
    let plans = plan_rounds(scene, seed, rhythm.duration)?;
    let mut needed = covering_rounds(&plans, &times);
    needed.dedup();
    let observations: Vec<RoundObservation> = needed
        .iter()
        .map(|&k| {
            let p = &plans[k];
            RoundObservation {
                t_start: p.round.t0,
                freq: p.freq,
                phase: reader_round_phase(p, scene, rhythm, profile, seed),
            }
        })
        .collect();
    report_stream(&observations, &times)
}

/// Reports run through the full receive chain.
pub fn capture_series(
    rhythm: &RhythmSpec,
    profile: &TapProfile,
    scene: &SceneConfig,
    seed: u64,
) -> Result<ProcessedSeries> {
    let stream = capture_reports(rhythm, profile, scene, seed)?;
    process_reports(&stream.reports, &scene.pipeline).map(|(s, _)| s)
}
