//! Seeded experiments: each takes its configuration and one seed and returns
//! a plain report. Nothing here does IO.

use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::scene::{
    capture_reports, capture_series, covering_rounds, plan_rounds, scene_report_times, sniff_round, SceneConfig,
    SnifferChannel,
};
use crate::adversary::{attack_success_logprob, candidate_set, guess_round, rhythm_from_events, AttackOutcome};
use crate::auth::{
    detect_taps, emulate_observer, gen_user, sample_profile, sample_trial, train_classifier, verify, ClassifierConfig,
    ClassifierKind, DetectConfig, ObserverConfig, ObserverSkill, PopulationConfig, Reason, RhythmClassifier,
    SyntheticUser, TapEventSeq, TrainReport, Verdict,
};
use crate::channel::{CarrierPlan, RhythmSpec};
use crate::dsp::{backscatter_phase, process_reports, PhaseReport, ProcessedSeries, ReportStream};
use crate::error::{Error, Result};
use crate::hopping::schedule::{N_INTERVALS, PHASES_PER_LIBRARY, RECOVERY_START_MAX};
use crate::hopping::{make_library, make_schedule, reader_recover, verify_schedule, HoppingSchedule};
use crate::phy::Channel;
use crate::phy::{build_query_round, synthesize_round, Fm0Config, Gen2Timing, Rn16Message, SampleState, SynthSpan};
use crate::rng::{derive_seed, sub_rng};
use crate::units::{wrap_2pi, wrap_pi};

fn trial_index(user: usize, trial: usize) -> u64 {
    ((user as u64) << 20) | trial as u64
}

/// Largest press or release error when the counts agree.
pub fn event_error(truth: &RhythmSpec, detected: &TapEventSeq) -> Option<f64> {
    (truth.taps.len() == detected.len()).then(|| {
        truth
            .taps
            .iter()
            .zip(&detected.events)
            .map(|(t, e)| (t.press - e.press).abs().max((t.release - e.release).abs()))
            .fold(0.0, f64::max)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTripCase {
    pub taps: usize,
    pub detected_fixed: Option<usize>,
    pub detected_fcc: Option<usize>,
    pub max_error_fixed: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTripReport {
    pub cases: Vec<RoundTripCase>,
    /// Cases whose fixed-carrier count matches the truth.
    pub count_matches: usize,
    /// Count matches with every event within the timing tolerance.
    pub within_tolerance: usize,
    /// Cases where the hopping-carrier count equals the fixed-carrier count.
    pub fcc_agrees: usize,
}

/// Random rhythms through the whole chain, once on a fixed carrier and once
/// with FCC frequency hopping; both runs see the same rounds and noise.
pub fn dsp_round_trip(
    n: usize,
    population: &PopulationConfig,
    scene: &SceneConfig,
    tolerance: f64,
    seed: u64,
) -> Result<RoundTripReport> {
    let fixed = SceneConfig {
        carrier: CarrierPlan::default(),
        ..scene.clone()
    };
    let fcc = SceneConfig {
        carrier: CarrierPlan::fcc(derive_seed(seed, "carrier", 0)),
        ..scene.clone()
    };
    let detect = DetectConfig::default();
    let mut cases = Vec::with_capacity(n);
    for i in 0..n {
        let user = gen_user(i, population, &mut sub_rng(seed, "rhythm", i as u64))?;
        let capture_seed = derive_seed(seed, "capture", i as u64);
        let run = |sc: &SceneConfig| {
            capture_series(&user.base, &user.profile, sc, capture_seed).and_then(|s| detect_taps(&s, &detect))
        };
        let a = run(&fixed).ok();
        let b = run(&fcc).ok();
        cases.push(RoundTripCase {
            taps: user.base.tap_count(),
            detected_fixed: a.as_ref().map(TapEventSeq::len),
            detected_fcc: b.as_ref().map(TapEventSeq::len),
            max_error_fixed: a.as_ref().and_then(|e| event_error(&user.base, e)),
        });
    }
    let count_matches = cases.iter().filter(|c| c.detected_fixed == Some(c.taps)).count();
    let within_tolerance = cases
        .iter()
        .filter(|c| c.max_error_fixed.is_some_and(|e| e <= tolerance))
        .count();
    let fcc_agrees = cases.iter().filter(|c| c.detected_fcc == c.detected_fixed).count();
    Ok(RoundTripReport {
        cases,
        count_matches,
        within_tolerance,
        fcc_agrees,
    })
}

/// A simulated user study: users, their trials and the reader's processed
/// series for each trial (`None` where the capture failed).
#[derive(Debug, Clone)]
pub struct PopulationData {
    pub users: Vec<SyntheticUser>,
    pub rhythms: Vec<Vec<RhythmSpec>>,
    pub series: Vec<Vec<Option<ProcessedSeries>>>,
}

impl PopulationData {
    pub fn failed_captures(&self) -> usize {
        self.series.iter().flatten().filter(|s| s.is_none()).count()
    }
}

pub fn simulate_population(cfg: &PopulationConfig, scene: &SceneConfig, seed: u64) -> Result<PopulationData> {
    simulate_population_with(cfg, scene, seed, |_, _, _| {})
}

/// [`simulate_population`], handing each trial's report stream to `sink`
/// as `(user, trial, reports)` before it is processed.
pub fn simulate_population_with<F>(
    cfg: &PopulationConfig,
    scene: &SceneConfig,
    seed: u64,
    mut sink: F,
) -> Result<PopulationData>
where
    F: FnMut(usize, usize, &ReportStream),
{
    cfg.validate()?;
    scene.validate()?;
    let mut users = Vec::with_capacity(cfg.users);
    let mut rhythms = Vec::with_capacity(cfg.users);
    let mut series = Vec::with_capacity(cfg.users);
    for u in 0..cfg.users {
        let user = gen_user(u, cfg, &mut sub_rng(seed, "user", u as u64))?;
        let mut rs = Vec::with_capacity(cfg.trials_per_user);
        let mut ss = Vec::with_capacity(cfg.trials_per_user);
        for t in 0..cfg.trials_per_user {
            let idx = trial_index(u, t);
            let r = sample_trial(&user, &mut sub_rng(seed, "trial", idx));
            let processed =
                capture_reports(&r, &user.profile, scene, derive_seed(seed, "capture", idx)).and_then(|stream| {
                    sink(u, t, &stream);
                    process_reports(&stream.reports, &scene.pipeline).map(|(s, _)| s)
                });
            ss.push(processed.ok());
            rs.push(r);
        }
        users.push(user);
        rhythms.push(rs);
        series.push(ss);
    }
    Ok(PopulationData { users, rhythms, series })
}

/// Trains user `u` on its first `k` trials against the first `k` trials of
/// every other user.
pub fn train_user(
    data: &PopulationData,
    u: usize,
    k: usize,
    cfg: &ClassifierConfig,
) -> Result<(RhythmClassifier, TrainReport)> {
    let positives: Vec<ProcessedSeries> = data.series[u].iter().take(k).flatten().cloned().collect();
    let negatives: Vec<ProcessedSeries> = data
        .series
        .iter()
        .enumerate()
        .filter(|(v, _)| *v != u)
        .flat_map(|(_, s)| s.iter().take(k).flatten().cloned())
        .collect();
    let cfg = ClassifierConfig {
        seed: derive_seed(cfg.seed, "train", u as u64),
        ..*cfg
    };
    train_classifier(&positives, &negatives, &cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserMetrics {
    pub user: usize,
    pub enrolled: bool,
    pub positives: usize,
    pub negatives: usize,
    pub tpr: f64,
    pub tnr: f64,
    pub fpr: f64,
    pub fnr: f64,
    /// Balanced accuracy, `(TPR + TNR) / 2`.
    pub accuracy: f64,
}

impl UserMetrics {
    fn from_counts(user: usize, enrolled: bool, tp: usize, positives: usize, tn: usize, negatives: usize) -> Self {
        let rate = |x: usize, n: usize| if n == 0 { 0.0 } else { x as f64 / n as f64 };
        let tpr = rate(tp, positives);
        let tnr = rate(tn, negatives);
        Self {
            user,
            enrolled,
            positives,
            negatives,
            tpr,
            tnr,
            fpr: 1.0 - tnr,
            fnr: 1.0 - tpr,
            accuracy: 0.5 * (tpr + tnr),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub k: usize,
    pub kind: ClassifierKind,
    pub users: Vec<UserMetrics>,
    pub enrollment_failures: usize,
    pub mean_accuracy: f64,
    pub mean_tpr: f64,
    pub mean_tnr: f64,
}

fn accepts(clf: Option<&RhythmClassifier>, s: &Option<ProcessedSeries>) -> bool {
    match (clf, s) {
        (Some(c), Some(s)) => verify(c, s).accept,
        _ => false,
    }
}

/// Held-out evaluation with `k` enrollment trials per user. A user who
/// cannot enroll is rejected on every attempt. Negatives are the held-out
/// trials of all other users (the brute-force attackers).
pub fn evaluate_population(
    data: &PopulationData,
    k: usize,
    cfg: &ClassifierConfig,
) -> Result<(EvalReport, Vec<Option<RhythmClassifier>>)> {
    let mut users = Vec::with_capacity(data.users.len());
    let mut models = Vec::with_capacity(data.users.len());
    for u in 0..data.users.len() {
        let clf = match train_user(data, u, k, cfg) {
            Ok((c, _)) => Some(c),
            Err(Error::EnrollmentFailed { .. }) => None,
            Err(e) => return Err(e),
        };
        let own = &data.series[u][k.min(data.series[u].len())..];
        let tp = own.iter().filter(|s| accepts(clf.as_ref(), s)).count();
        let mut negatives = 0;
        let mut tn = 0;
        for (v, ss) in data.series.iter().enumerate() {
            if v == u {
                continue;
            }
            for s in &ss[k.min(ss.len())..] {
                negatives += 1;
                tn += usize::from(!accepts(clf.as_ref(), s));
            }
        }
        users.push(UserMetrics::from_counts(u, clf.is_some(), tp, own.len(), tn, negatives));
        models.push(clf);
    }
    let n = users.len().max(1) as f64;
    let report = EvalReport {
        k,
        kind: cfg.kind,
        enrollment_failures: users.iter().filter(|m| !m.enrolled).count(),
        mean_accuracy: users.iter().map(|m| m.accuracy).sum::<f64>() / n,
        mean_tpr: users.iter().map(|m| m.tpr).sum::<f64>() / n,
        mean_tnr: users.iter().map(|m| m.tnr).sum::<f64>() / n,
        users,
    };
    Ok((report, models))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObserverReport {
    pub skill: ObserverSkill,
    pub attempts: usize,
    pub rejected: usize,
    pub rejection_rate: f64,
}

/// Every enrolled user is targeted `tries` times by an observer who watched
/// them tap; each imitation is captured with the observer's own finger.
pub fn observer_attack(
    data: &PopulationData,
    models: &[Option<RhythmClassifier>],
    skill: ObserverSkill,
    tries: usize,
    observer: &ObserverConfig,
    scene: &SceneConfig,
    seed: u64,
) -> ObserverReport {
    let mut attempts = 0;
    let mut rejected = 0;
    for (u, (user, clf)) in data.users.iter().zip(models).enumerate() {
        for i in 0..tries {
            let idx = trial_index(u, i);
            let mut rng = sub_rng(seed, "observer", idx);
            let rhythm = emulate_observer(user, skill, observer, &mut rng);
            let profile = sample_profile(&mut rng);
            let series = capture_series(&rhythm, &profile, scene, derive_seed(seed, "observer-capture", idx)).ok();
            attempts += 1;
            rejected += usize::from(!accepts(clf.as_ref(), &series));
        }
    }
    ObserverReport {
        skill,
        attempts,
        rejected,
        rejection_rate: if attempts == 0 {
            0.0
        } else {
            rejected as f64 / attempts as f64
        },
    }
}

fn sniff_scene(scene: &SceneConfig, hopping: bool) -> SceneConfig {
    SceneConfig {
        hopping,
        ..scene.clone()
    }
}

/// Runs the attacker over the rounds of one tapped rhythm, guessing once per
/// round that some report reads.
fn sniff_rhythm<R: Rng + ?Sized>(
    rhythm: &RhythmSpec,
    victim: &SyntheticUser,
    scene: &SceneConfig,
    sniffer: &SnifferChannel,
    theta_prime_size: Option<usize>,
    seed: u64,
    limit: usize,
    rng: &mut R,
) -> Result<(Vec<crate::adversary::RoundGuess>, Vec<PhaseReport>, usize, usize)> {
    let plans = plan_rounds(scene, seed, rhythm.duration)?;
    let times = scene_report_times(scene, seed, rhythm.duration)?;
    let cover = covering_rounds(&plans, &times);
    let mut guesses = Vec::new();
    let mut reports = Vec::new();
    let mut skipped = 0;
    let mut max_candidates = 1;
    let mut last: Option<(usize, Option<crate::adversary::RoundGuess>)> = None;
    for (&t, &k) in times.iter().zip(&cover) {
        if guesses.len() >= limit {
            break;
        }
        let g = match last {
            Some((j, g)) if j == k => g,
            _ => {
                let symbols = sniff_round(&plans[k], sniffer, scene, rhythm, &victim.profile, seed);
                let cands = candidate_set(&symbols, theta_prime_size, rng);
                max_candidates = max_candidates.max(cands.len());
                let g = guess_round(&symbols, &cands, rng);
                match g {
                    Some(g) => guesses.push(g),
                    None => skipped += 1,
                }
                last = Some((k, g));
                g
            }
        };
        if let Some(g) = g {
            reports.push(PhaseReport {
                t,
                phi: g.guess,
                freq: plans[k].freq,
            });
        }
    }
    Ok((guesses, reports, skipped, max_candidates))
}

/// Per-round guess statistics over at least `rounds` rounds of a victim's
/// tapping.
pub fn guess_rate(
    victim: &SyntheticUser,
    scene: &SceneConfig,
    sniffer: &SnifferChannel,
    theta_prime_size: Option<usize>,
    rounds: usize,
    seed: u64,
) -> Result<AttackOutcome> {
    let mut rng = sub_rng(seed, "attacker", 0);
    let mut guesses = Vec::with_capacity(rounds);
    let mut skipped = 0;
    let mut max_candidates = 1;
    let mut j = 0u64;
    while guesses.len() < rounds {
        let rhythm = sample_trial(victim, &mut sub_rng(seed, "victim-trial", j));
        let (g, _, s, m) = sniff_rhythm(
            &rhythm,
            victim,
            scene,
            sniffer,
            theta_prime_size,
            derive_seed(seed, "sniff", j),
            rounds - guesses.len(),
            &mut rng,
        )?;
        guesses.extend(g);
        skipped += s;
        max_candidates = max_candidates.max(m);
        j += 1;
    }
    let size = theta_prime_size.unwrap_or(max_candidates).max(1);
    Ok(AttackOutcome {
        theta_prime_size,
        log10_success_prob: attack_success_logprob(size, guesses.len().max(1))?,
        guesses,
        skipped_rounds: skipped,
        recovered_rhythm: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EavesdropTrial {
    pub hopping: bool,
    pub outcome: AttackOutcome,
    pub truth: RhythmSpec,
    /// One verdict per physical replay, stopping at the first accept.
    pub verdicts: Vec<Verdict>,
}

impl EavesdropTrial {
    /// Whether the first replay alone was accepted.
    pub fn first_accept(&self) -> bool {
        self.verdicts.first().is_some_and(|v| v.accept)
    }

    /// Whether any replay in the session was accepted.
    pub fn session_accept(&self) -> bool {
        self.verdicts.iter().any(|v| v.accept)
    }
}

/// End to end: sniff one genuine session of `victim`, rebuild the rhythm
/// from the guessed phases, then tap it on the victim's card up to `retries`
/// times in front of a reader without hopping, stopping at the first accept.
#[allow(clippy::too_many_arguments)]
pub fn eavesdrop_attack(
    victim: &SyntheticUser,
    clf: &RhythmClassifier,
    scene: &SceneConfig,
    sniffer: &SnifferChannel,
    hopping: bool,
    theta_prime_size: Option<usize>,
    retries: usize,
    seed: u64,
) -> Result<EavesdropTrial> {
    let mut rng = sub_rng(seed, "attacker", 0);
    let truth = sample_trial(victim, &mut sub_rng(seed, "victim-trial", 0));
    let sniffed = sniff_scene(scene, hopping);
    let (guesses, reports, skipped, max_candidates) = sniff_rhythm(
        &truth,
        victim,
        &sniffed,
        sniffer,
        theta_prime_size,
        derive_seed(seed, "sniff", 0),
        usize::MAX,
        &mut rng,
    )?;
    let recovered = process_reports(&reports, &scene.pipeline)
        .and_then(|(s, _)| detect_taps(&s, &clf.detect))
        .ok();
    let mut verdicts = Vec::new();
    match &recovered {
        Some(ev) => {
            let replay = rhythm_from_events(ev, truth.duration)?;
            let profile = sample_profile(&mut rng);
            let reader = sniff_scene(scene, false);
            for k in 0..retries.max(1) as u64 {
                let v = match capture_series(&replay, &profile, &reader, derive_seed(seed, "replay", k)) {
                    Ok(s) => verify(clf, &s),
                    Err(_) => Verdict {
                        accept: false,
                        score: f64::NEG_INFINITY,
                        reason: Reason::NoRhythmDetected,
                    },
                };
                let done = v.accept;
                verdicts.push(v);
                if done {
                    break;
                }
            }
        }
        None => verdicts.push(Verdict {
            accept: false,
            score: f64::NEG_INFINITY,
            reason: Reason::NoRhythmDetected,
        }),
    }
    let size = theta_prime_size.unwrap_or(max_candidates).max(1);
    Ok(EavesdropTrial {
        hopping,
        outcome: AttackOutcome {
            theta_prime_size,
            log10_success_prob: attack_success_logprob(size, guesses.len().max(1))?,
            guesses,
            skipped_rounds: skipped,
            recovered_rhythm: recovered,
        },
        truth,
        verdicts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub rounds: usize,
    pub failures: usize,
    /// Recovered phase against the phase a constant-CW reader extracts from
    /// the same round.
    pub rms_vs_constant_cw: f64,
    /// Recovered phase against the noise-free truth.
    pub rms_vs_truth: f64,
}

/// Reader recovery under hopping, compared round by round with constant-CW
/// extraction. Each round gets a fresh schedule, timing, payload and a random
/// static tap rotation.
pub fn recovery_experiment(rounds: usize, snr_db: Option<f64>, seed: u64) -> Result<RecoveryReport> {
    let cfg = Fm0Config::default();
    let mut sq_cw = 0.0;
    let mut sq_truth = 0.0;
    let mut ok = 0usize;
    let mut failures = 0;
    for k in 0..rounds as u64 {
        let mut rng = sub_rng(seed, "recovery", k);
        let lib = make_library(&mut rng);
        let sched = make_schedule(&mut rng, &lib);
        let timing = Gen2Timing::sample(&cfg, &mut rng);
        let round = build_query_round(&timing, &Rn16Message::random(&mut rng), &cfg)?;
        let ch = Channel {
            cw_gain: Complex64::from_polar(1.0, rng.random_range(0.0..core::f64::consts::TAU)),
            bs_amplitude: 2.5,
            bs_phase: rng.random_range(0.0..core::f64::consts::TAU),
            snr_db,
        };
        let tap = -rng.random_range(0.0..0.75);
        let qe = round.query_end();
        let hop = synthesize_round(
            &round,
            |t| sched.cw_phase_at(t - qe),
            &ch,
            |_| tap,
            &cfg,
            SynthSpan::AfterQuery,
            &mut rng,
        );
        let flat = synthesize_round(&round, |_| 0.0, &ch, |_| tap, &cfg, SynthSpan::AfterQuery, &mut rng);
        let s1: Vec<Complex64> = flat.samples_in(SampleState::Cw).collect();
        let s2: Vec<Complex64> = flat.samples_in(SampleState::Backscatter).collect();
        match (reader_recover(&hop.trace, &sched, qe), backscatter_phase(&s1, &s2)) {
            (Ok(a), Ok(b)) => {
                sq_cw += wrap_pi(a - b).powi(2);
                sq_truth += wrap_pi(a - wrap_2pi(ch.bs_phase + tap)).powi(2);
                ok += 1;
            }
            _ => failures += 1,
        }
    }
    let n = ok.max(1) as f64;
    Ok(RecoveryReport {
        rounds,
        failures,
        rms_vs_constant_cw: (sq_cw / n).sqrt(),
        rms_vs_truth: (sq_truth / n).sqrt(),
    })
}

/// Upper critical value of a chi-square distribution with `df` degrees of
/// freedom at standard-normal quantile `z` (Wilson-Hilferty).
pub fn chi_square_critical(df: usize, z: f64) -> f64 {
    let k = df as f64;
    let a = 2.0 / (9.0 * k);
    k * (1.0 - a + z * a.sqrt()).powi(3)
}

pub fn chi_square_uniform(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let e = total as f64 / counts.len() as f64;
    counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum()
}

/// Standard-normal quantile for a 0.1% upper tail.
pub const Z_999: f64 = 3.090_232;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleAudit {
    pub count: usize,
    pub violating_schedules: usize,
    pub violations: Vec<(alloc::string::String, usize)>,
    /// `theta_reserve - theta_init`, 24 bins.
    pub reserve_offset_hist: Vec<u64>,
    /// Recovery start `n`, 111 bins.
    pub start_hist: Vec<u64>,
    /// Uses per library offset summed over all schedules.
    pub phase_usage: Vec<u64>,
    pub reserve_chi2: f64,
    pub reserve_chi2_critical: f64,
    pub start_chi2: f64,
    pub start_chi2_critical: f64,
}

/// Schedule `i` of the audit stream for `seed`.
pub fn audit_schedule(seed: u64, i: u64) -> HoppingSchedule {
    let mut rng = sub_rng(seed, "schedule", i);
    let lib = make_library(&mut rng);
    make_schedule(&mut rng, &lib)
}

pub fn schedule_audit(count: usize, seed: u64) -> ScheduleAudit {
    let t_rn16 = Rn16Message::SYMBOLS as f64 * Fm0Config::default().t_pri();
    let mut violations: Vec<(alloc::string::String, usize)> = Vec::new();
    let mut violating = 0;
    let mut reserve = alloc::vec![0u64; PHASES_PER_LIBRARY];
    let mut start = alloc::vec![0u64; RECOVERY_START_MAX + 1];
    let mut usage = alloc::vec![0u64; PHASES_PER_LIBRARY];
    for i in 0..count as u64 {
        let s = audit_schedule(seed, i);
        let v = verify_schedule(&s, t_rn16);
        violating += usize::from(!v.is_empty());
        for x in v {
            match violations.iter_mut().find(|(c, _)| c == x.code) {
                Some((_, n)) => *n += 1,
                None => violations.push((x.code.into(), 1)),
            }
        }
        let off = s.theta_reserve.wrapping_sub(s.theta_init) as usize;
        if let Some(b) = reserve.get_mut(off) {
            *b += 1;
        }
        if let Some(b) = start.get_mut(s.n) {
            *b += 1;
        }
        for p in s.assignment.iter().take(N_INTERVALS) {
            if let Some(b) = usage.get_mut(p.wrapping_sub(s.theta_init) as usize) {
                *b += 1;
            }
        }
    }
    ScheduleAudit {
        count,
        violating_schedules: violating,
        violations,
        reserve_chi2: chi_square_uniform(&reserve),
        reserve_chi2_critical: chi_square_critical(PHASES_PER_LIBRARY - 1, Z_999),
        start_chi2: chi_square_uniform(&start),
        start_chi2_critical: chi_square_critical(RECOVERY_START_MAX, Z_999),
        reserve_offset_hist: reserve,
        start_hist: start,
        phase_usage: usage,
    }
}
