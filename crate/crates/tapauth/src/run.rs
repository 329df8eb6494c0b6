//! The command pipelines. Each one takes a validated scenario, writes its
//! files under the output directory and returns the bundle it wrote.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use tracing::{info, warn};

use tapauth_core::adversary::advanced_feasibility;
use tapauth_core::auth::detect_taps;
use tapauth_core::channel::tap::tap_phase_at;
use tapauth_core::channel::{link_powers, LinkBudget, LinkPowers};
use tapauth_core::dsp::{process_reports, PhaseReport};
use tapauth_core::phy::{synthesize_round, SampleState, SynthSpan};
use tapauth_core::rng::sub_rng;
use tapauth_core::sim::{
    audit_schedule, capture_reports, eavesdrop_attack, evaluate_population, guess_rate, observer_attack, plan_rounds,
    schedule_audit, simulate_population, simulate_population_with, train_user, EvalReport, PopulationData,
};
use tapauth_core::units::watts_to_dbm;
use tapauth_core::Error as CoreError;

use crate::bundle::ResultBundle;
use crate::error::{HarnessError, Result};
use crate::formats::iq::{markers_path, write_trace};
use crate::formats::series::{parse_float_csv, read_reports, render_csv, write_reports, write_series};
use crate::formats::{read_text, user_id, write_json, write_text, AttackReport, DatasetManifest, FeasibilityInput};
use crate::scenario::{AttackMode, Scenario};

/// Where and how a command writes.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub out: PathBuf,
    /// Stamp bundles with the wall-clock time.
    pub provenance_time: bool,
}

/// A finished command. `failure` is set when the experiment ran but did
/// not succeed (for example a user could not enroll); its files are written
/// either way.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub bundle: ResultBundle,
    pub failure: Option<String>,
}

struct Writer<'a> {
    ctx: &'a RunContext,
    bundle: ResultBundle,
}

impl<'a> Writer<'a> {
    fn begin(ctx: &'a RunContext, scenario: &Scenario, command: &str) -> Result<Self> {
        let mut bundle = ResultBundle::new(command, scenario, ctx.provenance_time);
        write_text(&ctx.out.join("scenario.json"), &(scenario.to_json() + "\n"))?;
        bundle.artifact("scenario", "scenario.json");
        Ok(Self { ctx, bundle })
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.ctx.out.join(rel)
    }

    fn text(&mut self, kind: &str, rel: &str, text: &str) -> Result<()> {
        write_text(&self.path(rel), text)?;
        self.bundle.artifact(kind, rel);
        Ok(())
    }

    fn json<T: Serialize + ?Sized>(&mut self, kind: &str, rel: &str, value: &T) -> Result<()> {
        write_json(&self.path(rel), value)?;
        self.bundle.artifact(kind, rel);
        Ok(())
    }

    fn finish(self, failure: Option<String>) -> Result<RunOutput> {
        self.bundle.write(&self.ctx.out)?;
        Ok(RunOutput {
            bundle: self.bundle,
            failure,
        })
    }
}

fn population(scenario: &Scenario) -> Result<PopulationData> {
    let data = simulate_population(
        &scenario.population_config(),
        &scenario.scene(),
        scenario.sub_seed("population"),
    )?;
    report_failed_captures(&data);
    Ok(data)
}

fn report_failed_captures(data: &PopulationData) {
    for (u, ss) in data.series.iter().enumerate() {
        for (t, s) in ss.iter().enumerate() {
            if s.is_none() {
                warn!(user = u, trial = t, "capture unusable, trial skipped");
            }
        }
    }
}

pub fn run_enroll(scenario: &Scenario, ctx: &RunContext) -> Result<RunOutput> {
    let mut w = Writer::begin(ctx, scenario, "enroll")?;
    let k = scenario.population.k;
    let cfg = scenario.classifier_config();
    let mut manifest = DatasetManifest {
        seed: scenario.seed,
        users: BTreeMap::new(),
    };
    let mut write_error = None;
    let data = simulate_population_with(
        &scenario.population_config(),
        &scenario.scene(),
        scenario.sub_seed("population"),
        |u, t, stream| {
            if write_error.is_some() {
                return;
            }
            let rel = format!("trials/{}/trial_{t:02}.csv", user_id(u));
            match write_reports(&ctx.out.join(&rel), &stream.reports) {
                Ok(()) => manifest.users.entry(user_id(u)).or_default().push(rel),
                Err(e) => write_error = Some(e),
            }
        },
    )?;
    if let Some(e) = write_error {
        return Err(e);
    }
    report_failed_captures(&data);
    info!(
        users = data.users.len(),
        trials = manifest.trial_count(),
        "population captured"
    );
    w.json("dataset-manifest", "dataset.json", &manifest)?;

    let mut rows = Vec::new();
    let mut failures = 0;
    let mut train_acc = Vec::new();
    for u in 0..data.users.len() {
        match train_user(&data, u, k, &cfg) {
            Ok((clf, rep)) => {
                w.json("model", &format!("models/{}.json", user_id(u)), &clf)?;
                train_acc.push(rep.train_accuracy);
                rows.push(vec![
                    user_id(u),
                    "1".into(),
                    rep.usable_positives.to_string(),
                    rep.usable_negatives.to_string(),
                    rep.train_accuracy.to_string(),
                ]);
            }
            Err(CoreError::EnrollmentFailed { usable, .. }) => {
                warn!(user = u, usable, "enrollment failed");
                failures += 1;
                rows.push(vec![
                    user_id(u),
                    "0".into(),
                    usable.to_string(),
                    String::new(),
                    String::new(),
                ]);
            }
            Err(e) => return Err(e.into()),
        }
    }
    w.text(
        "enrollment",
        "enrollment.csv",
        &render_csv(
            &[
                "user",
                "enrolled",
                "usable_positives",
                "usable_negatives",
                "train_accuracy",
            ],
            rows,
        ),
    )?;
    let users = data.users.len();
    w.bundle.metric("users", users as f64);
    w.bundle.metric("trials", manifest.trial_count() as f64);
    w.bundle.metric("failed_captures", data.failed_captures() as f64);
    w.bundle.metric("enrolled", (users - failures) as f64);
    w.bundle.metric("enrollment_failures", failures as f64);
    if !train_acc.is_empty() {
        w.bundle.metric(
            "accuracy_train_mean",
            train_acc.iter().sum::<f64>() / train_acc.len() as f64,
        );
    }
    let failure = (failures > 0).then(|| format!("{failures} of {users} users failed enrollment with K = {k}"));
    w.finish(failure)
}

/// Linear-interpolation quantiles at 0, 25, 50, 75 and 100 percent.
pub fn box_quantiles(values: &[f64]) -> Option<[f64; 5]> {
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let at = |p: f64| {
        let x = p * (v.len() - 1) as f64;
        let (lo, hi) = (x.floor() as usize, x.ceil() as usize);
        v[lo] + (x - lo as f64) * (v[hi] - v[lo])
    };
    Some([at(0.0), at(0.25), at(0.5), at(0.75), at(1.0)])
}

pub const PER_USER_HEADER: [&str; 10] = [
    "k",
    "user",
    "enrolled",
    "positives",
    "negatives",
    "tpr",
    "tnr",
    "fpr",
    "fnr",
    "accuracy",
];
const BOX_METRICS: [(&str, usize); 5] = [("accuracy", 9), ("tpr", 5), ("tnr", 6), ("fpr", 7), ("fnr", 8)];

fn per_user_rows(reports: &[EvalReport]) -> Vec<Vec<String>> {
    reports
        .iter()
        .flat_map(|r| {
            r.users.iter().map(move |m| {
                vec![
                    r.k.to_string(),
                    m.user.to_string(),
                    u8::from(m.enrolled).to_string(),
                    m.positives.to_string(),
                    m.negatives.to_string(),
                    m.tpr.to_string(),
                    m.tnr.to_string(),
                    m.fpr.to_string(),
                    m.fnr.to_string(),
                    m.accuracy.to_string(),
                ]
            })
        })
        .collect()
}

/// Box-plot table over users: one row per metric and K.
pub fn boxplot_csv(per_user: &[Vec<f64>]) -> String {
    let mut ks: Vec<u64> = per_user.iter().map(|r| r[0] as u64).collect();
    ks.sort_unstable();
    ks.dedup();
    let mut rows = Vec::new();
    for (name, col) in BOX_METRICS {
        for &k in &ks {
            let vals: Vec<f64> = per_user.iter().filter(|r| r[0] as u64 == k).map(|r| r[col]).collect();
            if let Some(q) = box_quantiles(&vals) {
                let mut row = vec![name.to_string(), k.to_string()];
                row.extend(q.iter().map(f64::to_string));
                rows.push(row);
            }
        }
    }
    render_csv(&["metric", "k", "q0", "q25", "q50", "q75", "q100"], rows)
}

pub fn run_eval(scenario: &Scenario, ctx: &RunContext) -> Result<RunOutput> {
    let mut w = Writer::begin(ctx, scenario, "eval")?;
    let data = population(scenario)?;
    let cfg = scenario.classifier_config();
    let mut reports = Vec::new();
    for &k in &scenario.population.k_values {
        let (rep, _) = evaluate_population(&data, k, &cfg)?;
        info!(
            k,
            accuracy = rep.mean_accuracy,
            tpr = rep.mean_tpr,
            tnr = rep.mean_tnr,
            "evaluated"
        );
        reports.push(rep);
    }
    let table: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            let kind = serde_json::to_value(r.kind)
                .ok()
                .and_then(|v| v.as_str().map(String::from))
                .unwrap_or_default();
            vec![
                r.k.to_string(),
                kind,
                r.mean_accuracy.to_string(),
                r.mean_tpr.to_string(),
                r.mean_tnr.to_string(),
                (1.0 - r.mean_tnr).to_string(),
                (1.0 - r.mean_tpr).to_string(),
                r.enrollment_failures.to_string(),
            ]
        })
        .collect();
    w.text(
        "accuracy-table",
        "accuracy.csv",
        &render_csv(
            &[
                "k",
                "kind",
                "accuracy",
                "tpr",
                "tnr",
                "fpr",
                "fnr",
                "enrollment_failures",
            ],
            table,
        ),
    )?;
    let rows = per_user_rows(&reports);
    let per_user = render_csv(&PER_USER_HEADER, rows);
    w.text("per-user-metrics", "per_user.csv", &per_user)?;
    let parsed = parse_float_csv(&per_user, &PER_USER_HEADER, Path::new("per_user.csv"))?;
    w.text("boxplot", "boxplot.csv", &boxplot_csv(&parsed))?;
    for r in &reports {
        let k = r.k;
        w.bundle.metric(&format!("accuracy_k{k}"), r.mean_accuracy);
        w.bundle.metric(&format!("tpr_k{k}"), r.mean_tpr);
        w.bundle.metric(&format!("tnr_k{k}"), r.mean_tnr);
        w.bundle.metric(&format!("fpr_k{k}"), 1.0 - r.mean_tnr);
        w.bundle.metric(&format!("fnr_k{k}"), 1.0 - r.mean_tpr);
        w.bundle
            .metric(&format!("enrollment_failures_k{k}"), r.enrollment_failures as f64);
    }
    w.bundle.metric("users", data.users.len() as f64);
    w.bundle.metric("failed_captures", data.failed_captures() as f64);
    w.finish(None)
}

fn mode_name(mode: AttackMode) -> String {
    serde_json::to_value(mode)
        .ok()
        .and_then(|v| v.as_str().map(String::from))
        .unwrap_or_default()
}

pub fn run_attack(scenario: &Scenario, ctx: &RunContext) -> Result<RunOutput> {
    let mut w = Writer::begin(ctx, scenario, "attack")?;
    let attack = &scenario.attack;
    let mode = mode_name(attack.mode);
    let seed = scenario.sub_seed("attack");
    if attack.mode == AttackMode::AdvancedEavesdrop {
        let reports: Vec<_> = attack
            .measurements
            .iter()
            .map(|m| m.decide(&attack.sniffer_model))
            .collect();
        let feasible = reports.iter().filter(|r| r.feasible).count();
        w.json("feasibility-reports", "feasibility.json", &reports)?;
        let lb = scenario.link_budget()?;
        let collinear = advanced_feasibility(&lb, &attack.sniffer_model)?;
        w.json("link-feasibility", "link_feasibility.json", &collinear)?;
        w.bundle.metric("measurements", reports.len() as f64);
        w.bundle.metric("feasible_measurements", feasible as f64);
        w.bundle
            .metric("infeasible_measurements", (reports.len() - feasible) as f64);
        w.bundle.metric("threshold_db", attack.sniffer_model.threshold_gap_db());
        w.bundle.metric("link_margin_db", collinear.margin_db);
        w.bundle.metric("d1_max_m", collinear.d1_max);
        w.bundle.metric("d2_min_m", collinear.d2_min);
        return w.finish(None);
    }

    let data = population(scenario)?;
    let cfg = scenario.classifier_config();
    let (eval, models) = evaluate_population(&data, scenario.population.k, &cfg)?;
    if models.iter().all(Option::is_none) {
        return w.finish(Some(format!("no user could enroll with K = {}", scenario.population.k)));
    }
    let scene = scenario.scene();
    let mut reports = Vec::new();
    match attack.mode {
        AttackMode::BruteForce => {
            for m in eval.users.iter().filter(|m| m.enrolled) {
                let accepted = m.negatives - (m.tnr * m.negatives as f64).round() as usize;
                reports.push(AttackReport {
                    mode: mode.clone(),
                    theta_prime_size: None,
                    n_rounds: m.negatives,
                    per_round_success_rate: m.fpr,
                    log10_success_prob: (m.fpr > 0.0).then(|| m.fpr.log10()),
                    verified_accept: accepted > 0,
                });
            }
            let n = reports.len() as f64;
            let rejection = eval.users.iter().filter(|m| m.enrolled).map(|m| m.tnr).sum::<f64>() / n;
            w.bundle.metric("rejection_rate", rejection);
            w.bundle.metric("accept_rate", 1.0 - rejection);
            w.bundle.metric("targets", n);
        }
        AttackMode::Visual => {
            let obs = observer_attack(
                &data,
                &models,
                attack.skill,
                attack.tries,
                &attack.observer,
                &scene,
                seed,
            );
            let accept = 1.0 - obs.rejection_rate;
            reports.push(AttackReport {
                mode: mode.clone(),
                theta_prime_size: None,
                n_rounds: obs.attempts,
                per_round_success_rate: accept,
                log10_success_prob: (accept > 0.0).then(|| accept.log10()),
                verified_accept: obs.rejected < obs.attempts,
            });
            w.bundle.metric("rejection_rate", obs.rejection_rate);
            w.bundle.metric("accept_rate", accept);
            w.bundle.metric("attempts", obs.attempts as f64);
        }
        AttackMode::BasicEavesdrop => {
            let hopping = scenario.protocol.hopping;
            let size = if hopping { attack.theta_prime_size } else { None };
            let users = data.users.len();
            let (mut sessions, mut accepted, mut first) = (0usize, 0usize, 0usize);
            let (mut guesses, mut hits) = (0usize, 0usize);
            for i in 0..attack.sessions {
                let u = i % users;
                let Some(clf) = &models[u] else { continue };
                let s = tapauth_core::rng::derive_seed(seed, "session", i as u64);
                let trial = eavesdrop_attack(
                    &data.users[u],
                    clf,
                    &scene,
                    &scenario.channel.sniffer,
                    hopping,
                    size,
                    cfg.retries,
                    s,
                )?;
                let o = &trial.outcome;
                sessions += 1;
                accepted += usize::from(trial.session_accept());
                first += usize::from(trial.first_accept());
                guesses += o.guesses.len();
                hits += o.guesses.iter().filter(|g| g.success).count();
                reports.push(AttackReport {
                    mode: mode.clone(),
                    theta_prime_size: o.theta_prime_size,
                    n_rounds: o.guesses.len(),
                    per_round_success_rate: o.success_rate(),
                    log10_success_prob: Some(o.log10_success_prob),
                    verified_accept: trial.session_accept(),
                });
            }
            let rate = |a: usize, n: usize| if n == 0 { 0.0 } else { a as f64 / n as f64 };
            info!(sessions, accepted, hopping, "eavesdrop sessions done");
            w.bundle.metric("sessions", sessions as f64);
            w.bundle.metric("accept_rate", rate(accepted, sessions));
            w.bundle.metric("accept_rate_first_replay", rate(first, sessions));
            w.bundle.metric("success_rate_per_round", rate(hits, guesses));
            if attack.guess_rounds > 0 {
                let victim = &data.users[0];
                let g = guess_rate(
                    victim,
                    &scene,
                    &scenario.channel.sniffer,
                    size,
                    attack.guess_rounds,
                    tapauth_core::rng::derive_seed(seed, "guess", 0),
                )?;
                w.bundle.metric("success_rate_guess", g.success_rate());
                w.bundle.metric("guess_rounds", g.guesses.len() as f64);
                w.json(
                    "guess-rate",
                    "guess_rate.json",
                    &AttackReport {
                        mode: mode.clone(),
                        theta_prime_size: g.theta_prime_size,
                        n_rounds: g.guesses.len(),
                        per_round_success_rate: g.success_rate(),
                        log10_success_prob: Some(g.log10_success_prob),
                        verified_accept: false,
                    },
                )?;
            }
        }
        AttackMode::AdvancedEavesdrop => unreachable!("handled above"),
    }
    w.json("attack-reports", "attack_report.json", &reports)?;
    w.finish(None)
}

pub fn run_schedule_audit(scenario: &Scenario, ctx: &RunContext) -> Result<RunOutput> {
    let count = scenario.protocol.audit_count;
    if count == 0 {
        return Err(HarnessError::config("schedule audit needs a count of at least 1"));
    }
    let mut w = Writer::begin(ctx, scenario, "schedule-audit")?;
    let seed = scenario.sub_seed("schedule");
    let audit = schedule_audit(count, seed);
    let hist = |name: &str, h: &[u64]| {
        render_csv(
            &[name, "count"],
            h.iter().enumerate().map(|(i, c)| vec![i.to_string(), c.to_string()]),
        )
    };
    w.json("schedule-audit", "schedule_audit.json", &audit)?;
    w.text(
        "reserve-offset-histogram",
        "reserve_offset_hist.csv",
        &hist("offset_deg", &audit.reserve_offset_hist),
    )?;
    w.text(
        "recovery-start-histogram",
        "start_hist.csv",
        &hist("n", &audit.start_hist),
    )?;
    w.text(
        "phase-usage",
        "phase_usage.csv",
        &hist("offset_deg", &audit.phase_usage),
    )?;
    w.json("schedule", "schedule_000.json", &audit_schedule(seed, 0))?;
    w.bundle.metric("schedules", count as f64);
    w.bundle.metric("violating_schedules", audit.violating_schedules as f64);
    w.bundle.metric("reserve_chi2", audit.reserve_chi2);
    w.bundle.metric("reserve_chi2_critical", audit.reserve_chi2_critical);
    w.bundle.metric("start_chi2", audit.start_chi2);
    w.bundle.metric("start_chi2_critical", audit.start_chi2_critical);
    let failure = (audit.violating_schedules > 0).then(|| {
        format!(
            "{} schedules violate the protocol invariants",
            audit.violating_schedules
        )
    });
    w.finish(failure)
}

#[derive(Debug, Clone, Serialize)]
struct LinkBudgetReport {
    budget: LinkBudget,
    powers_w: LinkPowers,
    p_cw_d1_dbm: f64,
    p_bs_d2_dbm: f64,
}

pub fn run_linkbudget(scenario: &Scenario, ctx: &RunContext) -> Result<RunOutput> {
    let mut w = Writer::begin(ctx, scenario, "linkbudget")?;
    let lb = scenario.link_budget()?;
    let sniffer = &scenario.attack.sniffer_model;
    let p = link_powers(&lb)?;
    let report = LinkBudgetReport {
        budget: lb,
        powers_w: p,
        p_cw_d1_dbm: watts_to_dbm(p.p_cw_d1),
        p_bs_d2_dbm: watts_to_dbm(p.p_bs_d2),
    };
    let measured = FeasibilityInput {
        d0_m: lb.d0,
        p_cw_dbm: report.p_cw_d1_dbm,
        p_bs_dbm: report.p_bs_d2_dbm,
    }
    .decide(sniffer);
    let collinear = advanced_feasibility(&lb, sniffer)?;
    w.json("link-budget", "link_budget.json", &report)?;
    w.json("feasibility-reports", "feasibility.json", &[measured])?;
    w.json("link-feasibility", "link_feasibility.json", &collinear)?;
    w.bundle.metric("p_cw_d1_dbm", report.p_cw_d1_dbm);
    w.bundle.metric("p_bs_d2_dbm", report.p_bs_d2_dbm);
    w.bundle.metric("gap_db", measured.gap_db);
    w.bundle.metric("threshold_db", measured.threshold_db);
    w.bundle.metric("link_margin_db", collinear.margin_db);
    w.bundle.metric("d1_max_m", collinear.d1_max);
    w.bundle.metric("d2_min_m", collinear.d2_min);
    w.bundle.metric("feasible", f64::from(u8::from(collinear.feasible)));
    w.finish(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportKind {
    /// Raw phase reports against time.
    Phase,
    /// The processed phase-difference series and detected taps.
    PhaseDiff,
    /// One round's I/Q samples.
    Iq,
    /// Per-user metric quantiles from an eval bundle.
    Boxplot,
}

/// Where exported series come from. Without either, single-rhythm series
/// are simulated from the scenario's capture section.
#[derive(Debug, Clone, Default)]
pub struct ExportSource {
    /// A phase-report CSV to ingest instead of simulating.
    pub reports: Option<PathBuf>,
    /// A bundle directory written by an earlier command.
    pub bundle: Option<PathBuf>,
}

fn export_reports(scenario: &Scenario, source: &ExportSource) -> Result<Vec<PhaseReport>> {
    match &source.reports {
        Some(p) => read_reports(p),
        None => {
            let c = &scenario.capture;
            Ok(capture_reports(
                &c.rhythm,
                &scenario.channel.tap_profile,
                &scenario.scene(),
                scenario.sub_seed("capture"),
            )?
            .reports)
        }
    }
}

pub fn run_export(scenario: &Scenario, ctx: &RunContext, kind: ExportKind, source: &ExportSource) -> Result<RunOutput> {
    let mut w = Writer::begin(ctx, scenario, "export")?;
    match kind {
        ExportKind::Phase => {
            let reports = export_reports(scenario, source)?;
            write_reports(&w.path("phase.csv"), &reports)?;
            w.bundle.artifact("phase-reports", "phase.csv");
            w.bundle.metric("reports", reports.len() as f64);
        }
        ExportKind::PhaseDiff => {
            let reports = export_reports(scenario, source)?;
            let (series, diag) = process_reports(&reports, &scenario.scene().pipeline)?;
            write_series(&w.path("phase_diff.csv"), &series)?;
            w.bundle.artifact("phase-diff", "phase_diff.csv");
            let events = match detect_taps(&series, &scenario.detect()) {
                Ok(ev) => Some(ev),
                Err(CoreError::NoRhythmDetected) => None,
                Err(e) => return Err(e.into()),
            };
            w.json("tap-events", "events.json", &events)?;
            w.bundle.metric("reports", reports.len() as f64);
            w.bundle.metric("samples", series.len() as f64);
            w.bundle.metric("hop_corrected", diag.corrected.len() as f64);
            w.bundle
                .metric("taps_detected", events.as_ref().map_or(0, |e| e.events.len()) as f64);
        }
        ExportKind::Iq => {
            let c = &scenario.capture;
            let scene = scenario.scene();
            let seed = scenario.sub_seed("capture");
            let plans = plan_rounds(&scene, seed, c.rhythm.duration)?;
            let plan = plans.get(c.round).ok_or_else(|| {
                HarnessError::config(format!(
                    "capture.round {} is past the rhythm's {} rounds",
                    c.round,
                    plans.len()
                ))
            })?;
            let profile = scenario.channel.tap_profile;
            let cap = synthesize_round(
                &plan.round,
                |t| plan.cw_phase(t),
                &scene.reader.channel(plan.freq),
                |t| tap_phase_at(t, &c.rhythm, &profile),
                &scene.fm0,
                SynthSpan::AfterQuery,
                &mut sub_rng(seed, "iq-noise", plan.index),
            );
            let trace_path = w.path("iq.iq");
            write_trace(&trace_path, &cap.trace)?;
            w.bundle.artifact("iq-trace", "iq.iq");
            let markers = markers_path(Path::new("iq.iq"));
            w.bundle.artifact("iq-markers", &markers.to_string_lossy());
            let state = |s: &SampleState| match s {
                SampleState::Command => "command",
                SampleState::Cw => "s1",
                SampleState::Backscatter => "s2",
            };
            let rows = cap
                .trace
                .samples
                .iter()
                .zip(&cap.states)
                .enumerate()
                .map(|(i, (x, s))| {
                    vec![
                        cap.trace.time_of(i).to_string(),
                        x.re.to_string(),
                        x.im.to_string(),
                        state(s).to_string(),
                    ]
                });
            w.text(
                "iq-scatter",
                "iq_scatter.csv",
                &render_csv(&["t_s", "i", "q", "state"], rows),
            )?;
            w.bundle.metric("samples", cap.trace.samples.len() as f64);
            w.bundle.metric("round", plan.index as f64);
        }
        ExportKind::Boxplot => {
            let dir = source.bundle.as_ref().ok_or_else(|| {
                HarnessError::config("series per-user-metrics needs --bundle pointing at an eval output")
            })?;
            let path = dir.join("per_user.csv");
            if !path.exists() {
                return Err(HarnessError::config(format!(
                    "series per-user-metrics (per_user.csv) is missing from {}",
                    dir.display()
                )));
            }
            let rows = parse_float_csv(&read_text(&path)?, &PER_USER_HEADER, &path)?;
            w.text("boxplot", "boxplot.csv", &boxplot_csv(&rows))?;
            w.bundle.metric(
                "users",
                rows.iter()
                    .map(|r| r[1] as u64)
                    .collect::<std::collections::BTreeSet<_>>()
                    .len() as f64,
            );
        }
    }
    w.finish(None)
}
