use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tapauth::{ResultBundle, Scenario, RESULT_BUNDLE_SCHEMA};

const SMALL: &str = r#"{
  "seed": 11,
  "population": {"users": 3, "trials_per_user": 8, "k": 4, "k_values": [4]},
  "attack": {"sessions": 3, "guess_rounds": 200, "tries": 2},
  "protocol": {"audit_count": 300}
}"#;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_tapauth"));
    c.env_remove("RFR_OUT_DIR");
    c
}

fn write_scenario(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("scenario.in.json");
    fs::write(&p, text).unwrap();
    p
}

fn run(scenario: Option<&Path>, out: &Path, args: &[&str]) -> Output {
    let mut c = bin();
    if let Some(s) = scenario {
        c.arg("--scenario").arg(s);
    }
    c.arg("--out").arg(out).arg("--no-provenance-time").args(args);
    c.output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn ok(o: &Output) {
    assert_eq!(code(o), 0, "stderr: {}", String::from_utf8_lossy(&o.stderr));
}

fn bundle(dir: &Path) -> ResultBundle {
    serde_json::from_str(&fs::read_to_string(dir.join("bundle.json")).unwrap()).unwrap()
}

fn check_schema(dir: &Path) {
    let schema: Value = serde_json::from_str(RESULT_BUNDLE_SCHEMA).unwrap();
    let v = jsonschema::validator_for(&schema).unwrap();
    let doc: Value = serde_json::from_str(&fs::read_to_string(dir.join("bundle.json")).unwrap()).unwrap();
    let errors: Vec<String> = v.iter_errors(&doc).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{}: {errors:?}", dir.display());
    for a in bundle(dir).artifacts {
        assert!(dir.join(&a.path).exists(), "missing artifact {}", a.path);
    }
}

fn tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect()
}

#[test]
fn enroll_is_deterministic_and_complete() {
    let tmp = tempfile::tempdir().unwrap();
    let s = write_scenario(tmp.path(), SMALL);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&run(Some(&s), &a, &["enroll"]));
    ok(&run(Some(&s), &b, &["enroll"]));
    assert_eq!(tree(&a), tree(&b));
    check_schema(&a);

    let manifest: Value = serde_json::from_str(&fs::read_to_string(a.join("dataset.json")).unwrap()).unwrap();
    let users = manifest["users"].as_object().unwrap();
    assert_eq!(users.len(), 3);
    let trials: usize = users.values().map(|t| t.as_array().unwrap().len()).sum();
    assert_eq!(trials, 3 * 8);
    for t in users.values().flat_map(|t| t.as_array().unwrap()) {
        assert!(a.join(t.as_str().unwrap()).exists());
    }
    for u in users.keys() {
        assert!(a.join("models").join(format!("{u}.json")).exists(), "{u}");
    }
    let b = bundle(&a);
    assert_eq!(b.metrics["trials"], 24.0);
    assert_eq!(b.provenance.created_unix_s, None);
}

#[test]
fn bundle_hash_matches_the_written_scenario() {
    let tmp = tempfile::tempdir().unwrap();
    let s = write_scenario(tmp.path(), SMALL);
    let out = tmp.path().join("audit");
    ok(&run(Some(&s), &out, &["schedule-audit", "--count", "50"]));
    let written = Scenario::from_json(&fs::read_to_string(out.join("scenario.json")).unwrap()).unwrap();
    assert_eq!(written.protocol.audit_count, 50);
    assert_eq!(written.hash(), bundle(&out).provenance.scenario_hash);
}

#[test]
fn seed_flag_overrides_and_changes_the_hash() {
    let tmp = tempfile::tempdir().unwrap();
    let s = write_scenario(tmp.path(), SMALL);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&run(Some(&s), &a, &["linkbudget"]));
    ok(&run(Some(&s), &b, &["--seed", "12", "linkbudget"]));
    let (ba, bb) = (bundle(&a), bundle(&b));
    assert_eq!((ba.provenance.seed, bb.provenance.seed), (11, 12));
    assert_ne!(ba.provenance.scenario_hash, bb.provenance.scenario_hash);
}

#[test]
fn eval_and_boxplot_export() {
    let tmp = tempfile::tempdir().unwrap();
    let s = write_scenario(tmp.path(), SMALL);
    let eval = tmp.path().join("eval");
    ok(&run(Some(&s), &eval, &["eval"]));
    check_schema(&eval);
    let m = bundle(&eval).metrics;
    for k in ["accuracy_k4", "tpr_k4", "tnr_k4"] {
        assert!((0.0..=1.0).contains(&m[k]), "{k}");
    }
    assert!((m["fpr_k4"] - (1.0 - m["tnr_k4"])).abs() < 1e-12);

    let boxed = tmp.path().join("box");
    ok(&run(
        Some(&s),
        &boxed,
        &["export", "--kind", "boxplot", "--bundle", eval.to_str().unwrap()],
    ));
    check_schema(&boxed);
    let text = fs::read_to_string(boxed.join("boxplot.csv")).unwrap();
    assert!(text.starts_with("metric,k,q0,q25,q50,q75,q100\n"));
    for row in csv_rows(&boxed.join("boxplot.csv")) {
        let q: Vec<f64> = row[2..].iter().map(|x| x.parse().unwrap()).collect();
        assert_eq!(q.len(), 5);
        assert!(q.windows(2).all(|w| w[0] <= w[1]), "{row:?}");
    }
}

#[test]
fn boxplot_without_per_user_series_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty");
    fs::create_dir_all(&empty).unwrap();
    let o = run(
        None,
        &tmp.path().join("x"),
        &[
            "--seed",
            "1",
            "export",
            "--kind",
            "boxplot",
            "--bundle",
            empty.to_str().unwrap(),
        ],
    );
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("per_user.csv"));
}

#[test]
fn k_zero_fails_enrollment() {
    let tmp = tempfile::tempdir().unwrap();
    let s = write_scenario(
        tmp.path(),
        r#"{"seed": 1, "population": {"users": 3, "trials_per_user": 6, "k": 0, "k_values": [0]}}"#,
    );
    let out = tmp.path().join("o");
    let o = run(Some(&s), &out, &["enroll"]);
    assert_eq!(code(&o), 3);
    check_schema(&out);
    assert_eq!(bundle(&out).metrics["enrollment_failures"], 3.0);
}

#[test]
fn config_and_io_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let unknown = write_scenario(tmp.path(), r#"{"seed": 1, "pipeline": {"etaa": 3}}"#);
    assert_eq!(code(&run(Some(&unknown), &out, &["enroll"])), 2);
    assert_eq!(code(&run(None, &out, &["enroll"])), 2);
    assert_eq!(
        code(&run(None, &out, &["--seed", "1", "schedule-audit", "--count", "0"])),
        2
    );
    assert_eq!(code(&run(Some(&tmp.path().join("missing.json")), &out, &["enroll"])), 4);
    let both = run(
        None,
        &out,
        &["--seed", "1", "linkbudget", "--p-t", "1", "--p-t-dbm", "30"],
    );
    assert_eq!(code(&both), 2);
}

#[test]
fn advanced_eavesdrop_measurements_are_all_infeasible() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    ok(&run(
        None,
        &out,
        &["--seed", "3", "attack", "--mode", "advanced-eavesdrop"],
    ));
    check_schema(&out);
    let m = bundle(&out).metrics;
    assert_eq!(
        (
            m["measurements"],
            m["infeasible_measurements"],
            m["feasible_measurements"]
        ),
        (4.0, 4.0, 0.0)
    );
    let reports: Vec<Value> = serde_json::from_str(&fs::read_to_string(out.join("feasibility.json")).unwrap()).unwrap();
    assert!(reports.iter().all(|r| r["feasible"] == Value::Bool(false)));
}

#[test]
fn basic_eavesdrop_and_guessing_attacks() {
    let tmp = tempfile::tempdir().unwrap();
    let s = write_scenario(tmp.path(), SMALL);
    for mode in ["basic-eavesdrop", "brute-force", "visual"] {
        let out = tmp.path().join(mode);
        ok(&run(Some(&s), &out, &["attack", "--mode", mode]));
        check_schema(&out);
        let reports: Vec<Value> =
            serde_json::from_str(&fs::read_to_string(out.join("attack_report.json")).unwrap()).unwrap();
        assert!(!reports.is_empty(), "{mode}");
        for r in &reports {
            let p = r["per_round_success_rate"].as_f64().unwrap();
            assert!((0.0..=1.0).contains(&p), "{mode}: {r}");
        }
    }
}

#[test]
fn schedule_audit_finds_no_violations() {
    let tmp = tempfile::tempdir().unwrap();
    let s = write_scenario(tmp.path(), SMALL);
    let out = tmp.path().join("o");
    ok(&run(Some(&s), &out, &["schedule-audit"]));
    check_schema(&out);
    let audit: Value = serde_json::from_str(&fs::read_to_string(out.join("schedule_audit.json")).unwrap()).unwrap();
    assert_eq!(audit["count"], 300);
    assert_eq!(audit["violating_schedules"], 0);
    let hist: u64 = audit["reserve_offset_hist"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_u64().unwrap())
        .sum();
    assert_eq!(hist, 300);
}

#[test]
fn linkbudget_converts_dbm_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    ok(&run(
        None,
        &out,
        &["--seed", "1", "linkbudget", "--p-t-dbm", "30", "--g-t-dbi", "6"],
    ));
    check_schema(&out);
    let lb: Value = serde_json::from_str(&fs::read_to_string(out.join("link_budget.json")).unwrap()).unwrap();
    assert!((lb["budget"]["p_t"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    let g_t = lb["budget"]["g_t"].as_f64().unwrap();
    assert!((g_t - 10f64.powf(0.6)).abs() < 1e-12, "{g_t}");
    let w = lb["powers_w"]["p_cw_d1"].as_f64().unwrap();
    let dbm = lb["p_cw_d1_dbm"].as_f64().unwrap();
    assert!((dbm - 10.0 * (w * 1e3).log10()).abs() < 1e-9);
}

#[test]
fn linkbudget_file_is_overlaid_by_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("lb.json");
    fs::write(&file, r#"{"d1": 7.5, "p_t": 0.5}"#).unwrap();
    let out = tmp.path().join("o");
    ok(&run(
        None,
        &out,
        &[
            "--seed",
            "1",
            "linkbudget",
            "--budget",
            file.to_str().unwrap(),
            "--p-t",
            "2",
        ],
    ));
    let lb: Value = serde_json::from_str(&fs::read_to_string(out.join("link_budget.json")).unwrap()).unwrap();
    assert_eq!(lb["budget"]["d1"], 7.5);
    assert_eq!(lb["budget"]["p_t"], 2.0);
}

#[test]
fn single_tap_phase_diff_brackets_the_tap() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    ok(&run(None, &out, &["--seed", "4", "export", "--kind", "phase-diff"]));
    check_schema(&out);
    let rows: Vec<(f64, f64)> = csv_rows(&out.join("phase_diff.csv"))
        .iter()
        .map(|r| (r[0].parse().unwrap(), r[1].parse().unwrap()))
        .collect();
    let (t_min, _) = rows
        .iter()
        .copied()
        .fold((0.0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    let (t_max, _) = rows
        .iter()
        .copied()
        .fold((0.0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    // The default capture holds a card from 1.0 s to 1.3 s; the transitions
    // show up as opposite-signed extremes near each edge.
    let near = |t: f64, edge: f64| (t - edge).abs() < 0.1;
    assert!(
        (near(t_min, 1.0) && near(t_max, 1.3)) || (near(t_min, 1.3) && near(t_max, 1.0)),
        "extremes at {t_min} and {t_max}"
    );
    let events: Value = serde_json::from_str(&fs::read_to_string(out.join("events.json")).unwrap()).unwrap();
    let ev = &events["events"].as_array().expect("one detected tap")[0];
    assert!((ev["press"].as_f64().unwrap() - 1.0).abs() < 0.05);
    assert!((ev["release"].as_f64().unwrap() - 1.3).abs() < 0.05);
}

#[test]
fn phase_export_round_trips_through_ingest() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    ok(&run(None, &sim, &["--seed", "4", "export", "--kind", "phase"]));
    let reports = sim.join("phase.csv");
    let again = tmp.path().join("again");
    ok(&run(
        None,
        &again,
        &[
            "--seed",
            "4",
            "export",
            "--kind",
            "phase",
            "--reports",
            reports.to_str().unwrap(),
        ],
    ));
    assert_eq!(fs::read(&reports).unwrap(), fs::read(again.join("phase.csv")).unwrap());

    let bad = tmp.path().join("bad.csv");
    fs::write(&bad, "t_s,phi_rad,freq_hz\n0.1,9,915000000\n").unwrap();
    let o = run(
        None,
        &tmp.path().join("x"),
        &[
            "--seed",
            "4",
            "export",
            "--kind",
            "phase-diff",
            "--reports",
            bad.to_str().unwrap(),
        ],
    );
    assert_eq!(code(&o), 4);
}

#[test]
fn noiseless_iq_round_has_two_constellation_points() {
    let tmp = tempfile::tempdir().unwrap();
    let s = write_scenario(tmp.path(), r#"{"seed": 5, "channel": {"reader": {"snr_db": null}}}"#);
    let out = tmp.path().join("o");
    ok(&run(Some(&s), &out, &["export", "--kind", "iq"]));
    check_schema(&out);
    let rows = csv_rows(&out.join("iq_scatter.csv"));
    let mut points: Vec<(String, String, String)> = rows
        .iter()
        .map(|r| (r[1].clone(), r[2].clone(), r[3].clone()))
        .collect();
    points.sort();
    points.dedup();
    assert_eq!(points.len(), 2, "{points:?}");
    let states: Vec<&str> = points.iter().map(|p| p.2.as_str()).collect();
    assert!(states.contains(&"s1") && states.contains(&"s2"));
    assert!(out.join("iq.markers.json").exists());
}

#[test]
fn json_logs_are_json_lines() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(
        None,
        &tmp.path().join("o"),
        &["--seed", "1", "--json-logs", "schedule-audit", "--count", "5"],
    );
    ok(&o);
    let stderr = String::from_utf8(o.stderr).unwrap();
    assert!(!stderr.trim().is_empty());
    for line in stderr.lines() {
        let v: Value = serde_json::from_str(line).unwrap_or_else(|e| panic!("{e}: {line}"));
        assert!(v.get("level").is_some());
    }
}

#[test]
fn out_dir_comes_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("env-out");
    let o = Command::new(env!("CARGO_BIN_EXE_tapauth"))
        .env("RFR_OUT_DIR", &out)
        .args(["--seed", "1", "schedule-audit", "--count", "5"])
        .output()
        .unwrap();
    ok(&o);
    assert!(out.join("bundle.json").exists());
}
