//! End-to-end runs of the `heis` binary.

use std::process::{Command, Output};

use serde_json::Value;

const SMALL_GRID: [&str; 8] = ["--half-width-xi", "7", "--half-width-tau", "7", "--points-xi", "32", "--points-tau", "32"];

fn heis(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_heis")).args(args).env_remove("HEIS_THREADS").output().expect("spawn heis")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn constants_example() {
    let o = heis(&["constants", "--n", "1", "--s", "1"]);
    assert_eq!(code(&o), 0);
    let mut rdr = csv::Reader::from_reader(&o.stdout[..]);
    let header = rdr.headers().unwrap().clone();
    let row = rdr.records().next().unwrap().unwrap();
    let names: Vec<&str> = header.iter().collect();
    assert_eq!(
        names,
        [
            "n", "Q", "s", "c_sobolev", "c_sobolev_int", "c_hls", "a_s", "b_s", "u_bound", "v_bound", "c_hardy", "c_gn",
            "c_gn_sharp", "c_lw", "gross_gamma"
        ]
    );
    let v: f64 = row[4].parse().unwrap();
    assert!((v - 1.0 / std::f64::consts::PI).abs() < 1e-12);
    // No Hardy constant at s = 1.
    assert!(row[10].is_empty());
}

#[test]
fn exit_codes() {
    assert_eq!(code(&heis(&["verify", "--s", "1.5"])), 3);
    assert_eq!(code(&heis(&["verify", "--n", "2"])), 3);
    assert_eq!(code(&heis(&["constants", "--q", "100"])), 3);
    assert_eq!(code(&heis(&["constants", "--bogus"])), 2);
    assert_eq!(code(&heis(&[])), 2);
    assert_eq!(code(&heis(&["heat", "--method", "euler", "--dt", "10", "--steps", "1", "--t-final", "10"])), 3);
    let o = Command::new(env!("CARGO_BIN_EXE_heis")).args(["constants"]).env("HEIS_THREADS", "many").output().unwrap();
    assert_eq!(code(&o), 2);
    let o = Command::new(env!("CARGO_BIN_EXE_heis")).args(["constants"]).env("HEIS_THREADS", "1").output().unwrap();
    assert_eq!(code(&o), 0);
}

#[test]
fn selftest_lines() {
    let o = heis(&["selftest"]);
    assert_eq!(code(&o), 0);
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.lines().count() >= 5);
    assert!(err.lines().all(|l| l.starts_with("PASS ")), "{err}");
}

#[test]
fn verify_exit_code_tracks_verdicts() {
    let mut args = vec!["verify", "--suite", "nash", "--format", "json"];
    args.extend(SMALL_GRID);
    let o = heis(&args);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let rows = v.as_array().unwrap();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r["name"].as_str().unwrap().starts_with("nash")));
    let fails = rows.iter().any(|r| r["verdict"] == "fails");
    assert_eq!(code(&o), if fails { 1 } else { 0 });
}

#[test]
fn verify_filters_by_order() {
    let mut args = vec!["verify", "--suite", "sobolev", "--s", "0.5", "--format", "json"];
    args.extend(SMALL_GRID);
    let o = heis(&args);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let rows = v.as_array().unwrap();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r["s"].is_null() || r["s"].as_f64() == Some(0.5)));
}

#[test]
fn heat_reports_are_deterministic_and_formats_agree() {
    let mut base = vec!["heat", "--t-final", "0.5", "--steps", "2", "--method", "euler"];
    base.extend(["--half-width-xi", "6", "--half-width-tau", "8", "--points-xi", "24", "--points-tau", "32"]);
    let a = heis(&base);
    let b = heis(&base);
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);

    let mut json_args = base.clone();
    json_args.extend(["--format", "json"]);
    let j: Value = serde_json::from_slice(&heis(&json_args).stdout).unwrap();
    let mut rdr = csv::Reader::from_reader(&a.stdout[..]);
    let header = rdr.headers().unwrap().clone();
    let rows = j["rows"].as_array().unwrap();
    for (rec, obj) in rdr.records().zip(rows) {
        let rec = rec.unwrap();
        for (h, cell) in header.iter().zip(rec.iter()) {
            assert_eq!(cell.parse::<f64>().unwrap(), obj[h].as_f64().unwrap(), "{h}");
        }
    }
}

#[test]
fn optimize_writes_report_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("opt.json");
    let args = [
        "optimize", "--target", "sobolev", "--iters", "4", "--seeds", "1", "--format", "json", "--output", out.to_str().unwrap(),
        "--half-width-xi", "6", "--half-width-tau", "6", "--points-xi", "24", "--points-tau", "24",
    ];
    let o = heis(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(v["best_quotient"].as_f64().unwrap() > 0.0);
    assert_eq!(v["trial_family"], "heuristic");
    let trace_path = v["trace_file"].as_str().unwrap();
    let trace = std::fs::read_to_string(trace_path).unwrap();
    assert!(trace.starts_with("iteration,quotient"));
    let first: f64 = trace.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    let last: f64 = trace.lines().last().unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!(last <= first);
    assert!((last - v["best_quotient"].as_f64().unwrap()).abs() <= 1e-15 * last);
}

#[test]
fn config_file_presets_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("heis.conf");
    std::fs::write(&cfg, "# coarse heat grid\nhalf_width_xi = 6\nhalf_width_tau = 8\npoints_xi = 16\npoints_tau = 16\nformat = json\n").unwrap();
    let o = heis(&["heat", "--config", cfg.to_str().unwrap(), "--steps", "1", "--t-final", "0.1", "--method", "euler"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
}
