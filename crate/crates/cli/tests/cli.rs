use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pitman-lab")).args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> (i32, Value) {
    let out = run(args);
    let v = serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
    });
    (out.status.code().unwrap(), v)
}

#[test]
fn thm1_qnb_passes_with_full_envelope() {
    let (code, v) = json(&["verify", "thm1", "--rho", "1/2", "--sigma", "0", "--t", "5", "--initial", "qnb:q=1/4,theta=1/2", "--part", "I"]);
    assert_eq!(code, 0);
    assert_eq!(v["schema"], "schema/report-v1");
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["status"], "PASS");
    assert_eq!(v["params"]["rho"], "1/2");
    assert_eq!(v["params"]["initial"], "qnb:q=1/4,theta=1/2");
    assert_eq!(v["result"]["mode"], "exact");
    assert_eq!(v["result"]["max_abs_diff"], 0.0);
}

#[test]
fn preimage_of_a_single_up_step() {
    let (code, v) = json(&["preimage", "--path", "0,1"]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["ray"]["s"], "0,-1");
    assert_eq!(v["result"]["ray"]["g_min"], 0);
    let sporadic = v["result"]["sporadic"].as_array().unwrap();
    assert_eq!(sporadic.len(), 1);
    assert_eq!(sporadic[0]["g"], 0);
    assert_eq!(sporadic[0]["s"], "0,1");
}

#[test]
fn thm2_outside_regime_is_a_usage_error() {
    let out = run(&["verify", "thm2", "--rho", "1", "--sigma", "0", "--t", "3", "--initial", "point:1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("regime"));
}

#[test]
fn malformed_inputs_exit_two() {
    for args in [
        vec!["verify", "thm1", "--rho", "1/2", "--t", "3", "--initial", "bogus:1"],
        vec!["verify", "thm1", "--rho", "x", "--t", "3", "--initial", "point:1"],
        vec!["preimage", "--path", "0,2"],
        vec!["scaling", "continuity", "--N", "100", "--v", "0.5", "--mu", "nope"],
        vec!["verify", "thm1", "--rho", "1/2"],
    ] {
        assert_eq!(run(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn thm2_part_two_passes() {
    let (code, v) = json(&["verify", "thm2", "--rho", "2", "--sigma", "1", "--t", "3", "--initial", "point:2", "--part", "II"]);
    assert_eq!(code, 0, "{v}");
    assert_eq!(v["result"]["comparisons"][0]["exact_diff"], "0/1");
}

#[test]
fn exit_code_follows_verdict() {
    let out = run(&["law", "rhs", "--rho", "1/2", "--t", "2", "--level", "geo:1/2"]);
    assert_eq!(out.status.code(), Some(0));
    let out = run(&["verify", "damage", "--q", "1/4", "--theta", "1/2", "--support", "20"]);
    assert_eq!(out.status.code(), Some(0));
    let out = run(&["scaling", "kernel", "--N", "100", "--x", "1", "--y", "1", "--v", "0.5", "--tol", "1e-6"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn horizon_cap_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_pitman-lab"))
        .args(["law", "walk", "--rho", "1/2", "--t", "6"])
        .env("PITMAN_LAB_CAP", "5")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cap 5"));
}

#[test]
fn walk_law_csv_sums_to_one() {
    let out = run(&["law", "walk", "--rho", "2/3", "--sigma", "1", "--t", "3", "--out", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("path,prob,err"));
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), 27);
    assert!(rows[0].starts_with("\"0,-1,-2,-3\","));
    // exact masses a/b summed over a common denominator
    let (mut num, mut den) = (0i128, 1i128);
    for row in rows {
        let prob = row.rsplit(',').nth(1).unwrap();
        let (a, b) = prob.split_once('/').unwrap();
        let (a, b): (i128, i128) = (a.parse().unwrap(), b.parse().unwrap());
        num = num * b + a * den;
        den *= b;
        let g = gcd(num, den);
        num /= g;
        den /= g;
    }
    assert_eq!((num, den), (1, 1));
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 { a.abs() } else { gcd(b, a % b) }
}

#[test]
fn tropical_exhaustive_and_random() {
    let (code, v) = json(&["verify", "tropical", "--t", "4", "--random", "200", "--seed", "3"]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["violations"], 0);
}

#[test]
fn sampling_is_reproducible_and_ignores_jobs() {
    let a = run(&["sample", "walk", "--rho", "1/2", "--t", "5", "--samples", "300", "--seed", "9", "--jobs", "1"]);
    let b = run(&["sample", "walk", "--rho", "1/2", "--t", "5", "--samples", "300", "--seed", "9", "--jobs", "4"]);
    let c = run(&["sample", "walk", "--rho", "1/2", "--t", "5", "--samples", "300", "--seed", "10"]);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn continuity_report_rows() {
    let out = run(&["scaling", "continuity", "--N", "10000", "--v", "0", "--mu", "point:1", "--grid", "0.5:1.5:0.5", "--out", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("x,empirical,limit,diff\n"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn level_law_v_for_point_mass() {
    let (code, v) = json(&["law", "level", "--rho", "1/2", "--initial", "point:3", "--which", "v", "--max", "4"]);
    assert_eq!(code, 0);
    let pmf = v["result"]["pmf"].as_array().unwrap();
    assert_eq!(pmf[3], "1/1");
    assert_eq!(pmf[0], "0/1");
}
