use std::process::{Command, Output};

use serde_json::Value;

fn finmf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_finmf")).args(args).env_remove("FINMF_CACHE_DIR").output().expect("binary runs")
}

fn json_ok(args: &[&str]) -> Value {
    let out = finmf(args);
    assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stderr.is_empty());
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn diagnostic(args: &[&str], code: i32) -> Value {
    let out = finmf(args);
    assert_eq!(out.status.code(), Some(code), "{args:?}");
    assert!(out.stdout.is_empty(), "no partial output on failure");
    let d: Value = serde_json::from_slice(&out.stderr).expect("json diagnostic");
    assert_eq!(d["exit_code"], code);
    d
}

#[test]
fn double_of_s3() {
    let v = json_ok(&["double", "--group", "preset:S3"]);
    assert_eq!(v["label_count"], 8);
    assert_eq!(v["dim_square_sum"], 36);
    let mut dims: Vec<u64> = v["labels"].as_array().unwrap().iter().map(|l| l["dim"].as_u64().unwrap()).collect();
    dims.sort_unstable();
    assert_eq!(dims, vec![1, 1, 2, 2, 2, 2, 3, 3]);
}

#[test]
fn annulus_count_only() {
    let v = json_ok(&["bundles", "--group", "preset:Z2", "--genus", "0", "--points", "2", "--count-only"]);
    assert_eq!(v, serde_json::json!({ "count": 4 }));
}

#[test]
fn torus_histogram() {
    let v = json_ok(&["bundles", "--group", "preset:S3", "--genus", "1", "--points", "1"]);
    assert_eq!(v["count"], 36);
    let total: u64 = v["grade_histogram"].as_array().unwrap().iter().map(|h| h["count"].as_u64().unwrap()).sum();
    assert_eq!(total, 36);
}

#[test]
fn selftests_pass() {
    for g in ["preset:Z1", "preset:Z2", "preset:S3", "preset:D4", "preset:Q8"] {
        let v = json_ok(&["selftest", "--group", g]);
        assert_eq!(v["passed"], true, "{g}");
        let expected = match g {
            "preset:D4" | "preset:Q8" => 22,
            "preset:S3" => 8,
            "preset:Z2" => 4,
            _ => 1,
        };
        assert_eq!(v["label_count"], expected);
    }
    let s3 = json_ok(&["selftest", "--group", "preset:S3"]);
    let torus = s3["checks"].as_array().unwrap().iter().find(|c| c["check"] == "torus_dimension").unwrap();
    assert_eq!(torus["detail"]["dim"], 8);
}

#[test]
fn trivial_group_counts_are_one() {
    let v = json_ok(&["selftest", "--group", "preset:Z1"]);
    let counts = v["checks"].as_array().unwrap().iter().find(|c| c["check"] == "bundle_counts").unwrap();
    assert!(counts["detail"].as_array().unwrap().iter().all(|c| c["count"] == 1));
}

#[test]
fn dims_all_routes() {
    let v = json_ok(&[
        "dims",
        "--group",
        "preset:S3",
        "--genus",
        "1",
        "--points",
        "1",
        "--labels",
        "vacuum",
        "--method",
        "all",
    ]);
    assert_eq!(v["dim"], 8);
    for route in ["enumeration", "characters", "verlinde"] {
        assert_eq!(v["routes"][route], 8);
    }
}

#[test]
fn labels_by_index_and_name() {
    let by_name = json_ok(&["dims", "--group", "S3", "--points", "3", "--labels", "([(12)],r0), ([(12)],r0), vacuum"]);
    let by_index = json_ok(&["dims", "--group", "S3", "--points", "3", "--labels", "3,3,0"]);
    assert_eq!(by_name["dim"], by_index["dim"]);
    assert_eq!(by_name["dim"], 1);
}

#[test]
fn verlinde_closed_surfaces() {
    assert_eq!(json_ok(&["verlinde", "--genus", "2", "--labels", ""])["dim"], 16);
    assert_eq!(json_ok(&["verlinde", "--group", "S3", "--genus", "1"])["dim"], 8);
}

#[test]
fn modular_z2() {
    let v = json_ok(&["modular", "--group", "preset:Z2"]);
    assert_eq!(v["S"].as_array().unwrap().len(), 4);
    assert_eq!(v["S"][0][0]["coeffs"][0], serde_json::json!(["1", "2"]));
    assert_eq!(v["charge_conjugation"], serde_json::json!([0, 1, 2, 3]));
}

#[test]
fn glue_check_torus() {
    let v = json_ok(&[
        "glue-check",
        "--group",
        "S3",
        "--genus",
        "1",
        "--points",
        "1",
        "--cut",
        "nonseparating",
        "--all-labels",
    ]);
    let results = v["results"].as_array().unwrap();
    assert_eq!(results.len(), 8);
    assert!(results.iter().all(|r| r["lhs"] == r["rhs"]));
    assert_eq!(v["bundles"]["orbits"], 36);
}

#[test]
fn other_formats() {
    let csv = finmf(&["group", "--group", "S3", "--format", "csv"]);
    assert!(String::from_utf8(csv.stdout).unwrap().starts_with("class,representative,size"));
    let text = finmf(&["dims", "--group", "S3", "--genus", "1", "--format", "text"]);
    assert!(String::from_utf8(text.stdout).unwrap().ends_with("= 8\n"));
}

#[test]
fn cache_round_trip() {
    let dir = std::env::temp_dir().join(format!("finmf-cache-test-{}", std::process::id()));
    let d = dir.to_str().unwrap();
    let cold = json_ok(&["modular", "--group", "D4", "--cache-dir", d]);
    let warm = json_ok(&["modular", "--group", "D4", "--cache-dir", d]);
    assert_eq!(cold, warm);
    assert!(std::fs::read_dir(dir.join("chartables-v1")).unwrap().count() >= 2);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn usage_errors_exit_1() {
    diagnostic(&["nonsense"], 1);
    diagnostic(&["dims", "--group", "S3", "--labels", "bogus"], 1);
    diagnostic(&["dims", "--group", "S3", "--points", "2", "--labels", "vacuum"], 1);
    diagnostic(&["dims", "--method", "guess"], 1);
    diagnostic(&["--state-cap", "0", "group"], 1);
    diagnostic(&["glue-check", "--cut", "sideways"], 1);
    diagnostic(&["group", "--group", "preset:nope"], 1);
}

#[test]
fn cap_errors_exit_2() {
    let d = diagnostic(&["bundles", "--group", "S4", "--genus", "1", "--points", "3"], 2);
    assert_eq!(d["error"], "cap");
    diagnostic(&["group", "--group", "S5", "--order-cap", "100"], 2);
    diagnostic(
        &["dims", "--group", "S3", "--genus", "2", "--points", "2", "--method", "characters", "--grid-cap", "10"],
        2,
    );
}

#[test]
fn help_exits_0() {
    assert_eq!(finmf(&["--help"]).status.code(), Some(0));
}
