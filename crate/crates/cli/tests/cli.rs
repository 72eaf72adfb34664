//! Exit codes, error routing, and the file-based run -> verify workflow.

use std::path::{Path, PathBuf};
use std::process::Output;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_anisoflow")
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("flow.ini");
    std::fs::write(&path, body).unwrap();
    path
}

fn invoke(args: &[&str], config: &Path, out: &Path) -> Output {
    std::process::Command::new(bin())
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

const EUCLID_1D: &str = "\
[integrand]
family = euclidean
dim = 1

[grid]
cells = 64
length = 6.283185307179586

[initial]
kind = sawtooth
amplitude = 1.0
steepness = 3.0

[time]
t_end = 0.3
sample_every = 20

[theorem]
id = 1

[budget]
direction_samples = 48
seed = 0
";

#[test]
fn check_on_the_euclidean_family_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), EUCLID_1D);
    let out = invoke(&["check"], &config, &dir.path().join("out"));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/check.json")).unwrap())
            .unwrap();
    assert_eq!(report["family"], "euclidean");
    assert_eq!(report["symmetry_pass"], true);
}

#[test]
fn check_on_the_odd_family_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "[integrand]\nfamily = odd_perturbed\ndim = 1\ndelta = 0.05\n",
    );
    let out = invoke(&["check"], &config, &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn parse_error_exits_two_with_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "[integrand]\nfamily = euclidean\ndim = 1\nwhatever = 3\n",
    );
    let out = invoke(&["check"], &config, &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 4"), "stderr: {stderr}");
    assert!(stderr.contains("whatever"), "stderr: {stderr}");
}

#[test]
fn missing_config_file_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = invoke(&["check"], &dir.path().join("nope.ini"), &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn pipeline_on_the_odd_family_with_the_symmetric_route_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "\
[integrand]
family = odd_perturbed
dim = 1
delta = 0.05

[grid]
cells = 64
length = 6.283185307179586

[initial]
kind = sine
amplitude = 0.5

[time]
t_end = 0.1

[theorem]
id = 2

[budget]
direction_samples = 32
",
    );
    let out = invoke(&["pipeline"], &config, &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("symmetry condition"), "stderr: {stderr}");
}

#[test]
fn pipeline_headline_run_exits_zero_with_nonnegative_margin() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), EUCLID_1D);
    let out = invoke(&["pipeline"], &config, &dir.path().join("out"));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("out/verify.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(summary["violated"], false);
    assert!(summary["min_margin"].as_f64().unwrap() >= 0.0);
    assert_eq!(summary["theorem"], 1);
}

#[test]
fn run_then_verify_round_trips_through_csv_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), EUCLID_1D);
    let out_dir = dir.path().join("out");
    let run_out = invoke(&["run"], &config, &out_dir);
    assert!(run_out.status.success());
    assert!(out_dir.join("snapshots.csv").exists());
    assert!(out_dir.join("diagnostics.csv").exists());
    let head = std::fs::read_to_string(out_dir.join("diagnostics.csv")).unwrap();
    assert!(head.starts_with("t,max_u,min_u,max_F,dt\n"));

    let verify_out = invoke(&["verify"], &config, &out_dir);
    assert!(verify_out.status.success(), "{}", String::from_utf8_lossy(&verify_out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("verify.csv")).unwrap();
    assert!(csv.starts_with("t,value,bound,margin,cell\n"));
    assert!(csv.lines().count() > 1);
}

#[test]
fn run_then_verify_round_trips_through_binary_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &EUCLID_1D.replace("sample_every = 20", "sample_every = 20\noutput = bin"));
    let out_dir = dir.path().join("out");
    assert!(invoke(&["run"], &config, &out_dir).status.success());
    assert!(out_dir.join("snapshots.bin").exists());
    let verify_out = invoke(&["verify"], &config, &out_dir);
    assert!(verify_out.status.success(), "{}", String::from_utf8_lossy(&verify_out.stderr));
}

#[test]
fn verify_without_a_prior_run_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), EUCLID_1D);
    let out = invoke(&["verify"], &config, &dir.path().join("empty"));
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("diagnostics"));
}

#[test]
fn seed_flag_overrides_the_config_seed() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), EUCLID_1D);
    let out_dir = dir.path().join("out");
    let output = std::process::Command::new(bin())
        .args(["constants", "--seed", "42", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(output.status.success());
    let doc: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out_dir.join("constants.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(doc["seed"], 42);
    assert_eq!(doc["budget"]["seed"], 42);
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out_dir.join("manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["seed"], 42);
}

#[test]
fn constants_document_has_the_expected_shape() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "\
[integrand]
family = perturbed
dim = 2
delta = 0.05

[budget]
direction_samples = 48
s_grid = 32
seed = 1
",
    );
    let out_dir = dir.path().join("out");
    assert!(invoke(&["constants"], &config, &out_dir).status.success());
    let doc: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out_dir.join("constants.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(doc["family"], "perturbed");
    assert_eq!(doc["n"], 2);
    assert!(doc["C1"].as_f64().unwrap() > 0.0);
    assert!(doc["A_P"].as_object().unwrap().len() == 1);
    assert!(doc["k_lo"].as_f64().unwrap() > 0.0);
    assert!(doc["k_hi"].as_f64().unwrap() >= doc["k_lo"].as_f64().unwrap());
    assert!(doc["C2"].as_f64().unwrap() > 0.0);
    assert!(doc["S_eps"].as_object().unwrap().len() == 1);
}

#[test]
fn json_row_format_writes_rows_as_json() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), EUCLID_1D);
    let out_dir = dir.path().join("out");
    let output = std::process::Command::new(bin())
        .args(["pipeline", "--format", "json", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(output.status.success());
    let rows: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out_dir.join("verify_rows.json")).unwrap(),
    )
    .unwrap();
    assert!(rows.as_array().unwrap().len() > 1);
    assert!(!out_dir.join("verify.csv").exists());
}
