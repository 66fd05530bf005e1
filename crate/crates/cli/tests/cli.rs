//! End-to-end tests of the `imcsim` binary: exit codes, output formats,
//! and byte-for-byte determinism.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_imcsim"))
}

fn run_ok(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("spawn imcsim");
    assert!(
        out.status.success(),
        "imcsim {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn tmpfile(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("imcsim-test-{}-{name}", std::process::id()));
    p
}

#[test]
fn run_emits_json_report() {
    let out = run_ok(&["run", "--config", "bert-base", "--dataflow", "seqblock:64"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["config"]["dataflow"], "seqblock:64");
    assert!(v["total_cycles"].as_u64().unwrap() > 0);
}

#[test]
fn run_is_byte_deterministic() {
    let args = ["run", "--config", "squad", "--seed", "13"];
    let a = run_ok(&args);
    let b = run_ok(&args);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn presets_all_validate_somewhere() {
    for preset in ["bert-base", "bert-large", "table1-hw", "glue", "squad"] {
        run_ok(&["validate", "--config", preset]);
    }
}

#[test]
fn validate_spatial_reports_min_tiles() {
    let out = bin()
        .args(["validate", "--config", "table1-hw", "--model", "bert-base", "--residency", "spatial"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "spatial-only check must fail");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("min 432 tiles"), "stderr: {stderr}");
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v[0]["projection"]["min_tiles"], 432);
}

#[test]
fn missing_config_file_is_io_failure() {
    let out = bin()
        .args(["run", "--config", "/nonexistent/nowhere.toml"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn empty_config_is_validation_failure() {
    let path = tmpfile("empty.toml");
    std::fs::write(&path, "").unwrap();
    let out = bin()
        .args(["run", "--config", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
    std::fs::remove_file(&path).ok();
}

#[test]
fn bad_dataflow_is_validation_failure() {
    let out = bin()
        .args(["run", "--config", "bert-base", "--dataflow", "seqblock:9999"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sweep_preserves_value_order() {
    let out = run_ok(&[
        "sweep",
        "--config",
        "bert-base",
        "--dataflow",
        "traditional",
        "--axis",
        "SL=64,128,256,512",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("schema_version,axis,value,status"));
    let values: Vec<&str> = lines.map(|l| l.split(',').nth(2).unwrap()).collect();
    assert_eq!(values, vec!["64", "128", "256", "512"]);

    // Peak score buffer grows 16x from SL=64 to SL=256 under the
    // whole-sequence dataflow.
    let col = header.split(',').position(|c| c == "peak_score_buffer_bytes").unwrap();
    let peaks: Vec<u64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(col).unwrap().parse().unwrap())
        .collect();
    assert_eq!(peaks[2], 16 * peaks[0]);
}

#[test]
fn sweep_block_degenerate_matches_traditional() {
    let sweep = run_ok(&[
        "sweep",
        "--config",
        "bert-base",
        "--axis",
        "SB=16,32,64,128,512",
    ]);
    let text = String::from_utf8(sweep.stdout).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    let cycles_col = header.iter().position(|c| *c == "total_cycles").unwrap();
    let last = text.lines().last().unwrap().split(',').nth(cycles_col).unwrap();

    let trad = run_ok(&["run", "--config", "bert-base", "--dataflow", "traditional"]);
    let v: serde_json::Value = serde_json::from_slice(&trad.stdout).unwrap();
    assert_eq!(last, v["total_cycles"].to_string());
}

#[test]
fn trace_is_json_lines_of_intervals() {
    let out = run_ok(&["trace", "--config", "squad", "--dataflow", "seqblock:64"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().count() > 100);
    for line in text.lines().take(20) {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        for key in ["resource", "start", "end", "op"] {
            assert!(v.get(key).is_some(), "missing {key} in {line}");
        }
    }
}

#[test]
fn funcsim_emits_error_sweep_csv() {
    let out = run_ok(&[
        "funcsim",
        "--rows",
        "8",
        "--cols",
        "8",
        "--sigmas",
        "0.0,0.1",
        "--trials",
        "5",
        "--seed",
        "3",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "sigma,trial,rmse,max_abs");
    assert_eq!(lines.count(), 10);
    // Zero variation rows must have zero error.
    for line in text.lines().skip(1).take(5) {
        let rmse: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert_eq!(rmse, 0.0, "{line}");
    }
}

#[test]
fn run_writes_report_and_mapping_files() {
    let report = tmpfile("report.json");
    let mapping = tmpfile("mapping.json");
    run_ok(&[
        "run",
        "--config",
        "bert-base",
        "--out",
        report.to_str().unwrap(),
        "--mapping-out",
        mapping.to_str().unwrap(),
    ]);
    let r: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert!(r["total_cycles"].as_u64().unwrap() > 0);
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&mapping).unwrap()).unwrap();
    assert_eq!(m["policy"], "hybrid");
    assert!(m["static_allocs"].as_array().unwrap().len() > 0);
    std::fs::remove_file(&report).ok();
    std::fs::remove_file(&mapping).ok();
}

#[test]
fn policy_sweep_covers_registry() {
    let out = run_ok(&[
        "sweep",
        "--config",
        "bert-base",
        "--axis",
        "policy=hybrid,nvm-all,simd-dynamic",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    let ok_rows = text.lines().skip(1).filter(|l| l.contains(",ok,")).count();
    assert_eq!(ok_rows, 3);
}
