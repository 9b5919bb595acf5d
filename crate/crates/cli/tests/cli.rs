use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn kuragap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kuragap"))
        .args(args)
        .env_remove("KURAGAP_THREADS")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

/// Data rows of a CSV result as header-keyed string maps.
fn rows(csv: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let body = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, body)
}

fn field<'a>(header: &[String], row: &'a [String], name: &str) -> &'a str {
    &row[header.iter().position(|h| h == name).unwrap()]
}

#[test]
fn hopf_locus_reports_case_one_coupling() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "h.json",
        r#"{"command": "hopf-locus", "params": {
            "family": {"type": "fixedMoments", "totalMean": 3.0, "variance": 3.0, "gammaMean": 0.5},
            "scan": null}}"#,
    );
    let out = kuragap(&["hopf-locus", "--config", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, body) = rows(&String::from_utf8(out.stdout).unwrap());
    let kbar: f64 = field(&header, &body[0], "kbar").parse().unwrap();
    assert!((kbar - 2.6992).abs() < 1e-3, "{kbar}");
    assert_eq!(field(&header, &body[0], "parameter"), "NA");
}

#[test]
fn normal_form_at_zero_delay() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "nf.json",
        r#"{"command": "normal-form", "params": {"kernel": {"type": "pointMass", "gap": 0.0}}}"#,
    );
    let out = kuragap(&["normal-form", "--config", &cfg, "--format", "json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    let cols: Vec<&str> = doc["columns"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c.as_str().unwrap())
        .collect();
    let row = &doc["rows"][0];
    let get = |name: &str| row[cols.iter().position(|c| *c == name).unwrap()].clone();
    assert_eq!(get("aRe"), 0.5);
    assert_eq!(get("aIm"), 0.0);
    assert_eq!(get("kbar"), 2.0);
    assert_eq!(get("classification"), "supercritical");
    assert_eq!(doc["metadata"]["command"], "normal-form");
}

#[test]
fn bad_config_exits_two_with_error_record() {
    let dir = tempfile::tempdir().unwrap();
    for (text, kind) in [
        (
            r#"{"command": "normal-form", "params": {"frequency": {"center": 3.0, "halfWidth": -1.0}}}"#,
            "semantic",
        ),
        (r#"{"command": "normal-form", "params": {"colour": 1}}"#, "semantic"),
        ("{\"command\": \"normal-form\",,}", "syntax"),
    ] {
        let cfg = write_config(dir.path(), "bad.json", text);
        let out = kuragap(&["normal-form", "--config", &cfg]);
        assert_eq!(out.status.code(), Some(2), "{text}");
        assert!(out.stdout.is_empty());
        let stderr = String::from_utf8(out.stderr).unwrap();
        let record: Value = serde_json::from_str(stderr.lines().last().unwrap()).unwrap();
        assert_eq!(record["error"]["kind"], kind, "{stderr}");
        assert_eq!(record["error"]["command"], "normal-form");
    }
}

#[test]
fn mismatched_subcommand_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "v.json", r#"{"command": "verify"}"#);
    let out = kuragap(&["sweep", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failed_scan_points_are_marked_missing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "scan.json",
        r#"{"command": "hopf-locus", "params": {
            "scan": {"axis": "gammaMean", "from": -1.0, "to": 1.0, "steps": 3}, "maxBranches": 1}}"#,
    );
    let out = kuragap(&["hopf-locus", "--config", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let (header, body) = rows(&text);
    assert_eq!(body.len(), 3);
    for row in &body[..2] {
        assert_eq!(field(&header, row, "kbar"), "NA");
        assert_eq!(field(&header, row, "converged"), "false");
    }
    assert!(field(&header, &body[2], "kbar").parse::<f64>().unwrap() > 0.0);
    assert_eq!(text.lines().filter(|l| l.starts_with("# warning: ")).count(), 2);
    assert!(String::from_utf8(out.stderr).unwrap().contains("2 warnings"));
}

#[test]
fn seeded_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "e.json",
        r#"{"command": "ensemble-probe", "params": {
            "couplings": [1.0, 3.0],
            "probe": {"n": 16, "trials": 3, "tEnd": 10.0, "mode": "random"}}}"#,
    );
    // The output path is echoed in the header, so every run writes the same file.
    let run = |seed: &str| {
        let path = dir.path().join("out.csv");
        let out = kuragap(&[
            "ensemble-probe",
            "--config",
            &cfg,
            "--seed",
            seed,
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        fs::read(path).unwrap()
    };
    let a = run("7");
    assert_eq!(a, run("7"));
    assert_ne!(a, run("8"));
}

#[test]
fn plot_script_is_written_next_to_output() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("nf.csv");
    let out = kuragap(&["normal-form", "--out", out_path.to_str().unwrap(), "--emit-plot-script"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let script = fs::read_to_string(dir.path().join("nf.csv.plot.py")).unwrap();
    assert!(script.contains(out_path.to_str().unwrap()));
    assert!(script.contains("aRe"));

    let out = kuragap(&["normal-form", "--emit-plot-script"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn print_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = kuragap(&["sweep", "--print-config", "--threads", "1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let cfg = write_config(dir.path(), "s.json", &text);
    let again = kuragap(&["sweep", "--config", &cfg, "--print-config"]);
    assert_eq!(String::from_utf8(again.stdout).unwrap(), text);
}

#[test]
fn echoed_config_reproduces_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("mf.csv");
    let cfg = write_config(
        dir.path(),
        "mf.json",
        r#"{"command": "meanfield", "params": {
            "params": {"coupling": 3.0, "freq": {"center": 3.0, "halfWidth": 1.0},
                       "kernel": {"type": "gammaWithGap", "shape": 2.0, "mean": 0.7, "gap": 0.3}},
            "initial": {"type": "constant", "value": [0.1, 0.0]}, "tEnd": 20.0}}"#,
    );
    let out = kuragap(&["meanfield", "--config", &cfg, "--out", out_path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let first = fs::read_to_string(&out_path).unwrap();
    let echoed = first.lines().find_map(|l| l.strip_prefix("# config: ")).unwrap();
    let again = write_config(dir.path(), "echoed.json", echoed);
    fs::remove_file(&out_path).unwrap();
    let out = kuragap(&["meanfield", "--config", &again]);
    assert!(out.status.success());
    assert_eq!(fs::read_to_string(&out_path).unwrap(), first);
}
