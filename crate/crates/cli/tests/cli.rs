use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lab(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_harmonic-lab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr_report(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr).unwrap_or_else(|_| panic!("{}", String::from_utf8_lossy(&o.stderr)))
}

const SMALL: &[&str] = &["--grid-nr", "193", "--grid-ns", "33"];

#[test]
fn geometry_check_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(dir.path(), &["geometry-check"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let m = json(&dir.path().join("manifest.json"));
    assert_eq!(m["verdicts"]["geometry-check"], "pass");
    assert_eq!(m["verdicts"]["solve"], "not-run");
    let g = json(&dir.path().join("geometry.json"));
    assert_eq!(g["checks"].as_array().unwrap().len(), 8);
}

#[test]
fn injected_fault_names_the_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(dir.path(), &["geometry-check", "--inject-fault", "christoffel"]);
    assert_eq!(o.status.code(), Some(4));
    let r = stderr_report(&o);
    assert_eq!(r["kind"], "verification");
    assert!(r["message"].as_str().unwrap().contains("christoffel-closed-form"));
    assert_eq!(
        json(&dir.path().join("manifest.json"))["verdicts"]["geometry-check"],
        "fail"
    );
}

#[test]
fn zero_samples_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(dir.path(), &["geometry-check", "--samples", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_report(&o)["field"], "samples.geometry");
}

#[test]
fn constant_profile_solves_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(dir.path(), &["solve", "--profile", "constant"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("field.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("r,s,v,residual"));
    let mut rows = 0;
    for line in lines {
        let v: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert!((v - 1.0).abs() <= 1e-9, "{line}");
        rows += 1;
    }
    assert_eq!(rows, 769 * 129);
}

#[test]
fn default_solve_reports_convergence() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(dir.path(), &["solve"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = json(&dir.path().join("solve.json"));
    let rows = s["convergence"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for row in &rows[1..] {
        let r = row["ratio"].as_f64().unwrap();
        assert!((3.2..=4.8).contains(&r), "{r}");
    }
}

#[test]
fn manufactured_mode_is_second_order() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(dir.path(), &["solve", "--manufactured"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = json(&dir.path().join("solve.json"));
    assert_eq!(s["manufactured"], true);
    let last = s["convergence"].as_array().unwrap().last().unwrap()["ratio"]
        .as_f64()
        .unwrap();
    assert!((last.log2() - 2.0).abs() < 0.1, "{last}");
}

#[test]
fn zero_profile_norms_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["norms", "--profile", "zero"];
    args.extend(SMALL);
    let o = lab(dir.path(), &args);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_report(&o)["field"], "profile");
    assert!(dir.path().join("error.json").exists());
}

#[test]
fn empty_modulation_list_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(dir.path(), &["nonuniqueness", "--k", ""]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_report(&o)["field"], "modulation.k");
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"grid": {"nr": 10}}"#).unwrap();
    let o = lab(dir.path(), &["geometry-check", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"seed": 5, "nu": 0.25, "samples": {"geometry": 50}}"#).unwrap();
    let out = dir.path().join("out");
    let o = lab(
        &out,
        &["geometry-check", "--config", cfg.to_str().unwrap(), "--seed", "9"],
    );
    assert_eq!(o.status.code(), Some(0));
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["config"]["seed"], 9);
    assert_eq!(m["config"]["nu"], 0.25);
    assert_eq!(m["config"]["samples"]["geometry"], 50);
    assert_eq!(m["config"]["samples"]["supersolution"], 1_000_000);
}

#[test]
fn half_threshold_member_is_reported_with_show_violations() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["nonuniqueness", "--k", "0.5,1,2", "--show-violations"];
    args.extend(SMALL);
    let o = lab(dir.path(), &args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let f = json(&dir.path().join("family.json"));
    let members = f["members"].as_array().unwrap();
    assert_eq!(members.len(), 3);
    assert_eq!(members[0]["admissible"], false);
    assert!(members[1..].iter().all(|m| m["admissible"] == true));
    let v = f["violations"].as_array().unwrap();
    assert_eq!(v.len(), 1);

    // without the flag the member is dropped, not failed
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["nonuniqueness", "--k", "0.5,1,2"];
    args.extend(SMALL);
    let o = lab(dir.path(), &args);
    assert_eq!(o.status.code(), Some(0));
    let f = json(&dir.path().join("family.json"));
    assert_eq!(f["members"].as_array().unwrap().len(), 2);
    assert_eq!(f["excluded"].as_array().unwrap().len(), 1);
}

#[test]
fn manifest_lists_every_file() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["all", "--cells", "--samples", "200"];
    args.extend(SMALL);
    let o = lab(dir.path(), &args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let m = json(&dir.path().join("manifest.json"));
    let mut on_disk: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    on_disk.sort();
    let listed: Vec<String> = m["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    assert_eq!(listed, on_disk);
    assert!(listed.contains(&"cells.csv".to_string()));
    assert!(m["verdicts"].as_object().unwrap().values().all(|v| v == "pass"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut args = vec!["nonuniqueness", "--samples", "100", "--seed", "3"];
    args.extend(SMALL);
    for d in [&a, &b] {
        assert_eq!(lab(d.path(), &args).status.code(), Some(0));
    }
    for name in ["family.json", "family.csv"] {
        assert_eq!(
            std::fs::read(a.path().join(name)).unwrap(),
            std::fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
    // the manifest echoes the output directory, so compare it without that field
    let strip = |d: &Path| {
        let mut m = json(&d.join("manifest.json"));
        m["config"]["out"] = Value::Null;
        m
    };
    assert_eq!(strip(a.path()), strip(b.path()));
}
