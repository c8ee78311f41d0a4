use std::fs;
use std::path::Path;

use lerw::cli::{parse_fraction, run};
use serde_json::Value;

const BOX_DOMAIN: &str = r#"{
  "holes": [],
  "start_x": 0.0,
  "far_box": {"half_width": 0.5, "height": 1.0},
  "target": {"kind": "InteriorPoint", "p": [0.0, 0.5]},
  "mesh": 0.0625
}"#;

const HALF_PLANE: &str = r#"{
  "holes": [],
  "start_x": 0.0,
  "far_radius": 10.0,
  "target": {"kind": "InteriorPoint", "p": [0.0, 1.0]},
  "mesh": 0.125
}"#;

fn lerw(args: &[&str]) -> i32 {
    run(std::iter::once("lerw").chain(args.iter().copied()))
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn sample_then_extract() {
    let tmp = tempfile::tempdir().unwrap();
    let dom = write(tmp.path(), "box.json", BOX_DOMAIN);
    let out = tmp.path().join("samples");
    assert_eq!(lerw(&["sample-lerw", "--domain", &dom, "--n", "3", "--seed", "4", "--out", out.to_str().unwrap()]), 0);
    let m = manifest(&out);
    assert_eq!(m["command"], "sample-lerw");
    assert_eq!(m["replicas"], 3);
    assert_eq!(m["schema_version"], 1);
    assert!(m["domain_sha256"].as_str().unwrap().len() == 64);
    let path = out.join("path_00000.csv");
    assert!(fs::read_to_string(&path).unwrap().starts_with("k,x,y\n-1,"));

    let drv = tmp.path().join("driving");
    assert_eq!(lerw(&["extract-driving", "--path", path.to_str().unwrap(), "--out", drv.to_str().unwrap()]), 0);
    let m = manifest(&drv);
    assert!(m["summary"]["hcap"].as_f64().unwrap() > 0.0);
    assert!(drv.join("driving.csv").exists() && drv.join("trace.csv").exists());
}

#[test]
fn run_continuous_replays_from_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let dom = write(tmp.path(), "h.json", HALF_PLANE);
    let mut csv = Vec::new();
    for name in ["a", "b"] {
        let out = tmp.path().join(name);
        let code = lerw(&["run-continuous", "--domain", &dom, "--tmax", "0.05", "--seed", "9", "--out", out.to_str().unwrap()]);
        assert_eq!(code, 0);
        csv.push(fs::read_to_string(out.join("driving.csv")).unwrap());
        assert_eq!(manifest(&out)["summary"]["u_monotone"], true);
    }
    assert_eq!(csv[0], csv[1]);
    assert!(csv[0].lines().count() > 40);
}

#[test]
fn checks_write_reports_and_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let dom = write(tmp.path(), "h.json", HALF_PLANE);
    let good = tmp.path().join("good");
    let code = lerw(&[
        "check-martingale", "--domain", &dom, "--probes", "0,2", "--n", "200", "--seed", "1", "--out",
        good.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert_eq!(manifest(&good)["pass"], true);
    assert!(good.join("report.json").exists());

    let boxed = write(tmp.path(), "box.json", BOX_DOMAIN);
    let ql = tmp.path().join("ql");
    let code = lerw(&["quasi-loops", "--domain", &boxed, "--center", "0,0.4", "--r", "0.1", "--n", "50", "--out", ql.to_str().unwrap()]);
    assert_eq!(code, 0);

    let summary = tmp.path().join("summary.json");
    let code = lerw(&["report", good.to_str().unwrap(), ql.to_str().unwrap(), "--out", summary.to_str().unwrap()]);
    assert_eq!(code, 0);
    let s: Value = serde_json::from_str(&fs::read_to_string(summary).unwrap()).unwrap();
    assert_eq!(s["runs"].as_array().unwrap().len(), 2);
}

#[test]
fn validation_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write(tmp.path(), "bad.json", r#"{"holes": [], "start_x": 0.0, "target": {"kind": "PrimeEnd", "x_e": 1.0}, "mesh": 0.1}"#);
    let out = tmp.path().join("o");
    assert_eq!(lerw(&["sample-lerw", "--domain", &bad, "--out", out.to_str().unwrap()]), 1);
    assert_eq!(lerw(&["no-such-command"]), 1);
    let missing = tmp.path().join("missing.json");
    assert_eq!(lerw(&["solve-field", "--domain", missing.to_str().unwrap(), "--out", out.to_str().unwrap()]), 1);
}

#[test]
fn fractions() {
    assert_eq!(parse_fraction("1/20").unwrap(), 0.05);
    assert_eq!(parse_fraction(" 0.25 ").unwrap(), 0.25);
    assert!(parse_fraction("1/x").is_err());
}
