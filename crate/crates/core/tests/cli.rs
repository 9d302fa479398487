use std::path::Path;
use std::process::{Command, Output};

use kdesplit::harness::{run, ExperimentConfig};

fn kdesplit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kdesplit")).args(args).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn synth_is_deterministic() {
    let a = kdesplit(&["synth", "sample", "--instance", "two_plateaus", "--n", "50", "--seed", "4"]);
    let b = kdesplit(&["synth", "--instance", "two_plateaus", "--n", "50", "--seed", "4"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = kdesplit(&["synth", "--instance", "two_plateaus", "--n", "50", "--seed", "5"]);
    assert_ne!(a.stdout, c.stdout);
    assert_eq!(String::from_utf8(a.stdout).unwrap().lines().count(), 51);
}

#[test]
fn cluster_on_a_csv() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    let out = dir.path().join("r.json");
    let labels = dir.path().join("l.csv");
    let s = kdesplit(&["synth", "--instance", "two_plateaus", "--n", "2000", "--seed", "1", "--out", path(&data)]);
    assert!(s.status.success());
    let r = kdesplit(&["cluster", "--data", path(&data), "--delta", "0.1", "--out", path(&out), "--csv", path(&labels)]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(json["split"], true);
    assert_eq!(json["components"].as_array().unwrap().len(), 2);
    assert_eq!(json["n"], 2000);
    let lab = std::fs::read_to_string(&labels).unwrap();
    assert_eq!(lab.lines().count(), 2001);
}

#[test]
fn adaptive_on_a_csv_with_explicit_bandwidths() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    kdesplit(&["synth", "--instance", "ball", "--n", "500", "--out", path(&data)]);
    let r = kdesplit(&["adaptive", "--data", path(&data), "--deltas", "0.1,0.2,0.3"]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let json: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
    assert_eq!(json["split"], false);
    assert_eq!(json["grid"]["deltas"].as_array().unwrap().len(), 3);
}

#[test]
fn tiny_sample_with_a_huge_step_does_not_split() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    std::fs::write(&data, "x\n0.0\n0.1\n0.2\n0.3\n0.4\n2.0\n2.1\n2.2\n2.3\n2.4\n").unwrap();
    let r = kdesplit(&["cluster", "--data", path(&data), "--delta", "0.2", "--eps", "100"]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let json: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
    assert_eq!(json["split"], false);
    assert_eq!(json["rho_out"], 100.0);
    assert_eq!(json["components"][0].as_array().unwrap().len(), 0);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"mode": "rates", "instance": {"name": "poly_valley"}}"#).unwrap();
    let r = kdesplit(&["rates", "--config", path(&cfg)]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("n_list"));
    std::fs::write(&cfg, r#"{"mode": "rates", "instance": {"name": "poly_valley"}, "n_list": [100], "bogus": 1}"#).unwrap();
    assert_eq!(kdesplit(&["rates", "--config", path(&cfg)]).status.code(), Some(2));
    assert_eq!(kdesplit(&["cluster", "--nope"]).status.code(), Some(2));
    assert_eq!(kdesplit(&["--help"]).status.code(), Some(0));
}

#[test]
fn runtime_errors_exit_with_three() {
    let r = kdesplit(&["cluster", "--data", "/nonexistent/file.csv", "--delta", "0.1"]);
    assert_eq!(r.status.code(), Some(3));
}

#[test]
fn reports_are_reproducible() {
    let json = r#"{
        "mode": "cluster",
        "instance": {"name": "two_plateaus"},
        "n_list": [1000],
        "seeds": [0, 1, 2],
        "delta": 0.05
    }"#;
    let cfg = ExperimentConfig::from_json(json).unwrap();
    let a = run(&cfg).unwrap().to_json().unwrap();
    let b = run(&cfg).unwrap().to_json().unwrap();
    assert_eq!(a, b);
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("c.json");
    std::fs::write(&file, json).unwrap();
    let out1 = dir.path().join("1.json");
    let out2 = dir.path().join("2.json");
    for out in [&out1, &out2] {
        let r = kdesplit(&["cluster", "--config", path(&file), "--out", path(out)]);
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    }
    assert_eq!(std::fs::read(&out1).unwrap(), std::fs::read(&out2).unwrap());
    assert!(dir.path().join("1.csv").exists());
    let other = kdesplit(&["cluster", "--config", path(&file), "--seed", "9"]);
    assert_ne!(other.stdout, std::fs::read(&out1).unwrap());
}
