use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SMALL: &str = r#"{
  "locations": [
    {"id": "midspan", "position": 30.0},
    {"id": "support", "position": 3.0}
  ],
  "windows": {"count": 3, "duration": 300, "sample_rate": 20},
  "traffic": {"rates": [40, 10, 25]},
  "pso": {"swarm": 6, "iterations": 6},
  "verify_optima": false
}"#;

fn peh(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_peh")).args(args).env("RUST_LOG", "warn").output().unwrap()
}

fn config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str]) -> i32 {
    let out = peh(args);
    out.status.code().unwrap_or(-1)
}

#[test]
fn campaign_twice_writes_identical_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = peh(&["campaign", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "4"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for file in ["report.json", "manifest.json", "plots/energy_locations.svg"] {
        let x = std::fs::read(a.join(file)).unwrap();
        let y = std::fs::read(b.join(file)).unwrap();
        assert!(x == y, "{file} differs");
    }
    let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(a.join("manifest.json")).unwrap()).unwrap();
    for stage in ["optimize", "cluster", "evaluate", "report"] {
        assert!(manifest["stages"][stage].is_string(), "missing stage {stage}");
    }
}

#[test]
fn stages_run_one_at_a_time() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), SMALL);
    let out = dir.path().join("out");
    let common = ["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--threads", "1"];
    for stage in ["synth", "optimize", "cluster", "evaluate", "report"] {
        let mut args = vec![stage];
        args.extend_from_slice(&common);
        let o = peh(&args);
        assert!(o.status.success(), "{stage}: {}", String::from_utf8_lossy(&o.stderr));
    }
    assert!(out.join("windows/midspan.csv").is_file());
    assert!(out.join("report.json").is_file());
    assert!(out.join("plots/frf_support.svg").is_file());
    let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    for stage in ["synth", "optimize", "cluster", "evaluate", "report"] {
        assert!(manifest["stages"][stage].is_string(), "missing stage {stage}");
    }
}

#[test]
fn input_problems_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();

    let empty = config(dir.path(), r#"{"locations": []}"#);
    assert_eq!(run(&["campaign", "--config", empty.to_str().unwrap(), "--out", out]), 1);

    let broken = config(dir.path(), "{ not json");
    assert_eq!(run(&["optimize", "--config", broken.to_str().unwrap(), "--out", out]), 1);

    let bounds = config(dir.path(), r#"{"pso": {"swarm": 0}}"#);
    assert_eq!(run(&["campaign", "--config", bounds.to_str().unwrap(), "--out", out]), 1);

    let missing = dir.path().join("absent.json");
    assert_eq!(run(&["synth", "--config", missing.to_str().unwrap(), "--out", out]), 1);

    assert_eq!(run(&["report", "--out", out]), 1);
    assert_eq!(run(&["cluster", "--out", out]), 1);
    assert_eq!(run(&["campaign", "--threads", "0", "--out", out]), 1);
}
