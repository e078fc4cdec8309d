use std::process::{Command, Output};

fn xlwalk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xlwalk"))
        .args(args)
        .output()
        .unwrap()
}

const TINY: &str = r#"{
  "name": "tiny",
  "graph": {"kind": "caveman", "cliques": 2, "nodes": 8},
  "data": {"n_classes": 3, "n_dims": 4, "per_class": 20, "val_frac": 0.25, "sep": 3.0},
  "partition": {"kind": "label_skew", "skew_frac": 0.5, "labels_lo": 1, "labels_hi": 2},
  "visit": {"kind": "fixed", "iters": 2},
  "walkers": {"count": 2, "placement": {"kind": "random"}},
  "jumps": 12
}"#;

#[test]
fn missing_config_is_file_not_found() {
    let out = xlwalk(&["run", "--config", "/nonexistent/cfg.json", "--out", "/tmp/never"]);
    assert_eq!(out.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "file_not_found");
}

#[test]
fn bad_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, TINY.replace("\"jumps\": 12", "\"jumps\": 0")).unwrap();
    let out = xlwalk(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unknown_subcommand_is_usage_error() {
    assert_eq!(xlwalk(&["fly"]).status.code(), Some(2));
    assert_eq!(xlwalk(&["preset", "fig9", "--show-config"]).status.code(), Some(2));
}

#[test]
fn gen_graph_is_repeatable() {
    let args = ["gen-graph", "--kind", "rgg", "--nodes", "30", "--seed", "4"];
    let a = xlwalk(&args);
    let b = xlwalk(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let g: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(g["n"], 30);
    assert_eq!(g["positions"].as_array().unwrap().len(), 30);
}

#[test]
fn gen_data_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = xlwalk(&[
        "gen-data", "--classes", "3", "--dims", "2", "--per-class", "10", "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("data.json").exists());
    assert!(dir.path().join("data.bin").exists());
}

#[test]
fn show_config_lists_series() {
    let out = xlwalk(&["preset", "fig3", "--show-config"]);
    assert!(out.status.success());
    let series: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let names: Vec<&str> = series
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["name"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["fixed-20", "fixed-40", "fixed-60", "elastic"]);
}

#[test]
fn run_then_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.json");
    std::fs::write(&cfg, TINY).unwrap();
    let run_dir = dir.path().join("run");
    let out = xlwalk(&["run", "--config", cfg.to_str().unwrap(), "--seed", "3", "--out", run_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["events.jsonl", "metrics.csv", "summary.csv", "config.json"] {
        assert!(run_dir.join(f).exists(), "{f} missing");
    }
    let report_dir = dir.path().join("report");
    let out = xlwalk(&["report", "--in", run_dir.to_str().unwrap(), "--out", report_dir.to_str().unwrap()]);
    assert!(out.status.success());
    for f in ["metrics.csv", "summary.csv"] {
        assert_eq!(
            std::fs::read(run_dir.join(f)).unwrap(),
            std::fs::read(report_dir.join(f)).unwrap()
        );
    }
}

#[test]
fn sweep_writes_one_series_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.json");
    std::fs::write(&cfg, TINY).unwrap();
    let out = xlwalk(&[
        "sweep", "--config", cfg.to_str().unwrap(), "--axis", "walker_count", "--values", "1,3",
        "--seeds", "2", "--out", dir.path().join("sw").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = summary.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("walker_count=1,1"));
    assert!(rows[1].starts_with("walker_count=3,3"));
}
