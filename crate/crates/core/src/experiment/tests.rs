use super::*;
use crate::swarm::{AttractionConfig, EventKind, VisitBudget};

fn tiny() -> ExperimentConfig {
    ExperimentConfig {
        name: "tiny".into(),
        graph: GraphSpec::Caveman {
            cliques: 2,
            nodes: 8,
        },
        data: DataSpec {
            n_classes: 3,
            n_dims: 4,
            per_class: 20,
            val_frac: 0.25,
            sep: 3.0,
        },
        partition: PartitionSpec::LabelSkew {
            skew_frac: 0.5,
            labels_lo: 1,
            labels_hi: 2,
        },
        learner: LearnerSpec::default(),
        policy: PolicySpec::default(),
        elastic: Default::default(),
        visit: VisitBudget::Fixed { iters: 2 },
        walkers: WalkerSpec::default(),
        memory: MemorySpec::default(),
        attraction: None,
        rendezvous: None,
        uplink: false,
        collisions: true,
        jumps: 20,
        eval_every: 1,
        tail_frac: 0.25,
        seeds: vec![],
    }
}

#[test]
fn zero_jumps_rejected() {
    let mut c = tiny();
    c.jumps = 0;
    assert!(matches!(run_single(&c, 0), Err(Error::Config(_))));
}

#[test]
fn clique_settings_need_caveman() {
    let mut c = tiny();
    c.graph = GraphSpec::Rgg {
        nodes: 8,
        radius: Some(2.0),
        max_retries: 10,
    };
    c.partition = PartitionSpec::CliqueDominant { dominance: 1.0 };
    assert!(c.validate().is_err());
}

#[test]
fn config_json_round_trip() {
    let mut c = tiny();
    c.attraction = Some(AttractionConfig::default());
    let back: ExperimentConfig = serde_json::from_str(&c.to_json_pretty().unwrap()).unwrap();
    assert_eq!(back, c);
}

#[test]
fn minimal_config_uses_defaults() {
    let c: ExperimentConfig = serde_json::from_str(
        r#"{"graph":{"kind":"caveman","cliques":2,"nodes":8},
            "partition":{"kind":"clique_dominant","dominance":1.0},
            "visit":{"kind":"elastic"},"jumps":3}"#,
    )
    .unwrap();
    assert_eq!(c.data, DataSpec::default());
    assert!(c.collisions);
    assert_eq!(c.eval_every, 1);
    c.validate().unwrap();
}

#[test]
fn run_is_repeatable() {
    let c = tiny();
    assert_eq!(run_single(&c, 3).unwrap(), run_single(&c, 3).unwrap());
    assert_ne!(run_single(&c, 3).unwrap().jumps, run_single(&c, 4).unwrap().jumps);
}

#[test]
fn lone_walker_never_attracts() {
    let mut c = tiny();
    c.attraction = Some(AttractionConfig {
        strength: 1.0,
        base_coeff: 1.0,
        cooldown_max: 0,
    });
    let log = run_single(&c, 1).unwrap();
    assert!(log.events.is_empty());
}

#[test]
fn unknown_axis_rejected() {
    let err = run_sweep(&tiny(), "colour", &[1.0], &[0]).unwrap_err();
    assert!(matches!(err, Error::Config(_)));
}

#[test]
fn degenerate_sweep_matches_single_run() {
    let c = tiny();
    let swept = run_sweep(&c, "alpha", &[0.5], &[9]).unwrap();
    assert_eq!(swept.len(), 1);
    let ids = [0];
    let single = run_with_walkers(&c, 9, &ids, "alpha=0.5", Some(0.5)).unwrap();
    assert_eq!(swept[0], single);
}

#[test]
fn walker_count_sweep_has_a_row_per_value() {
    let mut c = tiny();
    c.rendezvous = Some(crate::swarm::RendezvousConfig { every: 5, node: 0 });
    let logs = run_sweep(&c, "walker_count", &[2.0, 3.0], &[0, 1]).unwrap();
    let s = summarize(&logs).unwrap();
    assert_eq!(s.series.len(), 2);
    assert_eq!(s.series[1].value, Some(3.0));
    assert!(logs[0].events.iter().any(|e| e.kind == EventKind::Rendezvous));
}

#[test]
fn cell_order_does_not_change_results() {
    let c = tiny();
    let series = sweep_series(&c, "alpha", &[0.0, 1.0]).unwrap();
    let forward = run_series(&series, &[4, 5]).unwrap();
    let reversed: Vec<Series> = series.iter().rev().cloned().collect();
    let backward = run_series(&reversed, &[5, 4]).unwrap();
    for log in &forward {
        assert!(backward.contains(log));
    }
}

#[test]
fn summarize_empty_is_error() {
    assert!(summarize(&[]).is_err());
}

#[test]
fn one_run_has_zero_spread() {
    let s = summarize(&[run_single(&tiny(), 0).unwrap()]).unwrap();
    assert_eq!(s.metrics.len(), 20);
    assert!(s.metrics.iter().all(|r| r.acc_std == 0.0 && r.loss_std == 0.0 && r.cum_sgd_std == 0.0));
    assert_eq!(s.series[0].final_acc_std, 0.0);
}

#[test]
fn identical_runs_average_to_themselves() {
    let base = run_single(&tiny(), 2).unwrap();
    let mut copies = Vec::new();
    for k in 0..3 {
        let mut l = base.clone();
        l.header.run_id = format!("copy{k}");
        for r in &mut l.jumps {
            r.run_id = l.header.run_id.clone();
        }
        copies.push(l);
    }
    let one = summarize(&[base]).unwrap();
    let many = summarize(&copies).unwrap();
    for (a, b) in one.metrics.iter().zip(&many.metrics) {
        assert!((a.acc_mean - b.acc_mean).abs() < 1e-12);
        assert!((a.cum_sgd_mean - b.cum_sgd_mean).abs() < 1e-9);
        assert_eq!(b.runs, 3);
    }
}

#[test]
fn incompatible_runs_rejected() {
    let a = run_single(&tiny(), 0).unwrap();
    let mut c = tiny();
    c.jumps = 10;
    let b = run_single(&c, 1).unwrap();
    assert!(summarize(&[a, b]).is_err());
}

#[test]
fn cumulative_sgd_never_decreases() {
    let mut c = tiny();
    c.visit = VisitBudget::Elastic;
    let s = summarize(&[run_single(&c, 0).unwrap()]).unwrap();
    assert!(s.metrics.windows(2).all(|w| w[0].cum_sgd_mean <= w[1].cum_sgd_mean));
    assert!(s.metrics.iter().all(|r| (0.0..=1.0).contains(&r.acc_mean)));
}

#[test]
fn event_log_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = tiny();
    c.walkers.count = 3;
    c.attraction = Some(AttractionConfig {
        strength: 0.2,
        base_coeff: 0.2,
        cooldown_max: 2,
    });
    let logs = vec![run_single(&c, 0).unwrap(), run_single(&c, 1).unwrap()];
    let path = dir.path().join("events.jsonl");
    write_logs(&path, &logs).unwrap();
    assert_eq!(read_logs(&path).unwrap(), logs);
}

#[test]
fn records_before_header_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("events.jsonl");
    std::fs::write(
        &path,
        r#"{"type":"jump","run_id":"x","walker_id":0,"t":1,"node":0,"iters":1}"#,
    )
    .unwrap();
    assert!(matches!(read_logs(&path), Err(Error::Log(_))));
}

#[test]
fn presets_are_valid() {
    for name in PRESET_NAMES {
        let p = preset(name).unwrap();
        assert!(!p.series.is_empty());
        for s in &p.series {
            s.config.validate().unwrap();
        }
    }
    assert_eq!(
        preset("fig2").unwrap().series_names(),
        ["uniform", "mh", "alpha=0", "alpha=0.5", "alpha=1", "dynamic"]
    );
    assert!(preset("fig9").is_err());
}

#[test]
fn uplink_interval_is_one() {
    let mut c = tiny();
    c.walkers.count = 3;
    c.uplink = true;
    c.collisions = false;
    let s = summarize(&[run_single(&c, 0).unwrap()]).unwrap();
    assert_eq!(s.series[0].collision_interval, 1.0);
}
