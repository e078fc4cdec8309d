//! Canned scenarios, one per figure-style experiment.
//!
//! Every preset is a list of series sharing graph, data and partition
//! settings. Calibrated constants live here and nowhere else.

use crate::error::{Error, Result};
use crate::learner::{Arch, TrainConfig};
use crate::policy::{ElasticParams, ImportanceParams, PolicyKind};
use crate::swarm::{AttractionConfig, Placement, RendezvousConfig, VisitBudget};

use super::config::{
    DataSpec, ExperimentConfig, GraphSpec, LearnerSpec, MemorySpec, PartitionSpec, PolicySpec,
    WalkerSpec,
};
use super::Series;

pub const PRESET_NAMES: [&str; 5] = ["fig2", "fig3", "fig4", "fig5", "fig6"];

#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: String,
    pub series: Vec<Series>,
}

impl Preset {
    /// Seeds `base, base + 1, ..` for `count` repetitions.
    pub fn seeds(base: u64, count: usize) -> Vec<u64> {
        (0..count as u64).map(|k| base.wrapping_add(k)).collect()
    }

    pub fn series_names(&self) -> Vec<&str> {
        self.series.iter().map(|s| s.name.as_str()).collect()
    }
}

fn base(name: &str, graph: GraphSpec, partition: PartitionSpec, jumps: u64) -> ExperimentConfig {
    ExperimentConfig {
        name: name.to_string(),
        graph,
        data: DataSpec::default(),
        partition,
        learner: LearnerSpec {
            arch: Arch::Softmax,
            train: TrainConfig {
                learning_rate: 0.05,
                batch_size: 32,
                l2: 0.0,
            },
        },
        policy: PolicySpec::default(),
        elastic: ElasticParams::default(),
        visit: VisitBudget::Fixed { iters: 5 },
        walkers: WalkerSpec::default(),
        memory: MemorySpec::default(),
        attraction: None,
        rendezvous: None,
        uplink: false,
        collisions: true,
        jumps,
        eval_every: 1,
        tail_frac: 0.2,
        seeds: Vec::new(),
    }
}

fn series(name: &str, value: Option<f64>, mut config: ExperimentConfig) -> Series {
    config.name = name.to_string();
    Series {
        name: name.to_string(),
        value,
        config,
    }
}

fn with_policy(cfg: &ExperimentConfig, kind: PolicyKind, alpha: f64) -> ExperimentConfig {
    let mut c = cfg.clone();
    c.policy.kind = kind;
    c.policy.importance = ImportanceParams {
        alpha,
        ..c.policy.importance
    };
    c
}

/// Single walker on a ring of cliques with heavily skewed labels: two
/// topology-only walks, three fixed mixing weights and the accuracy-driven
/// weight. Harder classes and a smaller step keep accuracy inside the range
/// the accuracy-to-weight map spans.
fn fig2() -> Vec<Series> {
    let mut cfg = base(
        "fig2",
        GraphSpec::Caveman {
            cliques: 8,
            nodes: 50,
        },
        PartitionSpec::LabelSkew {
            skew_frac: 0.98,
            labels_lo: 1,
            labels_hi: 2,
        },
        400,
    );
    cfg.data.sep = 2.0;
    cfg.learner.train.learning_rate = 0.02;
    vec![
        series("uniform", None, with_policy(&cfg, PolicyKind::Uniform, 0.5)),
        series("mh", None, with_policy(&cfg, PolicyKind::Mh, 0.5)),
        series("alpha=0", Some(0.0), with_policy(&cfg, PolicyKind::ImportanceStatic, 0.0)),
        series("alpha=0.5", Some(0.5), with_policy(&cfg, PolicyKind::ImportanceStatic, 0.5)),
        series("alpha=1", Some(1.0), with_policy(&cfg, PolicyKind::ImportanceStatic, 1.0)),
        series("dynamic", None, with_policy(&cfg, PolicyKind::ImportanceDynamic, 0.5)),
    ]
}

/// Fixed per-visit budgets against the quality-driven budget.
fn fig3() -> Vec<Series> {
    let cfg = base(
        "fig3",
        GraphSpec::Rgg {
            nodes: 100,
            radius: None,
            max_retries: 1000,
        },
        PartitionSpec::LabelSkew {
            skew_frac: 0.9,
            labels_lo: 1,
            labels_hi: 2,
        },
        400,
    );
    let mut out: Vec<Series> = [20usize, 40, 60]
        .iter()
        .map(|&k| {
            let mut c = cfg.clone();
            c.visit = VisitBudget::Fixed { iters: k };
            series(&format!("fixed-{k}"), Some(k as f64), c)
        })
        .collect();
    let mut c = cfg;
    c.visit = VisitBudget::Elastic;
    out.push(series("elastic", None, c));
    out
}

/// The same trajectories with and without the stale-model merge.
fn fig4() -> Vec<Series> {
    let mut cfg = base(
        "fig4",
        GraphSpec::Rgg {
            nodes: 150,
            radius: None,
            max_retries: 1000,
        },
        PartitionSpec::LabelSkew {
            skew_frac: 0.9,
            labels_lo: 1,
            labels_hi: 2,
        },
        400,
    );
    cfg.tail_frac = 1.0 / 3.0;
    let mut mem = cfg.clone();
    mem.memory.enabled = true;
    vec![series("memory", None, mem), series("no-memory", None, cfg)]
}

/// Walkers that meet at one node at a fixed period, for several swarm sizes.
fn fig5() -> Vec<Series> {
    let mut cfg = base(
        "fig5",
        GraphSpec::Caveman {
            cliques: 10,
            nodes: 100,
        },
        PartitionSpec::CliqueDominant { dominance: 1.0 },
        300,
    );
    cfg.rendezvous = Some(RendezvousConfig { every: 10, node: 0 });
    [2usize, 6, 10, 14]
        .iter()
        .map(|&w| {
            let mut c = cfg.clone();
            c.walkers.count = w;
            series(&format!("walkers={w}"), Some(w as f64), c)
        })
        .collect()
}

/// One walker per clique, each confined to its clique, meeting only through
/// attraction; the uplink series aggregates every jump.
fn fig6() -> Vec<Series> {
    let mut cfg = base(
        "fig6",
        GraphSpec::Caveman {
            cliques: 8,
            nodes: 64,
        },
        PartitionSpec::CliqueDominant { dominance: 1.0 },
        300,
    );
    cfg.data.n_classes = 8;
    cfg.policy.confine_to_clique = true;
    cfg.walkers = WalkerSpec {
        count: 8,
        placement: Placement::PerClique,
    };
    let mut out: Vec<Series> = [0.02, 0.05, 0.1]
        .iter()
        .map(|&a| {
            let mut c = cfg.clone();
            c.attraction = Some(AttractionConfig {
                strength: a,
                base_coeff: 0.001,
                cooldown_max: 5,
            });
            series(&format!("A={a}"), Some(a), c)
        })
        .collect();
    let mut up = cfg;
    up.uplink = true;
    out.push(series("uplink", None, up));
    out
}

pub fn preset(name: &str) -> Result<Preset> {
    let series = match name {
        "fig2" => fig2(),
        "fig3" => fig3(),
        "fig4" => fig4(),
        "fig5" => fig5(),
        "fig6" => fig6(),
        other => {
            return Err(Error::Config(format!(
                "unknown preset '{other}' (expected one of {})",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    Ok(Preset {
        name: name.to_string(),
        series,
    })
}
