//! Complete simulations: configuration, execution, logs and summaries.
//!
//! A run builds its graph, dataset, partition and initial model from one
//! seed, drives a [`Swarm`] for the configured number of jumps and returns a
//! [`RunLog`]. Sweeps and presets are lists of named [`Series`], each run
//! over a list of seeds; cells are independent and may execute in parallel.

mod config;
mod records;
mod presets;
mod summary;

use std::sync::Arc;

use rayon::prelude::*;

pub use self::config::{
    DataSpec, ExperimentConfig, GraphSpec, LearnerSpec, MemorySpec, PartitionSpec, PolicySpec,
    WalkerSpec,
};
pub use self::records::{read_logs, write_logs, LogLine, RunHeader, RunLog};
pub use self::presets::{preset, Preset, PRESET_NAMES};
pub use self::summary::{summarize, MetricsRow, SeriesSummary, Summary};

use crate::datahub::{gen_synthetic, partition_clique_dominant, partition_label_skew, Dataset, Partition};
use crate::error::{Error, Result};
use crate::learner::{evaluate, init_model, ModelParams};
use crate::policy::{
    build_importance_vector, build_transition, dynamic_alpha, mh_transition, uniform_transition,
    PolicyKind, TransitionPolicy,
};
use crate::rng::{derive_seed, Stream};
use crate::swarm::{Swarm, SwarmConfig, World};
use crate::topology::{betweenness, default_rgg_radius, gen_connected_caveman, gen_rgg, Centrality, Graph};

/// Everything a run derives from `(config, seed)` before the first jump.
#[derive(Debug, Clone)]
pub struct Env {
    pub graph: Graph,
    pub centrality: Centrality,
    pub dataset: Dataset,
    pub partition: Partition,
    pub init: ModelParams,
}

pub fn build_graph(spec: &GraphSpec, seed: u64) -> Result<Graph> {
    let s = derive_seed(seed, Stream::Graph, 0);
    match *spec {
        GraphSpec::Caveman { cliques, nodes } => gen_connected_caveman(cliques, nodes, s),
        GraphSpec::Rgg {
            nodes,
            radius,
            max_retries,
        } => gen_rgg(nodes, radius.unwrap_or_else(|| default_rgg_radius(nodes)), s, max_retries),
    }
}

pub fn build_dataset(spec: &DataSpec, seed: u64) -> Result<Dataset> {
    gen_synthetic(
        spec.n_classes,
        spec.n_dims,
        spec.per_class,
        spec.val_frac,
        spec.sep,
        derive_seed(seed, Stream::Data, 0),
    )
}

pub fn build_env(cfg: &ExperimentConfig, seed: u64) -> Result<Env> {
    cfg.validate()?;
    let graph = build_graph(&cfg.graph, seed)?;
    let centrality = betweenness(&graph);
    let dataset = build_dataset(&cfg.data, seed)?;
    let ps = derive_seed(seed, Stream::Partition, 0);
    let partition = match cfg.partition {
        PartitionSpec::LabelSkew {
            skew_frac,
            labels_lo,
            labels_hi,
        } => partition_label_skew(&dataset, &graph, skew_frac, labels_lo, labels_hi, ps)?,
        PartitionSpec::CliqueDominant { dominance } => {
            partition_clique_dominant(&dataset, &graph, dominance, ps)?
        }
    };
    let init = init_model(
        cfg.learner.arch,
        cfg.data.n_dims,
        cfg.data.n_classes,
        derive_seed(seed, Stream::Init, 0),
    );
    Ok(Env {
        graph,
        centrality,
        dataset,
        partition,
        init,
    })
}

/// Policy every walker starts from. The dynamic policy starts at the alpha
/// matching the initial model's validation accuracy.
pub fn base_policy(cfg: &ExperimentConfig, env: &Env) -> Result<TransitionPolicy> {
    let p = &cfg.policy.importance;
    let importance = |alpha: f64| {
        build_importance_vector(&env.partition.quality, &env.centrality, alpha, p.normalize_terms)
    };
    Ok(match cfg.policy.kind {
        PolicyKind::Uniform => uniform_transition(&env.graph),
        PolicyKind::Mh => mh_transition(&env.graph),
        PolicyKind::ImportanceStatic => build_transition(&env.graph, &importance(p.alpha))?,
        PolicyKind::ImportanceDynamic => {
            let acc = evaluate(&env.init, env.dataset.validation_view())?.accuracy;
            let mut policy = build_transition(&env.graph, &importance(dynamic_alpha(acc, p)))?;
            policy.kind = PolicyKind::ImportanceDynamic;
            policy
        }
    })
}

pub fn swarm_config(cfg: &ExperimentConfig) -> SwarmConfig {
    SwarmConfig {
        train: cfg.learner.train,
        budget: cfg.visit,
        elastic: cfg.elastic,
        memory: cfg.memory.resolve(cfg.jumps),
        perception: (cfg.policy.kind == PolicyKind::ImportanceDynamic)
            .then_some(cfg.policy.importance),
        perception_every: cfg.policy.perception_every,
        confine: cfg.policy.confine_to_clique,
        attraction: cfg.attraction,
        rendezvous: cfg.rendezvous,
        uplink: cfg.uplink,
        collisions: cfg.collisions,
        jumps: cfg.jumps,
        eval_every: cfg.eval_every,
    }
}

pub fn run_id(series: &str, seed: u64) -> String {
    format!("{series}/s{seed}")
}

/// Runs the walkers with the given ids. A walker's random streams depend
/// only on `(seed, id)`, so a subset of ids reproduces those walkers'
/// trajectories whenever they do not interact.
pub fn run_with_walkers(
    cfg: &ExperimentConfig,
    seed: u64,
    ids: &[usize],
    series: &str,
    value: Option<f64>,
) -> Result<RunLog> {
    let env = build_env(cfg, seed)?;
    let policy = Arc::new(base_policy(cfg, &env)?);
    let world = World {
        graph: &env.graph,
        centrality: &env.centrality,
        dataset: &env.dataset,
        partition: &env.partition,
    };
    let id = run_id(series, seed);
    let mut swarm = Swarm::new(
        world,
        swarm_config(cfg),
        policy,
        &env.init,
        ids,
        cfg.walkers.placement,
        seed,
        id.clone(),
    )?;
    swarm.run()?;
    Ok(RunLog {
        header: RunHeader {
            run_id: id,
            series: series.to_string(),
            seed,
            jumps: cfg.jumps,
            walkers: ids.len(),
            tail_frac: cfg.tail_frac,
            value,
        },
        jumps: std::mem::take(&mut swarm.jump_log),
        events: std::mem::take(&mut swarm.event_log),
    })
}

pub fn run_single(cfg: &ExperimentConfig, seed: u64) -> Result<RunLog> {
    let ids: Vec<usize> = (0..cfg.walkers.count).collect();
    let series = if cfg.name.is_empty() { "run" } else { cfg.name.as_str() };
    run_with_walkers(cfg, seed, &ids, series, None)
}

/// One named curve: a config plus the swept value it represents, if any.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Series {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    pub config: ExperimentConfig,
}

/// Runs every `(series, seed)` cell. Output order is series order, then
/// seed order, regardless of how cells are scheduled.
pub fn run_series(series: &[Series], seeds: &[u64]) -> Result<Vec<RunLog>> {
    if seeds.is_empty() {
        return Err(Error::Config("at least one seed is required".into()));
    }
    for s in series {
        s.config.validate()?;
    }
    let cells: Vec<(&Series, u64)> = series
        .iter()
        .flat_map(|s| seeds.iter().map(move |&seed| (s, seed)))
        .collect();
    let work = || {
        cells
            .par_iter()
            .map(|(s, seed)| {
                let ids: Vec<usize> = (0..s.config.walkers.count).collect();
                run_with_walkers(&s.config, *seed, &ids, &s.name, s.value)
            })
            .collect::<Result<Vec<_>>>()
    };
    match thread_limit()? {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Internal(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    }
}

/// `XLWALK_THREADS` caps parallelism; unset or 0 means automatic.
fn thread_limit() -> Result<Option<usize>> {
    match std::env::var("XLWALK_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(0) => Ok(None),
            Ok(n) => Ok(Some(n)),
            Err(_) => Err(Error::Config(format!("XLWALK_THREADS must be a number, got '{v}'"))),
        },
    }
}

/// Builds one series per value of `axis`, named `axis=value`.
pub fn sweep_series(cfg: &ExperimentConfig, axis: &str, values: &[f64]) -> Result<Vec<Series>> {
    if values.is_empty() {
        return Err(Error::Config("a sweep needs at least one value".into()));
    }
    values
        .iter()
        .map(|&v| {
            let mut c = cfg.clone();
            c.set_axis(axis, v)?;
            Ok(Series {
                name: format!("{axis}={v}"),
                value: Some(v),
                config: c,
            })
        })
        .collect()
}

pub fn run_sweep(cfg: &ExperimentConfig, axis: &str, values: &[f64], seeds: &[u64]) -> Result<Vec<RunLog>> {
    run_series(&sweep_series(cfg, axis, values)?, seeds)
}

/// Writes `events.jsonl`, `metrics.csv`, `summary.csv` and `config.json`.
pub fn write_outputs(dir: &std::path::Path, series: &[Series], logs: &[RunLog]) -> Result<Summary> {
    std::fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
    let summary = summarize(logs)?;
    write_logs(&dir.join("events.jsonl"), logs)?;
    summary.write(dir)?;
    let cfg_path = dir.join("config.json");
    let json = serde_json::to_string_pretty(series)?;
    std::fs::write(&cfg_path, json + "\n").map_err(|e| Error::file(&cfg_path, e))?;
    Ok(summary)
}

#[cfg(test)]
mod tests;
