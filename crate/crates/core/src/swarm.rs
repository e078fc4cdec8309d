//! Several walkers on one graph.
//!
//! One swarm jump, in order:
//!
//! 1. attraction: every idle pair without cooldown may start a mutual pursuit;
//! 2. walkers move and visit in ascending id order (pursuers steer along
//!    shortest paths toward their partner's current node);
//! 3. the since-collision and cooldown clocks advance;
//! 4. co-located walkers collide and average their models;
//! 5. scheduled rendezvous or the uplink baseline aggregate everyone;
//! 6. models are evaluated on the validation split at the configured cadence.
//!
//! A swarm of one walker is the single-walker simulation.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::datahub::{Dataset, Partition};
use crate::error::{Error, Result};
use crate::learner::{weighted_average, ModelParams, TrainConfig};
use crate::policy::{
    clique_confined_policy, data_quality_q, elastic_iterations, ElasticParams, ImportanceParams,
    TransitionPolicy,
};
use crate::rng::{derive_rng, SimRng, Stream};
use crate::topology::{next_hop_toward, next_hop_toward_set, Centrality, Graph, NodeId};
use crate::walker::{MemoryConfig, WalkerState};

/// Everything a run reads but never changes.
pub struct World<'a> {
    pub graph: &'a Graph,
    pub centrality: &'a Centrality,
    pub dataset: &'a Dataset,
    pub partition: &'a Partition,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttractionConfig {
    /// Strength `A`.
    pub strength: f64,
    /// Trigger probability at zero elapsed time.
    pub base_coeff: f64,
    pub cooldown_max: u64,
}

impl Default for AttractionConfig {
    fn default() -> Self {
        AttractionConfig {
            strength: 0.0,
            base_coeff: 0.05,
            cooldown_max: 5,
        }
    }
}

/// `min(1, c0 * exp(A * T))`.
pub fn attraction_prob(elapsed: u64, cfg: &AttractionConfig) -> f64 {
    (cfg.base_coeff * (cfg.strength * elapsed as f64).exp()).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RendezvousConfig {
    pub every: u64,
    pub node: NodeId,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VisitBudget {
    Fixed { iters: usize },
    Elastic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwarmConfig {
    pub train: TrainConfig,
    pub budget: VisitBudget,
    pub elastic: ElasticParams,
    pub memory: MemoryConfig,
    /// Dynamic (perception-aware) importance when set.
    pub perception: Option<ImportanceParams>,
    pub perception_every: u64,
    pub confine: bool,
    pub attraction: Option<AttractionConfig>,
    pub rendezvous: Option<RendezvousConfig>,
    pub uplink: bool,
    pub collisions: bool,
    pub jumps: u64,
    pub eval_every: u64,
}

/// Dense symmetric matrix over walker pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct PairMatrix {
    n: usize,
    values: Vec<u64>,
}

impl PairMatrix {
    pub fn new(n: usize) -> Self {
        PairMatrix {
            n,
            values: vec![0; n * n],
        }
    }

    pub fn get(&self, a: usize, b: usize) -> u64 {
        self.values[a * self.n + b]
    }

    pub fn set(&mut self, a: usize, b: usize, v: u64) {
        self.values[a * self.n + b] = v;
        self.values[b * self.n + a] = v;
    }

    fn for_each_pair(&mut self, mut f: impl FnMut(u64) -> u64) {
        for a in 0..self.n {
            for b in a + 1..self.n {
                let v = f(self.get(a, b));
                self.set(a, b, v);
            }
        }
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|a| self.get(a, a) == 0 && (0..self.n).all(|b| self.get(a, b) == self.get(b, a)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwarmState {
    pub walkers: Vec<WalkerState>,
    /// Jumps since each pair last aggregated together.
    pub since_collision: PairMatrix,
    /// Remaining jumps during which a pair cannot attract.
    pub cooldown: PairMatrix,
    /// Index (into `walkers`) of the partner each walker is pursuing.
    pub pursuit: Vec<Option<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Collide,
    Rendezvous,
    PursuitStart,
    PursuitEnd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwarmEvent {
    pub run_id: String,
    pub t: u64,
    pub kind: EventKind,
    pub walkers: Vec<usize>,
    pub node: NodeId,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpRecord {
    pub run_id: String,
    pub walker_id: usize,
    pub t: u64,
    pub node: NodeId,
    pub iters: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_inst: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

/// How walkers are placed before the first jump.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Placement {
    /// Uniformly random node per walker.
    Random,
    /// Walker `r` starts at a random node of clique `r mod cliques`.
    PerClique,
    Node { node: NodeId },
}

struct WalkerRngs {
    walk: SimRng,
    train: SimRng,
}

pub struct Swarm<'a> {
    world: World<'a>,
    cfg: SwarmConfig,
    run_id: String,
    pub state: SwarmState,
    /// Ids used to derive each walker's random streams.
    ids: Vec<usize>,
    homes: Vec<Option<usize>>,
    policies: Vec<Arc<TransitionPolicy>>,
    rngs: Vec<WalkerRngs>,
    swarm_rng: SimRng,
    t: u64,
    pub jump_log: Vec<JumpRecord>,
    pub event_log: Vec<SwarmEvent>,
}

impl<'a> Swarm<'a> {
    /// Builds a swarm whose walkers carry the given ids. Random streams are
    /// derived from `(seed, id)` so a walker behaves the same whether or not
    /// other walkers are present.
    pub fn new(
        world: World<'a>,
        cfg: SwarmConfig,
        base_policy: Arc<TransitionPolicy>,
        init: &ModelParams,
        ids: &[usize],
        placement: Placement,
        seed: u64,
        run_id: impl Into<String>,
    ) -> Result<Self> {
        if ids.is_empty() {
            return Err(Error::Config("a swarm needs at least one walker".into()));
        }
        if cfg.jumps == 0 {
            return Err(Error::Config("jump budget must be at least 1".into()));
        }
        if cfg.eval_every == 0 || cfg.perception_every == 0 {
            return Err(Error::Config("evaluation cadences must be positive".into()));
        }
        if let Some(r) = cfg.rendezvous {
            if r.every == 0 || r.node >= world.graph.node_count() {
                return Err(Error::Config("invalid rendezvous schedule".into()));
            }
        }
        cfg.memory.validate()?;
        let g = world.graph;
        let n_cliques = g.clique_count();
        if (cfg.confine || placement == Placement::PerClique) && n_cliques == 0 {
            return Err(Error::Config("clique placement or confinement needs a caveman graph".into()));
        }

        let mut walkers = Vec::with_capacity(ids.len());
        let mut homes = Vec::with_capacity(ids.len());
        let mut policies = Vec::with_capacity(ids.len());
        let mut rngs = Vec::with_capacity(ids.len());
        for &id in ids {
            let mut place_rng = derive_rng(seed, Stream::Placement, id as u64);
            let home = (n_cliques > 0).then(|| id % n_cliques);
            let start = match placement {
                Placement::Random => place_rng.random_range(0..g.node_count()),
                Placement::PerClique => {
                    let members = g.clique_members(home.unwrap_or(0));
                    members[place_rng.random_range(0..members.len())]
                }
                Placement::Node { node } if node < g.node_count() => node,
                Placement::Node { node } => {
                    return Err(Error::Config(format!("start node {node} not in graph")))
                }
            };
            let policy = if cfg.confine {
                Arc::new(clique_confined_policy(g, &base_policy, home.unwrap_or(0))?)
            } else {
                Arc::clone(&base_policy)
            };
            walkers.push(WalkerState::new(id, start, init.clone()));
            homes.push(if cfg.confine { home } else { None });
            policies.push(policy);
            rngs.push(WalkerRngs {
                walk: derive_rng(seed, Stream::Walk, id as u64),
                train: derive_rng(seed, Stream::Train, id as u64),
            });
        }

        let n = ids.len();
        Ok(Swarm {
            world,
            cfg,
            run_id: run_id.into(),
            state: SwarmState {
                walkers,
                since_collision: PairMatrix::new(n),
                cooldown: PairMatrix::new(n),
                pursuit: vec![None; n],
            },
            ids: ids.to_vec(),
            homes,
            policies,
            rngs,
            swarm_rng: derive_rng(seed, Stream::Swarm, 0),
            t: 0,
            jump_log: Vec::new(),
            event_log: Vec::new(),
        })
    }

    pub fn jumps_done(&self) -> u64 {
        self.t
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn run(&mut self) -> Result<()> {
        while self.t < self.cfg.jumps {
            self.tick()?;
        }
        Ok(())
    }

    pub fn tick(&mut self) -> Result<()> {
        self.t += 1;
        let t = self.t;
        if let Some(att) = self.cfg.attraction {
            self.tick_attraction(&att);
        }
        let n = self.state.walkers.len();
        let mut records = Vec::with_capacity(n);
        for r in 0..n {
            records.push(self.advance_walker(r)?);
        }

        self.state.since_collision.for_each_pair(|v| v + 1);
        self.state.cooldown.for_each_pair(|v| v.saturating_sub(1));

        if self.cfg.collisions && n > 1 {
            for group in self.colocated_groups() {
                let node = self.state.walkers[group[0]].position;
                self.collide(&group, EventKind::Collide, node)?;
            }
        }
        if let Some(rv) = self.cfg.rendezvous {
            if t % rv.every == 0 {
                self.rendezvous_tick(rv.node)?;
            }
        }
        if self.cfg.uplink {
            self.uplink_aggregate()?;
        }

        let evaluate_now = t % self.cfg.eval_every == 0 || t == self.cfg.jumps;
        let val = self.world.dataset.validation_view();
        for (r, mut rec) in records.into_iter().enumerate() {
            if evaluate_now {
                let e = self.state.walkers[r].evaluation(val)?;
                rec.loss = Some(e.loss);
                rec.acc = Some(e.accuracy);
            }
            self.jump_log.push(rec);
        }
        Ok(())
    }

    /// Draws attraction triggers for idle pairs in lexicographic order.
    pub fn tick_attraction(&mut self, att: &AttractionConfig) {
        let n = self.state.walkers.len();
        for a in 0..n {
            for b in a + 1..n {
                if self.state.pursuit[a].is_some()
                    || self.state.pursuit[b].is_some()
                    || self.state.cooldown.get(a, b) > 0
                {
                    continue;
                }
                let p = attraction_prob(self.state.since_collision.get(a, b), att);
                let u: f64 = self.swarm_rng.random();
                if u < p {
                    self.state.pursuit[a] = Some(b);
                    self.state.pursuit[b] = Some(a);
                    let node = self.state.walkers[a].position;
                    let ids = vec![self.state.walkers[a].id, self.state.walkers[b].id];
                    self.push_event(EventKind::PursuitStart, ids, node, Vec::new());
                }
            }
        }
    }

    fn next_position(&mut self, r: usize) -> Result<NodeId> {
        let g = self.world.graph;
        let here = self.state.walkers[r].position;
        if let Some(partner) = self.state.pursuit[r] {
            let there = self.state.walkers[partner].position;
            return if there == here { Ok(here) } else { next_hop_toward(g, here, there) };
        }
        if let Some(home) = self.homes[r] {
            let clique_of = g.clique_of().unwrap_or(&[]);
            if clique_of[here] != home {
                return next_hop_toward_set(g, here, &g.clique_members(home));
            }
        }
        let u: f64 = self.rngs[r].walk.random();
        Ok(self.policies[r].row(here).sample(u))
    }

    fn advance_walker(&mut self, r: usize) -> Result<JumpRecord> {
        let next = self.next_position(r)?;
        let t = self.t;
        let world = &self.world;
        let walker = &mut self.state.walkers[r];
        walker.move_to(next);

        let iters = match self.cfg.budget {
            VisitBudget::Fixed { iters } => iters,
            VisitBudget::Elastic => {
                let q = world.partition.quality[next];
                elastic_iterations(data_quality_q(q.d, q.l, self.cfg.elastic.tau2), &self.cfg.elastic)
            }
        };
        let data = world.partition.node_view(world.dataset, next);
        let outcome = walker.visit(data, iters, &self.cfg.train, &mut self.rngs[r].train)?;

        let beta = self.cfg.memory.beta_at(t);
        if let Some(b) = beta {
            walker.memory_merge(b);
        }

        if let Some(params) = &self.cfg.perception {
            if (t - 1) % self.cfg.perception_every == 0 {
                let policy = walker.perception_refresh(
                    world.dataset.validation_view(),
                    params,
                    &world.partition.quality,
                    world.centrality,
                    world.graph,
                )?;
                self.policies[r] = Arc::new(match self.homes[r] {
                    Some(h) => clique_confined_policy(world.graph, &policy, h)?,
                    None => policy,
                });
            }
        }

        Ok(JumpRecord {
            run_id: self.run_id.clone(),
            walker_id: walker.id,
            t,
            node: next,
            iters: outcome.iters,
            loss: None,
            acc: None,
            alpha_inst: walker.alpha_inst,
            beta,
        })
    }

    /// Groups of two or more walkers sharing a node, ordered by node id.
    fn colocated_groups(&self) -> Vec<Vec<usize>> {
        let mut order: Vec<usize> = (0..self.state.walkers.len()).collect();
        order.sort_by_key(|&r| (self.state.walkers[r].position, r));
        let mut groups = Vec::new();
        let mut i = 0;
        while i < order.len() {
            let node = self.state.walkers[order[i]].position;
            let mut j = i + 1;
            while j < order.len() && self.state.walkers[order[j]].position == node {
                j += 1;
            }
            if j - i > 1 {
                groups.push(order[i..j].to_vec());
            }
            i = j;
        }
        groups
    }

    /// Replaces the models of `group` (walker indices, ascending) by their
    /// average weighted by samples seen since the last aggregation plus one.
    pub fn collide(&mut self, group: &[usize], kind: EventKind, node: NodeId) -> Result<()> {
        if group.len() < 2 {
            return Ok(());
        }
        let weights: Vec<f64> = group
            .iter()
            .map(|&r| self.state.walkers[r].samples_since_agg as f64 + 1.0)
            .collect();
        let models: Vec<&ModelParams> = group.iter().map(|&r| &self.state.walkers[r].im).collect();
        let merged = weighted_average(&models, &weights)?;
        for &r in group {
            let w = &mut self.state.walkers[r];
            w.im.theta.copy_from_slice(&merged.theta);
            if self.cfg.memory.enabled {
                w.sm.theta.copy_from_slice(&merged.theta);
            }
            w.samples_since_agg = 0;
            w.fresh_eval = None;
        }
        let cooldown = self.cfg.attraction.map_or(0, |a| a.cooldown_max);
        for (i, &a) in group.iter().enumerate() {
            for &b in &group[i + 1..] {
                self.state.since_collision.set(a, b, 0);
                self.state.cooldown.set(a, b, cooldown);
            }
        }
        let ids = group.iter().map(|&r| self.state.walkers[r].id).collect();
        self.push_event(kind, ids, node, weights);

        for &a in group {
            if let Some(b) = self.state.pursuit[a] {
                if group.contains(&b) && a < b {
                    self.state.pursuit[a] = None;
                    self.state.pursuit[b] = None;
                    let ids = vec![self.state.walkers[a].id, self.state.walkers[b].id];
                    self.push_event(EventKind::PursuitEnd, ids, node, Vec::new());
                }
            }
        }
        Ok(())
    }

    /// Moves every walker to `node` and averages all models there.
    pub fn rendezvous_tick(&mut self, node: NodeId) -> Result<()> {
        for w in &mut self.state.walkers {
            w.position = node;
        }
        let all: Vec<usize> = (0..self.state.walkers.len()).collect();
        self.collide(&all, EventKind::Rendezvous, node)
    }

    /// Central aggregation of all walkers without moving them.
    pub fn uplink_aggregate(&mut self) -> Result<()> {
        let all: Vec<usize> = (0..self.state.walkers.len()).collect();
        let node = self.state.walkers[0].position;
        self.collide(&all, EventKind::Collide, node)
    }

    fn push_event(&mut self, kind: EventKind, walkers: Vec<usize>, node: NodeId, weights: Vec<f64>) {
        self.event_log.push(SwarmEvent {
            run_id: self.run_id.clone(),
            t: self.t,
            kind,
            walkers,
            node,
            weights,
        });
    }
}
