//! A single walker: where it is, what it knows, and how it updates.
//!
//! Each visit runs in a fixed order: train the instantaneous model on the
//! node's data, merge it with the stale model (when memory is enabled), then
//! refresh the perception-aware policy (when dynamic importance is on).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::datahub::{DataView, NodeQuality};
use crate::error::{Error, Result};
use crate::learner::{evaluate, sgd_steps, Evaluation, ModelParams, TrainConfig};
use crate::policy::{
    build_importance_vector, build_transition, dynamic_alpha, ImportanceParams, PolicyKind,
    TransitionPolicy,
};
use crate::topology::{Centrality, Graph, NodeId};

#[derive(Debug, Clone, PartialEq)]
pub struct WalkerState {
    pub id: usize,
    pub position: NodeId,
    /// Instantaneous model, the one that trains.
    pub im: ModelParams,
    /// Stale model, only read by [`WalkerState::memory_merge`].
    pub sm: ModelParams,
    pub jumps: u64,
    pub samples_since_agg: u64,
    pub samples_total: u64,
    pub sgd_total: u64,
    pub cached_accuracy: f64,
    pub alpha_inst: Option<f64>,
    /// Latest validation result for the current `im`, if still valid.
    pub fresh_eval: Option<Evaluation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VisitOutcome {
    /// SGD steps actually run (0 when the node holds no data).
    pub iters: usize,
}

impl WalkerState {
    pub fn new(id: usize, position: NodeId, model: ModelParams) -> Self {
        WalkerState {
            id,
            position,
            sm: model.clone(),
            im: model,
            jumps: 0,
            samples_since_agg: 0,
            samples_total: 0,
            sgd_total: 0,
            cached_accuracy: 0.0,
            alpha_inst: None,
            fresh_eval: None,
        }
    }

    /// Draws the next node from the policy row of the current position.
    pub fn step<R: Rng>(&mut self, policy: &TransitionPolicy, rng: &mut R) -> NodeId {
        let u: f64 = rng.random();
        let next = policy.row(self.position).sample(u);
        self.move_to(next);
        next
    }

    /// Moves without consulting a policy (pursuit, homing, rendezvous).
    pub fn move_to(&mut self, node: NodeId) {
        self.position = node;
        self.jumps += 1;
    }

    pub fn visit<R: Rng>(
        &mut self,
        node_data: DataView<'_>,
        iters: usize,
        cfg: &TrainConfig,
        rng: &mut R,
    ) -> Result<VisitOutcome> {
        match sgd_steps(&self.im, node_data, iters, cfg, rng) {
            Ok(m) => {
                self.im = m;
                self.fresh_eval = None;
                let seen = (iters * cfg.batch_size) as u64;
                self.samples_since_agg += seen;
                self.samples_total += seen;
                self.sgd_total += iters as u64;
                Ok(VisitOutcome { iters })
            }
            Err(Error::EmptyData) => {
                log::debug!("walker {}: node {} holds no data, skipping", self.id, self.position);
                Ok(VisitOutcome { iters: 0 })
            }
            Err(e) => Err(e),
        }
    }

    /// `im <- (1 - beta) im + beta sm`, then `sm <- im`.
    pub fn memory_merge(&mut self, beta: f64) {
        if beta != 0.0 {
            for (i, s) in self.im.theta.iter_mut().zip(&self.sm.theta) {
                *i = (1.0 - beta) * *i + beta * s;
            }
            self.fresh_eval = None;
        }
        self.sm.theta.copy_from_slice(&self.im.theta);
    }

    /// Measures accuracy on `val`, then rebuilds the importance policy with
    /// the accuracy-dependent alpha.
    pub fn perception_refresh(
        &mut self,
        val: DataView<'_>,
        params: &ImportanceParams,
        quality: &[NodeQuality],
        centrality: &Centrality,
        g: &Graph,
    ) -> Result<TransitionPolicy> {
        let eval = match self.fresh_eval {
            Some(e) => e,
            None => evaluate(&self.im, val)?,
        };
        self.fresh_eval = Some(eval);
        self.perception_from_accuracy(eval.accuracy, params, quality, centrality, g)
    }

    /// The policy half of [`WalkerState::perception_refresh`] for a given
    /// accuracy.
    pub fn perception_from_accuracy(
        &mut self,
        accuracy: f64,
        params: &ImportanceParams,
        quality: &[NodeQuality],
        centrality: &Centrality,
        g: &Graph,
    ) -> Result<TransitionPolicy> {
        self.cached_accuracy = accuracy;
        let alpha = dynamic_alpha(accuracy, params);
        self.alpha_inst = Some(alpha);
        let importance = build_importance_vector(quality, centrality, alpha, params.normalize_terms);
        let mut policy = build_transition(g, &importance)?;
        policy.kind = PolicyKind::ImportanceDynamic;
        Ok(policy)
    }

    pub fn evaluation(&mut self, val: DataView<'_>) -> Result<Evaluation> {
        if let Some(e) = self.fresh_eval {
            return Ok(e);
        }
        let e = evaluate(&self.im, val)?;
        self.fresh_eval = Some(e);
        Ok(e)
    }
}

/// Staged schedule for the memory weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryConfig {
    pub enabled: bool,
    /// `(first_jump, beta)` stages, thresholds strictly increasing.
    pub schedule: Vec<(u64, f64)>,
}

impl MemoryConfig {
    pub fn disabled() -> Self {
        MemoryConfig {
            enabled: false,
            schedule: Vec::new(),
        }
    }

    /// Three equal stages over `jumps`: memory off, then 0.2, then 0.4.
    pub fn staged(jumps: u64) -> Self {
        MemoryConfig {
            enabled: true,
            schedule: vec![(0, 0.0), (jumps / 3, 0.2), (2 * jumps / 3, 0.4)],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schedule.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::Config("memory thresholds must be strictly increasing".into()));
        }
        if self.schedule.iter().any(|&(_, b)| !(0.0..=1.0).contains(&b)) {
            return Err(Error::Config("memory betas must lie in [0,1]".into()));
        }
        Ok(())
    }

    /// Beta in force at jump `t`, or `None` when memory is off.
    pub fn beta_at(&self, t: u64) -> Option<f64> {
        if !self.enabled {
            return None;
        }
        Some(
            self.schedule
                .iter()
                .take_while(|&&(start, _)| start <= t)
                .last()
                .map_or(0.0, |&(_, b)| b),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datahub::gen_synthetic;
    use crate::learner::{init_model, Arch};
    use crate::policy::{uniform_transition, Row};
    use crate::rng::rng_from_seed;

    fn scalar(x: f64) -> ModelParams {
        ModelParams {
            arch: Arch::Softmax,
            n_dims: 0,
            n_classes: 1,
            theta: vec![x],
        }
    }

    #[test]
    fn merge_boundaries() {
        let mut w = WalkerState::new(0, 0, scalar(1.0));
        w.sm = scalar(3.0);
        w.memory_merge(0.0);
        assert_eq!((w.im.theta[0], w.sm.theta[0]), (1.0, 1.0));

        w.sm = scalar(3.0);
        w.memory_merge(1.0);
        assert_eq!((w.im.theta[0], w.sm.theta[0]), (3.0, 3.0));

        w.im = scalar(1.0);
        w.sm = scalar(3.0);
        w.memory_merge(0.5);
        assert_eq!((w.im.theta[0], w.sm.theta[0]), (2.0, 2.0));
    }

    #[test]
    fn step_follows_row() {
        let policy = TransitionPolicy {
            kind: PolicyKind::Uniform,
            rows: vec![
                Row {
                    targets: vec![1, 2],
                    probs: vec![0.0, 1.0],
                },
                Row {
                    targets: vec![0],
                    probs: vec![1.0],
                },
                Row {
                    targets: vec![0],
                    probs: vec![1.0],
                },
            ],
        };
        let mut w = WalkerState::new(0, 0, scalar(0.0));
        assert_eq!(w.step(&policy, &mut rng_from_seed(1)), 2);
        assert_eq!(w.jumps, 1);
    }

    #[test]
    fn empty_node_is_skipped() {
        let ds = gen_synthetic(3, 2, 10, 0.2, 2.0, 0).unwrap();
        let mut w = WalkerState::new(0, 0, init_model(Arch::Softmax, 2, 3, 0));
        let before = w.clone();
        let out = w
            .visit(ds.view(&[]), 5, &TrainConfig::default(), &mut rng_from_seed(0))
            .unwrap();
        assert_eq!(out.iters, 0);
        assert_eq!(w, before);
    }

    #[test]
    fn visit_counts_batches() {
        let ds = gen_synthetic(3, 2, 10, 0.2, 2.0, 0).unwrap();
        let mut w = WalkerState::new(0, 0, init_model(Arch::Softmax, 2, 3, 0));
        let cfg = TrainConfig::default();
        w.visit(ds.train_view(), 5, &cfg, &mut rng_from_seed(0)).unwrap();
        assert_eq!(w.samples_since_agg, 5 * 32);
        assert_eq!(w.sgd_total, 5);
    }

    #[test]
    fn zero_lr_visit_keeps_model() {
        let ds = gen_synthetic(3, 2, 10, 0.2, 2.0, 0).unwrap();
        let m = init_model(Arch::Softmax, 2, 3, 0);
        let mut w = WalkerState::new(0, 0, m.clone());
        let cfg = TrainConfig {
            learning_rate: 0.0,
            ..TrainConfig::default()
        };
        for iters in [1, 7, 40] {
            w.visit(ds.train_view(), iters, &cfg, &mut rng_from_seed(iters as u64)).unwrap();
            assert_eq!(w.im, m);
        }
    }

    #[test]
    fn schedule_lookup() {
        let m = MemoryConfig::staged(300);
        assert_eq!(m.beta_at(0), Some(0.0));
        assert_eq!(m.beta_at(99), Some(0.0));
        assert_eq!(m.beta_at(100), Some(0.2));
        assert_eq!(m.beta_at(250), Some(0.4));
        assert_eq!(MemoryConfig::disabled().beta_at(5), None);
        assert!(m.validate().is_ok());
        let bad = MemoryConfig {
            enabled: true,
            schedule: vec![(5, 0.1), (5, 0.2)],
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn uniform_step_frequencies() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let p = uniform_transition(&g);
        let mut w = WalkerState::new(0, 0, scalar(0.0));
        let mut rng = rng_from_seed(42);
        let mut counts = [0usize; 3];
        let steps = 100_000;
        for _ in 0..steps {
            counts[w.step(&p, &mut rng)] += 1;
        }
        for c in counts {
            assert!((c as f64 / steps as f64 - 1.0 / 3.0).abs() < 0.01);
        }
    }
}
