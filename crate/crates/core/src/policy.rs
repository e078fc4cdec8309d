//! Where a walker goes next and how long it trains there.
//!
//! Node importance mixes data quality `d * l` with spatial quality (normalized
//! betweenness) through a weight `alpha`. Transition rows are proportional to
//! the importance of the neighbors. Uniform and Metropolis-Hastings rows are
//! provided as topology-only baselines.

use serde::{Deserialize, Serialize};

use crate::datahub::NodeQuality;
use crate::error::{Error, Result};
use crate::topology::{normalize_by_max, Centrality, Graph, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImportanceParams {
    pub alpha: f64,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub acc_min: f64,
    pub acc_max: f64,
    pub normalize_terms: bool,
}

impl Default for ImportanceParams {
    fn default() -> Self {
        ImportanceParams {
            alpha: 0.5,
            alpha_min: 0.10,
            alpha_max: 0.85,
            acc_min: 0.1,
            acc_max: 0.8,
            normalize_terms: true,
        }
    }
}

impl ImportanceParams {
    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !unit(self.alpha) || !unit(self.alpha_min) || !unit(self.alpha_max) {
            return Err(Error::Config("alpha values must lie in [0,1]".into()));
        }
        if self.alpha_min > self.alpha_max {
            return Err(Error::Config("alpha_min exceeds alpha_max".into()));
        }
        if self.acc_min >= self.acc_max {
            return Err(Error::Config("acc_min must be below acc_max".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElasticParams {
    pub x_max: usize,
    pub tau1: f64,
    pub tau2: f64,
}

impl Default for ElasticParams {
    fn default() -> Self {
        ElasticParams {
            x_max: 20,
            tau1: 10.0,
            tau2: 0.4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Uniform,
    Mh,
    ImportanceStatic,
    ImportanceDynamic,
}

/// Outgoing probabilities of one node, targets in ascending id order.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub targets: Vec<NodeId>,
    pub probs: Vec<f64>,
}

impl Row {
    /// Inverse-CDF lookup for a uniform draw `u` in `[0, 1)`.
    pub fn sample(&self, u: f64) -> NodeId {
        let mut cum = 0.0;
        for (&t, &p) in self.targets.iter().zip(&self.probs) {
            cum += p;
            if u < cum {
                return t;
            }
        }
        // rounding left u above the final cumulative sum
        self.targets
            .iter()
            .zip(&self.probs)
            .rev()
            .find(|(_, &p)| p > 0.0)
            .map(|(&t, _)| t)
            .unwrap_or(self.targets[self.targets.len() - 1])
    }

    pub fn prob_of(&self, node: NodeId) -> f64 {
        self.targets
            .binary_search(&node)
            .map_or(0.0, |i| self.probs[i])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionPolicy {
    pub kind: PolicyKind,
    pub rows: Vec<Row>,
}

impl TransitionPolicy {
    pub fn row(&self, node: NodeId) -> &Row {
        &self.rows[node]
    }

    /// Dense row-stochastic matrix, mainly for checks on small graphs.
    pub fn dense(&self) -> Vec<Vec<f64>> {
        let n = self.rows.len();
        self.rows
            .iter()
            .map(|r| {
                let mut v = vec![0.0; n];
                for (&t, &p) in r.targets.iter().zip(&r.probs) {
                    v[t] += p;
                }
                v
            })
            .collect()
    }
}

/// `alpha * d * l + (1 - alpha) * c` for a single node.
pub fn static_importance(d: f64, l: f64, c: f64, alpha: f64) -> f64 {
    alpha * d * l + (1.0 - alpha) * c
}

/// Importance for every node. With `normalize_terms` both `d * l` and the
/// centrality are divided by their maximum over the nodes first.
pub fn build_importance_vector(
    quality: &[NodeQuality],
    centrality: &Centrality,
    alpha: f64,
    normalize_terms: bool,
) -> Vec<f64> {
    let data: Vec<f64> = quality.iter().map(|q| q.d * q.l).collect();
    let (data, spatial) = if normalize_terms {
        (normalize_by_max(&data), normalize_by_max(&centrality.normalized))
    } else {
        (data, centrality.normalized.clone())
    };
    data.iter()
        .zip(&spatial)
        .map(|(&dl, &c)| static_importance(dl, 1.0, c, alpha))
        .collect()
}

/// Linear map of accuracy from `[acc_min, acc_max]` onto
/// `[alpha_min, alpha_max]`, clamped at both ends.
pub fn dynamic_alpha(acc: f64, p: &ImportanceParams) -> f64 {
    let raw = p.alpha_min + (acc - p.acc_min) * (p.alpha_max - p.alpha_min) / (p.acc_max - p.acc_min);
    raw.clamp(p.alpha_min, p.alpha_max)
}

fn uniform_row(g: &Graph, i: NodeId) -> Row {
    let nbrs = g.neighbors(i);
    Row {
        targets: nbrs.to_vec(),
        probs: vec![1.0 / nbrs.len() as f64; nbrs.len()],
    }
}

/// Rows proportional to neighbor importance; a zero-mass neighborhood
/// falls back to a uniform row.
pub fn build_transition(g: &Graph, importance: &[f64]) -> Result<TransitionPolicy> {
    if importance.len() != g.node_count() {
        return Err(Error::Shape(format!(
            "{} importance values for {} nodes",
            importance.len(),
            g.node_count()
        )));
    }
    if importance.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::Config("importance values must be finite and non-negative".into()));
    }
    let mut rows = Vec::with_capacity(g.node_count());
    for i in 0..g.node_count() {
        let nbrs = g.neighbors(i);
        if nbrs.is_empty() {
            return Err(Error::Config(format!("node {i} has no neighbors")));
        }
        let mass: f64 = nbrs.iter().map(|&j| importance[j]).sum();
        if mass > 0.0 {
            rows.push(Row {
                targets: nbrs.to_vec(),
                probs: nbrs.iter().map(|&j| importance[j] / mass).collect(),
            });
        } else {
            log::debug!("node {i}: neighbors carry no importance, using a uniform row");
            rows.push(uniform_row(g, i));
        }
    }
    Ok(TransitionPolicy {
        kind: PolicyKind::ImportanceStatic,
        rows,
    })
}

pub fn uniform_transition(g: &Graph) -> TransitionPolicy {
    TransitionPolicy {
        kind: PolicyKind::Uniform,
        rows: (0..g.node_count()).map(|i| uniform_row(g, i)).collect(),
    }
}

/// Metropolis-Hastings walk targeting the uniform distribution: move to
/// neighbor `j` with `min(1/deg i, 1/deg j)`, stay with the remainder.
pub fn mh_transition(g: &Graph) -> TransitionPolicy {
    let rows = (0..g.node_count())
        .map(|i| {
            let di = g.degree(i) as f64;
            let mut targets = Vec::with_capacity(g.degree(i) + 1);
            let mut probs = Vec::with_capacity(g.degree(i) + 1);
            let mut moved = 0.0;
            let mut self_slot = None;
            for &j in g.neighbors(i) {
                if self_slot.is_none() && j > i {
                    self_slot = Some(targets.len());
                    targets.push(i);
                    probs.push(0.0);
                }
                let p = (1.0 / di).min(1.0 / g.degree(j) as f64);
                moved += p;
                targets.push(j);
                probs.push(p);
            }
            let slot = self_slot.unwrap_or_else(|| {
                targets.push(i);
                probs.push(0.0);
                targets.len() - 1
            });
            probs[slot] = (1.0 - moved).max(0.0);
            Row { targets, probs }
        })
        .collect();
    TransitionPolicy {
        kind: PolicyKind::Mh,
        rows,
    }
}

/// Data quality `l * d^(tau2 (1 - d))`, with `0^0 = 1`.
pub fn data_quality_q(d: f64, l: f64, tau2: f64) -> f64 {
    let exponent = tau2 * (1.0 - d);
    if exponent == 0.0 {
        l
    } else {
        l * d.powf(exponent)
    }
}

/// `x_max / (1 + exp(-tau1 Q))`, rounded half-up and clamped to `[1, x_max]`.
pub fn elastic_iterations(q: f64, p: &ElasticParams) -> usize {
    let x = p.x_max as f64 / (1.0 + (-p.tau1 * q).exp());
    ((x + 0.5).floor() as usize).clamp(1, p.x_max.max(1))
}

/// Restricts a policy to the walker's home clique: out-of-clique mass is
/// dropped and each row renormalized over in-clique targets. Rows of nodes
/// outside the clique are left as they are; callers steer such walkers home.
pub fn clique_confined_policy(
    g: &Graph,
    base: &TransitionPolicy,
    home: usize,
) -> Result<TransitionPolicy> {
    let clique_of = g
        .clique_of()
        .ok_or_else(|| Error::Config("clique confinement needs a caveman graph".into()))?;
    if g.clique_count() <= 1 {
        return Ok(base.clone());
    }
    let mut rows = base.rows.clone();
    for (i, row) in rows.iter_mut().enumerate() {
        if clique_of[i] != home {
            continue;
        }
        let keep: Vec<(NodeId, f64)> = row
            .targets
            .iter()
            .zip(&row.probs)
            .filter(|(&t, _)| clique_of[t] == home)
            .map(|(&t, &p)| (t, p))
            .collect();
        if keep.iter().all(|&(t, _)| t == i) {
            return Err(Error::Config(format!(
                "node {i} has no neighbor inside clique {home}"
            )));
        }
        let mass: f64 = keep.iter().map(|&(_, p)| p).sum();
        *row = if mass > 0.0 {
            Row {
                targets: keep.iter().map(|&(t, _)| t).collect(),
                probs: keep.iter().map(|&(_, p)| p / mass).collect(),
            }
        } else {
            let targets: Vec<NodeId> = keep.iter().map(|&(t, _)| t).filter(|&t| t != i).collect();
            let p = 1.0 / targets.len() as f64;
            Row {
                probs: vec![p; targets.len()],
                targets,
            }
        };
    }
    Ok(TransitionPolicy {
        kind: base.kind,
        rows,
    })
}
