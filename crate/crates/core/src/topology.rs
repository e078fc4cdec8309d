//! Network graphs the walkers move on.
//!
//! Two generators are provided: the connected caveman graph (a ring of
//! cliques, each clique sending one rewired edge to its predecessor) and the
//! random geometric graph on the unit square. Both always return connected,
//! undirected graphs without self-edges whose neighbor lists are sorted.

use std::collections::VecDeque;
use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

pub type NodeId = usize;

const UNREACHABLE: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    adjacency: Vec<Vec<NodeId>>,
    positions: Option<Vec<[f64; 2]>>,
    clique_of: Option<Vec<usize>>,
}

impl Graph {
    /// Builds a graph from an undirected edge list and checks every
    /// structural invariant (no self-edges, no duplicates, connected).
    pub fn from_edges(n: usize, edges: &[(NodeId, NodeId)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("graph needs at least one node".into()));
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::Config(format!("edge ({a},{b}) out of range for {n} nodes")));
            }
            if a == b {
                return Err(Error::Config(format!("self-edge at node {a}")));
            }
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for (i, row) in adjacency.iter_mut().enumerate() {
            row.sort_unstable();
            let len = row.len();
            row.dedup();
            if row.len() != len {
                return Err(Error::Config(format!("duplicate edge at node {i}")));
            }
        }
        let g = Graph {
            adjacency,
            positions: None,
            clique_of: None,
        };
        if !g.is_connected() {
            return Err(Error::Config("graph is not connected".into()));
        }
        Ok(g)
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbors(&self, i: NodeId) -> &[NodeId] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: NodeId) -> usize {
        self.adjacency[i].len()
    }

    pub fn has_edge(&self, a: NodeId, b: NodeId) -> bool {
        self.adjacency[a].binary_search(&b).is_ok()
    }

    /// Every edge once, as `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
            .collect()
    }

    pub fn positions(&self) -> Option<&[[f64; 2]]> {
        self.positions.as_deref()
    }

    pub fn clique_of(&self) -> Option<&[usize]> {
        self.clique_of.as_deref()
    }

    pub fn clique_count(&self) -> usize {
        self.clique_of
            .as_ref()
            .map_or(0, |c| c.iter().max().map_or(0, |m| m + 1))
    }

    pub fn clique_members(&self, clique: usize) -> Vec<NodeId> {
        match &self.clique_of {
            Some(c) => (0..c.len()).filter(|&i| c[i] == clique).collect(),
            None => Vec::new(),
        }
    }

    pub fn is_connected(&self) -> bool {
        self.bfs_distances(0).iter().all(|&d| d != UNREACHABLE)
    }

    /// Hop distances from `source`; `u32::MAX` marks unreachable nodes.
    pub fn bfs_distances(&self, source: NodeId) -> Vec<u32> {
        self.multi_source_distances(&[source])
    }

    /// Hop distance from each node to the nearest member of `sources`.
    pub fn multi_source_distances(&self, sources: &[NodeId]) -> Vec<u32> {
        let mut dist = vec![UNREACHABLE; self.node_count()];
        let mut queue = VecDeque::new();
        for &s in sources {
            if dist[s] == UNREACHABLE {
                dist[s] = 0;
                queue.push_back(s);
            }
        }
        while let Some(v) = queue.pop_front() {
            for &w in &self.adjacency[v] {
                if dist[w] == UNREACHABLE {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    pub fn diameter(&self) -> u32 {
        (0..self.node_count())
            .map(|s| self.bfs_distances(s).into_iter().max().unwrap_or(0))
            .max()
            .unwrap_or(0)
    }

    pub fn to_json(&self) -> GraphJson {
        GraphJson {
            n: self.node_count(),
            edges: self.edges().into_iter().map(|(a, b)| [a, b]).collect(),
            positions: self.positions.clone(),
            cliques: self.clique_of.clone(),
        }
    }

    pub fn from_json(json: &GraphJson) -> Result<Self> {
        let edges: Vec<_> = json.edges.iter().map(|e| (e[0], e[1])).collect();
        let mut g = Graph::from_edges(json.n, &edges)?;
        if let Some(p) = &json.positions {
            if p.len() != json.n {
                return Err(Error::Config("positions length differs from n".into()));
            }
            g.positions = Some(p.clone());
        }
        if let Some(c) = &json.cliques {
            if c.len() != json.n {
                return Err(Error::Config("cliques length differs from n".into()));
            }
            g.clique_of = Some(c.clone());
        }
        Ok(g)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(&self.to_json())?;
        fs::write(path, text).map_err(|e| Error::file(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        Graph::from_json(&serde_json::from_str(&text)?)
    }
}

/// On-disk form. Edges are listed once with `i < j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphJson {
    pub n: usize,
    pub edges: Vec<[NodeId; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cliques: Option<Vec<usize>>,
}

/// Clique sizes for `n_nodes` split into `n_cliques` groups that differ by at
/// most one; the larger cliques come first.
pub fn clique_sizes(n_cliques: usize, n_nodes: usize) -> Vec<usize> {
    let base = n_nodes / n_cliques;
    let extra = n_nodes % n_cliques;
    (0..n_cliques).map(|c| base + usize::from(c < extra)).collect()
}

/// Connected caveman graph.
///
/// Nodes are numbered clique by clique. In every clique `c` the edge between
/// its first and second node is removed and the first node is linked to the
/// last node of clique `c - 1` (cyclically), which closes the cliques into a
/// ring. Two-node cliques keep their internal edge so the ring stays
/// connected. A single clique is returned as a complete graph.
///
/// The construction has no random element; `seed` is accepted so every
/// generator shares one signature.
pub fn gen_connected_caveman(n_cliques: usize, n_nodes: usize, _seed: u64) -> Result<Graph> {
    if n_cliques == 0 || n_nodes < 2 * n_cliques {
        return Err(Error::Config(format!(
            "caveman graph needs at least 2 nodes per clique (got {n_nodes} nodes, {n_cliques} cliques)"
        )));
    }
    let sizes = clique_sizes(n_cliques, n_nodes);
    let mut starts = Vec::with_capacity(n_cliques);
    let mut clique_of = Vec::with_capacity(n_nodes);
    let mut next = 0;
    for (c, &size) in sizes.iter().enumerate() {
        starts.push(next);
        clique_of.extend(std::iter::repeat_n(c, size));
        next += size;
    }

    let mut edges = Vec::new();
    for (c, &size) in sizes.iter().enumerate() {
        let s = starts[c];
        for a in s..s + size {
            for b in a + 1..s + size {
                let rewired = n_cliques > 1 && size > 2 && a == s && b == s + 1;
                if !rewired {
                    edges.push((a, b));
                }
            }
        }
    }
    if n_cliques > 1 {
        for c in 0..n_cliques {
            let prev = (c + n_cliques - 1) % n_cliques;
            let prev_last = starts[prev] + sizes[prev] - 1;
            edges.push((starts[c], prev_last));
        }
    }

    let mut g = Graph::from_edges(n_nodes, &edges)?;
    g.clique_of = Some(clique_of);
    Ok(g)
}

/// Radius giving an expected degree of about six away from the border.
pub fn default_rgg_radius(n_nodes: usize) -> f64 {
    (6.0 / (std::f64::consts::PI * n_nodes as f64)).sqrt()
}

/// Random geometric graph on the unit square, resampled until connected.
pub fn gen_rgg(n_nodes: usize, radius: f64, seed: u64, max_retries: usize) -> Result<Graph> {
    if n_nodes < 2 {
        return Err(Error::Config("random geometric graph needs at least 2 nodes".into()));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Config(format!("radius {radius} must be positive and finite")));
    }
    if max_retries == 0 {
        return Err(Error::Config("max_retries must be positive".into()));
    }
    let mut rng = rng_from_seed(seed);
    let r2 = radius * radius;
    for _ in 0..max_retries {
        let positions: Vec<[f64; 2]> = (0..n_nodes)
            .map(|_| [rng.random::<f64>(), rng.random::<f64>()])
            .collect();
        let mut edges = Vec::new();
        for i in 0..n_nodes {
            for j in i + 1..n_nodes {
                let dx = positions[i][0] - positions[j][0];
                let dy = positions[i][1] - positions[j][1];
                if dx * dx + dy * dy <= r2 {
                    edges.push((i, j));
                }
            }
        }
        if let Ok(mut g) = Graph::from_edges(n_nodes, &edges) {
            g.positions = Some(positions);
            return Ok(g);
        }
    }
    Err(Error::Generation(format!(
        "no connected random geometric graph with radius {radius} after {max_retries} samples"
    )))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Centrality {
    pub raw: Vec<f64>,
    /// `raw` divided by its maximum; all zeros stay zeros.
    pub normalized: Vec<f64>,
}

/// Betweenness centrality over unordered node pairs (Brandes accumulation).
pub fn betweenness(g: &Graph) -> Centrality {
    let n = g.node_count();
    let mut raw = vec![0.0; n];
    let mut stack = Vec::with_capacity(n);
    let mut preds: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    let mut sigma = vec![0.0f64; n];
    let mut dist = vec![-1i64; n];
    let mut delta = vec![0.0f64; n];
    let mut queue = VecDeque::with_capacity(n);

    for s in 0..n {
        stack.clear();
        preds.iter_mut().for_each(Vec::clear);
        sigma.fill(0.0);
        dist.fill(-1);
        delta.fill(0.0);
        sigma[s] = 1.0;
        dist[s] = 0;
        queue.push_back(s);

        while let Some(v) = queue.pop_front() {
            stack.push(v);
            for &w in g.neighbors(v) {
                if dist[w] < 0 {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    preds[w].push(v);
                }
            }
        }
        while let Some(w) = stack.pop() {
            for &v in &preds[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                raw[w] += delta[w];
            }
        }
    }
    // each unordered pair was counted from both endpoints
    raw.iter_mut().for_each(|x| *x /= 2.0);
    let normalized = normalize_by_max(&raw);
    Centrality { raw, normalized }
}

pub(crate) fn normalize_by_max(values: &[f64]) -> Vec<f64> {
    let max = values.iter().copied().fold(0.0f64, f64::max);
    if max > 0.0 {
        values.iter().map(|v| v / max).collect()
    } else {
        vec![0.0; values.len()]
    }
}

/// The neighbor of `from` that lies on a shortest path to `to`, lowest id
/// first among ties.
pub fn next_hop_toward(g: &Graph, from: NodeId, to: NodeId) -> Result<NodeId> {
    if from == to {
        return Err(Error::Internal(format!("next hop requested from node {from} to itself")));
    }
    next_hop_toward_set(g, from, &[to])
}

/// Like [`next_hop_toward`] but toward the nearest member of `targets`.
pub fn next_hop_toward_set(g: &Graph, from: NodeId, targets: &[NodeId]) -> Result<NodeId> {
    let dist = g.multi_source_distances(targets);
    let here = dist[from];
    if here == UNREACHABLE {
        return Err(Error::Internal(format!("node {from} cannot reach its target")));
    }
    if here == 0 {
        return Err(Error::Internal(format!("node {from} is already a target")));
    }
    g.neighbors(from)
        .iter()
        .copied()
        .find(|&w| dist[w] + 1 == here)
        .ok_or_else(|| Error::Internal("shortest-path predecessor missing".into()))
}
