//! Synthetic classification data and its distribution over graph nodes.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::topology::Graph;

/// Gaussian-mixture dataset with a fixed train/validation split.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub n_dims: usize,
    pub n_classes: usize,
    /// Row-major `n_samples x n_dims`.
    pub features: Vec<f64>,
    pub labels: Vec<usize>,
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

impl Dataset {
    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_dims..(i + 1) * self.n_dims]
    }

    pub fn view<'a>(&'a self, indices: &'a [usize]) -> DataView<'a> {
        DataView { data: self, indices }
    }

    pub fn validation_view(&self) -> DataView<'_> {
        self.view(&self.validation)
    }

    pub fn train_view(&self) -> DataView<'_> {
        self.view(&self.train)
    }

    /// Writes `<stem>.json` (shape, labels, split) and `<stem>.bin`
    /// (features as little-endian f32, row-major).
    pub fn save(&self, dir: &Path, stem: &str) -> Result<()> {
        let header = DatasetHeader {
            n_samples: self.n_samples(),
            n_dims: self.n_dims,
            n_classes: self.n_classes,
            features_file: format!("{stem}.bin"),
            labels: self.labels.clone(),
            train: self.train.clone(),
            validation: self.validation.clone(),
        };
        let json_path = dir.join(format!("{stem}.json"));
        fs::write(&json_path, serde_json::to_string(&header)?)
            .map_err(|e| Error::file(&json_path, e))?;
        let bin_path = dir.join(&header.features_file);
        let mut bytes = Vec::with_capacity(self.features.len() * 4);
        for &x in &self.features {
            bytes.write_all(&(x as f32).to_le_bytes())?;
        }
        fs::write(&bin_path, bytes).map_err(|e| Error::file(&bin_path, e))
    }

    pub fn load(dir: &Path, stem: &str) -> Result<Self> {
        let json_path = dir.join(format!("{stem}.json"));
        let text = fs::read_to_string(&json_path).map_err(|e| Error::file(&json_path, e))?;
        let header: DatasetHeader = serde_json::from_str(&text)?;
        let bin_path = dir.join(&header.features_file);
        let bytes = fs::read(&bin_path).map_err(|e| Error::file(&bin_path, e))?;
        if bytes.len() != header.n_samples * header.n_dims * 4 {
            return Err(Error::Shape(format!(
                "{} holds {} bytes, expected {}",
                bin_path.display(),
                bytes.len(),
                header.n_samples * header.n_dims * 4
            )));
        }
        let features = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        Ok(Dataset {
            n_dims: header.n_dims,
            n_classes: header.n_classes,
            features,
            labels: header.labels,
            train: header.train,
            validation: header.validation,
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub n_samples: usize,
    pub n_dims: usize,
    pub n_classes: usize,
    pub features_file: String,
    pub labels: Vec<usize>,
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

/// A subset of a dataset's samples, by index.
#[derive(Debug, Clone, Copy)]
pub struct DataView<'a> {
    pub data: &'a Dataset,
    pub indices: &'a [usize],
}

impl DataView<'_> {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Generates `n_classes` isotropic unit-variance Gaussians whose means are
/// random unit vectors scaled by `sep`. The validation split is stratified.
pub fn gen_synthetic(
    n_classes: usize,
    n_dims: usize,
    per_class: usize,
    val_frac: f64,
    sep: f64,
    seed: u64,
) -> Result<Dataset> {
    if n_classes < 2 || per_class < 2 || n_dims == 0 {
        return Err(Error::Config(format!(
            "degenerate dataset: {n_classes} classes, {per_class} per class, {n_dims} dims"
        )));
    }
    if !(val_frac > 0.0 && val_frac < 1.0) {
        return Err(Error::Config(format!("val_frac {val_frac} outside (0,1)")));
    }
    if !(sep.is_finite() && sep >= 0.0) {
        return Err(Error::Config(format!("separation {sep} must be finite and non-negative")));
    }
    let n_val = ((per_class as f64 * val_frac).round() as usize).clamp(1, per_class - 1);

    let mut rng = rng_from_seed(seed);
    let mut means = Vec::with_capacity(n_classes * n_dims);
    for _ in 0..n_classes {
        let v: Vec<f64> = (0..n_dims).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        means.extend(v.iter().map(|x| sep * x / norm));
    }

    let n = n_classes * per_class;
    let mut features = Vec::with_capacity(n * n_dims);
    let mut labels = Vec::with_capacity(n);
    let mut train = Vec::new();
    let mut validation = Vec::new();
    for k in 0..n_classes {
        let mean = &means[k * n_dims..(k + 1) * n_dims];
        let first = labels.len();
        for _ in 0..per_class {
            for &m in mean {
                let z: f64 = StandardNormal.sample(&mut rng);
                features.push(m + z);
            }
            labels.push(k);
        }
        let mut idx: Vec<usize> = (first..first + per_class).collect();
        idx.shuffle(&mut rng);
        validation.extend_from_slice(&idx[..n_val]);
        train.extend_from_slice(&idx[n_val..]);
    }
    train.sort_unstable();
    validation.sort_unstable();
    Ok(Dataset {
        n_dims,
        n_classes,
        features,
        labels,
        train,
        validation,
    })
}

/// Per-node data statistics: share of the training set and share of labels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeQuality {
    pub d: f64,
    pub l: f64,
}

/// A label the partitioner wanted but could not supply, and what it used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Substitution {
    pub node: usize,
    pub wanted: usize,
    pub used: usize,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    /// Train-sample indices per node.
    pub assignment: Vec<Vec<usize>>,
    pub quality: Vec<NodeQuality>,
    pub substitutions: Vec<Substitution>,
}

impl Partition {
    /// Builds a partition and derives `(d, l)` for each node from it.
    pub fn from_assignment(
        ds: &Dataset,
        assignment: Vec<Vec<usize>>,
        substitutions: Vec<Substitution>,
    ) -> Self {
        let quality = assignment.iter().map(|a| node_quality(ds, a)).collect();
        Partition {
            assignment,
            quality,
            substitutions,
        }
    }

    pub fn node_count(&self) -> usize {
        self.assignment.len()
    }

    pub fn node_view<'a>(&'a self, ds: &'a Dataset, node: usize) -> DataView<'a> {
        ds.view(&self.assignment[node])
    }

    pub fn label_histogram(&self, ds: &Dataset, node: usize) -> Vec<usize> {
        let mut h = vec![0; ds.n_classes];
        for &i in &self.assignment[node] {
            h[ds.labels[i]] += 1;
        }
        h
    }
}

pub fn node_quality(ds: &Dataset, samples: &[usize]) -> NodeQuality {
    let mut seen = vec![false; ds.n_classes];
    for &i in samples {
        seen[ds.labels[i]] = true;
    }
    NodeQuality {
        d: samples.len() as f64 / ds.train.len() as f64,
        l: seen.iter().filter(|&&s| s).count() as f64 / ds.n_classes as f64,
    }
}

/// Per-node sample counts: `total / n` each, the first `total % n` nodes get
/// one extra.
pub fn balanced_counts(total: usize, n: usize) -> Vec<usize> {
    (0..n).map(|i| total / n + usize::from(i < total % n)).collect()
}

/// Shuffled per-label pools of training indices.
struct LabelPools {
    pools: Vec<Vec<usize>>,
}

impl LabelPools {
    fn new<R: Rng>(ds: &Dataset, rng: &mut R) -> Self {
        let mut pools = vec![Vec::new(); ds.n_classes];
        for &i in &ds.train {
            pools[ds.labels[i]].push(i);
        }
        for p in &mut pools {
            p.shuffle(rng);
        }
        LabelPools { pools }
    }

    fn take(&mut self, label: usize, count: usize, out: &mut Vec<usize>) -> usize {
        let pool = &mut self.pools[label];
        let k = count.min(pool.len());
        out.extend(pool.drain(pool.len() - k..));
        k
    }

    fn remaining(&self, label: usize) -> usize {
        self.pools[label].len()
    }

    /// Label with the most samples left, lowest id on ties.
    fn fullest_outside(&self, exclude: &[usize]) -> Option<usize> {
        (0..self.pools.len())
            .filter(|l| !exclude.contains(l) && !self.pools[*l].is_empty())
            .max_by(|&a, &b| self.pools[a].len().cmp(&self.pools[b].len()).then(b.cmp(&a)))
    }

    fn drain_all(&mut self) -> Vec<usize> {
        self.pools.iter_mut().flat_map(|p| p.drain(..)).collect()
    }
}

/// Fills `need` more samples for `node`: first from the node's other chosen
/// labels, then from the fullest remaining label, recording substitutions.
fn backfill(
    pools: &mut LabelPools,
    node: usize,
    wanted: usize,
    chosen: &[usize],
    mut need: usize,
    out: &mut Vec<usize>,
    subs: &mut Vec<Substitution>,
) {
    for &alt in chosen {
        if need == 0 {
            return;
        }
        if alt == wanted {
            continue;
        }
        let got = pools.take(alt, need, out);
        if got > 0 {
            subs.push(Substitution {
                node,
                wanted,
                used: alt,
                count: got,
            });
            need -= got;
        }
    }
    while need > 0 {
        let Some(alt) = pools.fullest_outside(chosen) else {
            break;
        };
        let got = pools.take(alt, need, out);
        log::info!("node {node}: label {wanted} exhausted, took {got} samples of label {alt}");
        subs.push(Substitution {
            node,
            wanted,
            used: alt,
            count: got,
        });
        need -= got;
    }
}

/// Label-skewed partition.
///
/// `floor(skew_frac * n)` randomly chosen nodes each draw their samples from
/// `k` uniformly chosen labels, `k` uniform in `[labels_lo, labels_hi]`. All
/// other nodes share the leftovers uniformly. Every training sample lands on
/// exactly one node and per-node counts differ by at most one.
pub fn partition_label_skew(
    ds: &Dataset,
    g: &Graph,
    skew_frac: f64,
    labels_lo: usize,
    labels_hi: usize,
    seed: u64,
) -> Result<Partition> {
    if !(0.0..=1.0).contains(&skew_frac) {
        return Err(Error::Config(format!("skew_frac {skew_frac} outside [0,1]")));
    }
    if labels_lo == 0 || labels_lo > labels_hi || labels_hi > ds.n_classes {
        return Err(Error::Config(format!(
            "label range [{labels_lo},{labels_hi}] invalid for {} classes",
            ds.n_classes
        )));
    }
    let n = g.node_count();
    let counts = balanced_counts(ds.train.len(), n);
    let mut rng = rng_from_seed(seed);
    let mut pools = LabelPools::new(ds, &mut rng);

    let n_skewed = (skew_frac * n as f64).floor() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut skewed: Vec<usize> = order[..n_skewed].to_vec();
    skewed.sort_unstable();

    let mut assignment = vec![Vec::new(); n];
    let mut subs = Vec::new();
    let all_labels: Vec<usize> = (0..ds.n_classes).collect();
    for &node in &skewed {
        let k = rng.random_range(labels_lo..=labels_hi);
        let mut chosen: Vec<usize> = all_labels.choose_multiple(&mut rng, k).copied().collect();
        chosen.sort_unstable();
        let out = &mut assignment[node];
        for (j, &label) in chosen.iter().enumerate() {
            let share = counts[node] / k + usize::from(j < counts[node] % k);
            let got = pools.take(label, share, out);
            if got < share {
                backfill(&mut pools, node, label, &chosen, share - got, out, &mut subs);
            }
        }
    }

    let mut rest = pools.drain_all();
    rest.shuffle(&mut rng);
    let mut cursor = 0;
    for node in (0..n).filter(|i| skewed.binary_search(i).is_err()) {
        let take = counts[node].min(rest.len() - cursor);
        assignment[node].extend_from_slice(&rest[cursor..cursor + take]);
        cursor += take;
    }
    // skewed nodes absorb anything left when every node is skewed
    for node in 0..n {
        if cursor == rest.len() {
            break;
        }
        let short = counts[node].saturating_sub(assignment[node].len());
        let take = short.min(rest.len() - cursor);
        assignment[node].extend_from_slice(&rest[cursor..cursor + take]);
        cursor += take;
    }
    if cursor != rest.len() {
        return Err(Error::Internal("label-skew partition left samples unassigned".into()));
    }
    for a in &mut assignment {
        a.sort_unstable();
    }
    Ok(Partition::from_assignment(ds, assignment, subs))
}

/// Clique-dominant partition: nodes of clique `c` take a `dominance` share of
/// their samples from label `c mod n_classes` and the rest uniformly from the
/// other labels.
pub fn partition_clique_dominant(
    ds: &Dataset,
    g: &Graph,
    dominance: f64,
    seed: u64,
) -> Result<Partition> {
    let clique_of = g
        .clique_of()
        .ok_or_else(|| Error::Config("clique-dominant partition needs a caveman graph".into()))?;
    if !(dominance > 0.0 && dominance <= 1.0) {
        return Err(Error::Config(format!("dominance {dominance} outside (0,1]")));
    }
    if g.clique_count() > ds.n_classes {
        return Err(Error::Config(format!(
            "{} cliques but only {} labels",
            g.clique_count(),
            ds.n_classes
        )));
    }
    let n = g.node_count();
    let counts = balanced_counts(ds.train.len(), n);
    let mut rng = rng_from_seed(seed);
    let mut pools = LabelPools::new(ds, &mut rng);
    let mut assignment = vec![Vec::new(); n];
    let mut subs = Vec::new();

    for node in 0..n {
        let home = clique_of[node] % ds.n_classes;
        let dominant = (dominance * counts[node] as f64).round() as usize;
        let out = &mut assignment[node];
        let got = pools.take(home, dominant, out);
        if got < dominant {
            backfill(&mut pools, node, home, &[home], dominant - got, out, &mut subs);
        }
        for _ in 0..counts[node] - dominant {
            let others: Vec<usize> = (0..ds.n_classes)
                .filter(|&l| l != home && pools.remaining(l) > 0)
                .collect();
            let label = match others.as_slice() {
                [] if pools.remaining(home) > 0 => home,
                [] => break,
                _ => others[rng.random_range(0..others.len())],
            };
            pools.take(label, 1, out);
        }
        out.sort_unstable();
    }
    Ok(Partition::from_assignment(ds, assignment, subs))
}
