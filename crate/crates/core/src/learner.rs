//! The model a walker carries.
//!
//! Two architectures share one flat parameter vector:
//!
//! - softmax regression, laid out class by class as `[w_k (n_dims), b_k]`;
//! - one hidden `tanh` layer of width `h`: first `h` rows of `[w, b]` over
//!   the inputs, then `n_classes` rows of `[w, b]` over the hidden units.
//!
//! Training is plain mini-batch SGD on mean cross-entropy plus an L2 penalty
//! on weights (biases are not penalized). Updates are functional: the input
//! model is never modified.

use std::fs;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::datahub::{DataView, Dataset};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arch {
    Softmax,
    Mlp { hidden: usize },
}

impl Arch {
    pub fn param_count(self, n_dims: usize, n_classes: usize) -> usize {
        match self {
            Arch::Softmax => n_classes * (n_dims + 1),
            Arch::Mlp { hidden } => hidden * (n_dims + 1) + n_classes * (hidden + 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub arch: Arch,
    pub n_dims: usize,
    pub n_classes: usize,
    pub theta: Vec<f64>,
}

impl ModelParams {
    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn same_shape(&self, other: &ModelParams) -> bool {
        self.arch == other.arch
            && self.n_dims == other.n_dims
            && self.n_classes == other.n_classes
            && self.theta.len() == other.theta.len()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string(self)?).map_err(|e| Error::file(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        let m: ModelParams = serde_json::from_str(&text)?;
        if m.theta.len() != m.arch.param_count(m.n_dims, m.n_classes) {
            return Err(Error::Shape(format!(
                "checkpoint holds {} parameters, architecture needs {}",
                m.theta.len(),
                m.arch.param_count(m.n_dims, m.n_classes)
            )));
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    #[serde(default)]
    pub l2: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.05,
            batch_size: 32,
            l2: 0.0,
        }
    }
}

pub fn init_model(arch: Arch, n_dims: usize, n_classes: usize, seed: u64) -> ModelParams {
    let mut rng = rng_from_seed(seed);
    let mut theta = Vec::with_capacity(arch.param_count(n_dims, n_classes));
    let mut layer = |rows: usize, fan_in: usize, scale: f64, theta: &mut Vec<f64>| {
        for _ in 0..rows {
            for _ in 0..fan_in {
                let z: f64 = StandardNormal.sample(&mut rng);
                theta.push(scale * z);
            }
            theta.push(0.0);
        }
    };
    match arch {
        Arch::Softmax => layer(n_classes, n_dims, 0.01, &mut theta),
        Arch::Mlp { hidden } => {
            layer(hidden, n_dims, (1.0 / n_dims as f64).sqrt(), &mut theta);
            layer(n_classes, hidden, (1.0 / hidden as f64).sqrt(), &mut theta);
        }
    }
    ModelParams {
        arch,
        n_dims,
        n_classes,
        theta,
    }
}

/// Scratch buffers reused across samples.
struct Workspace {
    hidden: Vec<f64>,
    logits: Vec<f64>,
    dhidden: Vec<f64>,
}

impl Workspace {
    fn new(m: &ModelParams) -> Self {
        let h = match m.arch {
            Arch::Softmax => 0,
            Arch::Mlp { hidden } => hidden,
        };
        Workspace {
            hidden: vec![0.0; h],
            logits: vec![0.0; m.n_classes],
            dhidden: vec![0.0; h],
        }
    }
}

fn affine(theta: &[f64], rows: usize, input: &[f64], out: &mut [f64]) {
    let width = input.len() + 1;
    for (r, o) in out.iter_mut().enumerate().take(rows) {
        let w = &theta[r * width..(r + 1) * width];
        let mut acc = w[width - 1];
        for (a, b) in w[..width - 1].iter().zip(input) {
            acc += a * b;
        }
        *o = acc;
    }
}

/// Converts logits to probabilities in place, returns log-sum-exp.
fn softmax_in_place(z: &mut [f64]) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
    max + sum.ln()
}

/// Forward pass for one sample; leaves logits in `ws.logits`.
fn forward(m: &ModelParams, x: &[f64], ws: &mut Workspace) {
    match m.arch {
        Arch::Softmax => affine(&m.theta, m.n_classes, x, &mut ws.logits),
        Arch::Mlp { hidden } => {
            let split = hidden * (m.n_dims + 1);
            affine(&m.theta[..split], hidden, x, &mut ws.hidden);
            ws.hidden.iter_mut().for_each(|h| *h = h.tanh());
            affine(&m.theta[split..], m.n_classes, &ws.hidden, &mut ws.logits);
        }
    }
}

/// Accumulates `scale * dz x^T` into a `[w, b]` block.
fn accumulate_outer(grad: &mut [f64], dz: &[f64], input: &[f64], scale: f64) {
    let width = input.len() + 1;
    for (r, &d) in dz.iter().enumerate() {
        let g = &mut grad[r * width..(r + 1) * width];
        let s = scale * d;
        for (gi, xi) in g[..width - 1].iter_mut().zip(input) {
            *gi += s * xi;
        }
        g[width - 1] += s;
    }
}

fn l2_penalty(m: &ModelParams, l2: f64, grad: Option<&mut [f64]>) -> f64 {
    if l2 == 0.0 {
        return 0.0;
    }
    let blocks: Vec<(usize, usize, usize)> = match m.arch {
        Arch::Softmax => vec![(0, m.n_classes, m.n_dims)],
        Arch::Mlp { hidden } => vec![
            (0, hidden, m.n_dims),
            (hidden * (m.n_dims + 1), m.n_classes, hidden),
        ],
    };
    let mut penalty = 0.0;
    let mut grad = grad;
    for (offset, rows, fan_in) in blocks {
        for r in 0..rows {
            let start = offset + r * (fan_in + 1);
            for i in start..start + fan_in {
                penalty += 0.5 * l2 * m.theta[i] * m.theta[i];
                if let Some(g) = grad.as_deref_mut() {
                    g[i] += l2 * m.theta[i];
                }
            }
        }
    }
    penalty
}

/// Mean cross-entropy plus L2 over the given samples; writes the gradient
/// into `grad` (overwritten).
pub fn loss_and_grad(
    m: &ModelParams,
    ds: &Dataset,
    samples: &[usize],
    l2: f64,
    grad: &mut [f64],
) -> f64 {
    grad.fill(0.0);
    let mut ws = Workspace::new(m);
    let scale = 1.0 / samples.len() as f64;
    let mut loss = 0.0;
    for &i in samples {
        let x = ds.row(i);
        let y = ds.labels[i];
        forward(m, x, &mut ws);
        let zy = ws.logits[y];
        loss += softmax_in_place(&mut ws.logits) - zy;
        // logits now hold p - onehot(y)
        ws.logits[y] -= 1.0;
        match m.arch {
            Arch::Softmax => accumulate_outer(grad, &ws.logits, x, scale),
            Arch::Mlp { hidden } => {
                let split = hidden * (m.n_dims + 1);
                accumulate_outer(&mut grad[split..], &ws.logits, &ws.hidden, scale);
                let out = &m.theta[split..];
                for j in 0..hidden {
                    let mut s = 0.0;
                    for (k, dz) in ws.logits.iter().enumerate() {
                        s += dz * out[k * (hidden + 1) + j];
                    }
                    ws.dhidden[j] = s * (1.0 - ws.hidden[j] * ws.hidden[j]);
                }
                accumulate_outer(&mut grad[..split], &ws.dhidden, x, scale);
            }
        }
    }
    loss * scale + l2_penalty(m, l2, Some(grad))
}

/// Objective value only (same definition as [`loss_and_grad`]).
pub fn objective(m: &ModelParams, ds: &Dataset, samples: &[usize], l2: f64) -> f64 {
    let mut ws = Workspace::new(m);
    let mut loss = 0.0;
    for &i in samples {
        forward(m, ds.row(i), &mut ws);
        let y = ds.labels[i];
        let zy = ws.logits[y];
        let lse = softmax_in_place(&mut ws.logits);
        loss += lse - zy;
    }
    loss / samples.len() as f64 + l2_penalty(m, l2, None)
}

/// `k` mini-batch SGD steps on `samples`, batches drawn with replacement.
pub fn sgd_steps<R: Rng>(
    m: &ModelParams,
    samples: DataView<'_>,
    k: usize,
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<ModelParams> {
    if samples.is_empty() {
        return Err(Error::EmptyData);
    }
    let mut out = m.clone();
    let mut grad = vec![0.0; m.len()];
    let mut batch = vec![0usize; cfg.batch_size.max(1)];
    for _ in 0..k {
        for b in batch.iter_mut() {
            *b = samples.indices[rng.random_range(0..samples.len())];
        }
        if cfg.learning_rate == 0.0 {
            continue;
        }
        loss_and_grad(&out, samples.data, &batch, cfg.l2, &mut grad);
        for (t, g) in out.theta.iter_mut().zip(&grad) {
            *t -= cfg.learning_rate * g;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub loss: f64,
    pub accuracy: f64,
}

/// Mean cross-entropy and top-1 accuracy; ties go to the lowest class id.
pub fn evaluate(m: &ModelParams, data: DataView<'_>) -> Result<Evaluation> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    let mut ws = Workspace::new(m);
    let mut loss = 0.0;
    let mut correct = 0usize;
    for &i in data.indices {
        forward(m, data.data.row(i), &mut ws);
        let y = data.data.labels[i];
        let mut best = 0;
        for k in 1..ws.logits.len() {
            if ws.logits[k] > ws.logits[best] {
                best = k;
            }
        }
        correct += usize::from(best == y);
        let zy = ws.logits[y];
        loss += softmax_in_place(&mut ws.logits) - zy;
    }
    let n = data.len() as f64;
    Ok(Evaluation {
        loss: loss / n,
        accuracy: correct as f64 / n,
    })
}

/// Componentwise `sum w_i m_i / sum w_i`. All-zero weights fall back to an
/// equal-weight mean.
pub fn weighted_average(models: &[&ModelParams], weights: &[f64]) -> Result<ModelParams> {
    let first = models
        .first()
        .ok_or_else(|| Error::Shape("no models to average".into()))?;
    if models.len() != weights.len() {
        return Err(Error::Shape(format!(
            "{} models but {} weights",
            models.len(),
            weights.len()
        )));
    }
    if let Some(bad) = models.iter().find(|m| !m.same_shape(first)) {
        return Err(Error::Shape(format!(
            "cannot average models of length {} and {}",
            first.len(),
            bad.len()
        )));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::Shape("weights must be finite and non-negative".into()));
    }
    let total: f64 = weights.iter().sum();
    let uniform;
    let (weights, total) = if total > 0.0 {
        (weights, total)
    } else {
        log::info!("all aggregation weights are zero; using equal weights");
        uniform = vec![1.0; models.len()];
        (uniform.as_slice(), models.len() as f64)
    };
    let mut out = (*first).clone();
    for (i, t) in out.theta.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (m, w) in models.iter().zip(weights) {
            acc += w * m.theta[i];
        }
        *t = acc / total;
    }
    Ok(out)
}
