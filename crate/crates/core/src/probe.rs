//! One-hidden-layer ReLU MLP probe trained with mini-batch Adam.
//!
//! Defaults follow the usual scikit-learn `MLPClassifier` configuration:
//! 100 hidden units, 200 epochs, learning rate 1e-3, batches of
//! `min(200, n)`, Glorot-uniform initialization of weights and biases, no
//! early stopping. Binary tasks use a single sigmoid output with logistic
//! loss, multi-class tasks a softmax output with cross-entropy. There is no
//! weight decay.
//!
//! All arithmetic is `f64`. Matrix products go through `matrixmultiply`,
//! which picks its SIMD kernel per CPU, so training is a pure function of
//! `(features, labels, config)` on a given machine.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::embed::EmbeddingVector;
use crate::error::{Error, Result};
use crate::rng::{self, SeededRng};
use crate::stats::ScoreMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub hidden_size: usize,
    pub activation: Activation,
    pub max_epochs: usize,
    pub learning_rate: f64,
    /// Upper bound on the batch size; the effective size is `min(batch_size, n)`.
    pub batch_size: usize,
    pub early_stopping: bool,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            hidden_size: 100,
            activation: Activation::Relu,
            max_epochs: 200,
            learning_rate: 0.001,
            batch_size: 200,
            early_stopping: false,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
        }
    }
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("probe: {m}")));
        if self.hidden_size == 0 {
            return bad("hidden_size must be positive");
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be a positive number");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("beta1 and beta2 must lie in [0, 1)");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if self.early_stopping {
            return bad("early stopping is not supported; every run trains for max_epochs");
        }
        Ok(())
    }
}

/// Network parameters stored flat as `[w1 | b1 | w2 | b2]`.
///
/// `w1` is `dim x hidden` (row `i` holds the weights leaving input `i`),
/// `w2` is `hidden x n_out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    dim: usize,
    hidden: usize,
    n_classes: usize,
    params: Vec<f64>,
}

impl Mlp {
    fn outputs_for(n_classes: usize) -> usize {
        if n_classes == 2 {
            1
        } else {
            n_classes
        }
    }

    pub fn zeros(dim: usize, hidden: usize, n_classes: usize) -> Self {
        let n_out = Self::outputs_for(n_classes);
        Mlp {
            dim,
            hidden,
            n_classes,
            params: vec![0.0; dim * hidden + hidden + hidden * n_out + n_out],
        }
    }

    /// Glorot-uniform initialization of weights and biases,
    /// bound `sqrt(6 / (fan_in + fan_out))` per layer.
    pub fn init(dim: usize, hidden: usize, n_classes: usize, rng: &mut SeededRng) -> Self {
        let mut net = Self::zeros(dim, hidden, n_classes);
        let n_out = net.n_out();
        let b1 = (6.0 / (dim + hidden) as f64).sqrt();
        let b2 = (6.0 / (hidden + n_out) as f64).sqrt();
        let (l1, l2) = (dim * hidden + hidden, hidden * n_out + n_out);
        for p in &mut net.params[..l1] {
            *p = rng::uniform(rng, -b1, b1);
        }
        for p in &mut net.params[l1..l1 + l2] {
            *p = rng::uniform(rng, -b2, b2);
        }
        net
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn n_out(&self) -> usize {
        Self::outputs_for(self.n_classes)
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn split(&self) -> (&[f64], &[f64], &[f64], &[f64]) {
        let (w1, rest) = self.params.split_at(self.dim * self.hidden);
        let (b1, rest) = rest.split_at(self.hidden);
        let (w2, b2) = rest.split_at(self.hidden * self.n_out());
        (w1, b1, w2, b2)
    }

    /// Output-layer weights and biases.
    pub fn output_layer_mut(&mut self) -> &mut [f64] {
        let start = self.dim * self.hidden + self.hidden;
        &mut self.params[start..]
    }

    /// Hidden activations `a` (`rows x hidden`) and logits `z`
    /// (`rows x n_out`) for the row-major inputs `x`.
    fn forward(&self, x: &[f64], rows: usize, a: &mut [f64], z: &mut [f64]) {
        let (w1, b1, w2, b2) = self.split();
        let (dim, hidden, n_out) = (self.dim, self.hidden, self.n_out());
        let (a, z) = (&mut a[..rows * hidden], &mut z[..rows * n_out]);
        for row in a.chunks_exact_mut(hidden) {
            row.copy_from_slice(b1);
        }
        gemm(rows, dim, hidden, (x, dim, 1), (w1, hidden, 1), 1.0, (a, hidden, 1));
        for v in a.iter_mut() {
            *v = v.max(0.0);
        }
        for row in z.chunks_exact_mut(n_out) {
            row.copy_from_slice(b2);
        }
        gemm(rows, hidden, n_out, (a, hidden, 1), (w2, n_out, 1), 1.0, (z, n_out, 1));
    }

    /// Mean loss over the rows of `x` (row-major, `dim` columns), multiplied
    /// by `scale`, and its gradient with respect to every parameter.
    pub fn loss_and_gradient(&self, x: &[f64], labels: &[usize], scale: f64) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.params.len()];
        let mut ws = Workspace::new(self, labels.len());
        let rows: Vec<usize> = (0..labels.len()).collect();
        let loss = self.accumulate(x, labels, &rows, scale, &mut grad, &mut ws);
        (loss, grad)
    }

    /// Adds the gradient of `scale * mean loss` over `rows` into `grad` and
    /// returns the (scaled) mean loss.
    fn accumulate(
        &self,
        x: &[f64],
        labels: &[usize],
        rows: &[usize],
        scale: f64,
        grad: &mut [f64],
        ws: &mut Workspace,
    ) -> f64 {
        let (dim, hidden, n_out) = (self.dim, self.hidden, self.n_out());
        let b = rows.len();
        ws.ensure(self, b);
        let (_, _, w2, _) = self.split();
        let (gw1, rest) = grad.split_at_mut(dim * hidden);
        let (gb1, rest) = rest.split_at_mut(hidden);
        let (gw2, gb2) = rest.split_at_mut(hidden * n_out);
        let weight = scale / b as f64;

        let xb = &mut ws.x[..b * dim];
        for (dst, &r) in xb.chunks_exact_mut(dim).zip(rows) {
            dst.copy_from_slice(&x[r * dim..(r + 1) * dim]);
        }
        self.forward(xb, b, &mut ws.a, &mut ws.z);
        let (a, da) = (&ws.a[..b * hidden], &mut ws.da[..b * hidden]);
        let dz = &mut ws.dz[..b * n_out];

        let mut total = 0.0;
        for ((z, d), &r) in ws.z.chunks_exact(n_out).zip(dz.chunks_exact_mut(n_out)).zip(rows) {
            total += output_loss_and_delta(z, labels[r], d);
            for v in d.iter_mut() {
                *v *= weight;
            }
        }
        for d in dz.chunks_exact(n_out) {
            for (g, v) in gb2.iter_mut().zip(d) {
                *g += v;
            }
        }
        gemm(hidden, b, n_out, (a, 1, hidden), (dz, n_out, 1), 1.0, (gw2, n_out, 1));
        gemm(b, n_out, hidden, (dz, n_out, 1), (w2, 1, n_out), 0.0, (da, hidden, 1));
        for (d, &act) in da.iter_mut().zip(a) {
            if act <= 0.0 {
                *d = 0.0;
            }
        }
        for d in da.chunks_exact(hidden) {
            for (g, v) in gb1.iter_mut().zip(d) {
                *g += v;
            }
        }
        gemm(dim, b, hidden, (xb, 1, dim), (da, hidden, 1), 1.0, (gw1, hidden, 1));
        total * weight
    }

    /// Class probabilities for the rows of `x`, written row-major into `out`.
    fn probabilities(&self, x: &[f64], rows: usize, ws: &mut Workspace, out: &mut [f64]) {
        ws.ensure(self, rows);
        self.forward(x, rows, &mut ws.a, &mut ws.z);
        let n_out = self.n_out();
        for (z, o) in ws.z[..rows * n_out]
            .chunks_exact(n_out)
            .zip(out.chunks_exact_mut(self.n_classes))
        {
            if self.n_classes == 2 {
                let p = sigmoid(z[0]);
                o[0] = 1.0 - p;
                o[1] = p;
            } else {
                softmax(z, o);
            }
        }
    }
}

/// Scratch buffers sized for a batch.
struct Workspace {
    x: Vec<f64>,
    a: Vec<f64>,
    da: Vec<f64>,
    z: Vec<f64>,
    dz: Vec<f64>,
}

impl Workspace {
    fn new(net: &Mlp, rows: usize) -> Self {
        let mut ws = Workspace {
            x: Vec::new(),
            a: Vec::new(),
            da: Vec::new(),
            z: Vec::new(),
            dz: Vec::new(),
        };
        ws.ensure(net, rows);
        ws
    }

    fn ensure(&mut self, net: &Mlp, rows: usize) {
        let grow = |v: &mut Vec<f64>, n: usize| {
            if v.len() < n {
                v.resize(n, 0.0);
            }
        };
        grow(&mut self.x, rows * net.dim);
        grow(&mut self.a, rows * net.hidden);
        grow(&mut self.da, rows * net.hidden);
        grow(&mut self.z, rows * net.n_out());
        grow(&mut self.dz, rows * net.n_out());
    }
}

type MatRef<'a> = (&'a [f64], usize, usize);
type MatMut<'a> = (&'a mut [f64], usize, usize);

fn fits(len: usize, rows: usize, cols: usize, rs: usize, cs: usize) -> bool {
    rows == 0 || cols == 0 || (rows - 1) * rs + (cols - 1) * cs < len
}

/// `C = A B + beta C` for an `m x k` matrix A and a `k x n` matrix B, each
/// given as `(data, row stride, column stride)`.
fn gemm(m: usize, k: usize, n: usize, a: MatRef, b: MatRef, beta: f64, c: MatMut) {
    assert!(fits(a.0.len(), m, k, a.1, a.2));
    assert!(fits(b.0.len(), k, n, b.1, b.2));
    assert!(fits(c.0.len(), m, n, c.1, c.2));
    // SAFETY: the assertions above keep every strided access in bounds.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.0.as_ptr(),
            a.1 as isize,
            a.2 as isize,
            b.0.as_ptr(),
            b.1 as isize,
            b.2 as isize,
            beta,
            c.0.as_mut_ptr(),
            c.1 as isize,
            c.2 as isize,
        );
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softmax(z: &[f64], out: &mut [f64]) {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, &v) in out.iter_mut().zip(z) {
        *o = (v - max).exp();
        sum += *o;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
}

/// Loss of one example and dLoss/dlogits.
fn output_loss_and_delta(z: &[f64], y: usize, dz: &mut [f64]) -> f64 {
    if z.len() == 1 {
        let t = if y == 1 { 1.0 } else { 0.0 };
        let z0 = z[0];
        dz[0] = sigmoid(z0) - t;
        // softplus(z) - t*z, stable for large |z|
        z0.max(0.0) + (-z0.abs()).exp().ln_1p() - t * z0
    } else {
        softmax(z, dz);
        let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        dz[y] -= 1.0;
        lse - z[y]
    }
}

/// A trained probe and its per-epoch mean training loss.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedProbe {
    pub net: Mlp,
    pub training_loss_trace: Vec<f64>,
}

impl TrainedProbe {
    pub fn dim(&self) -> usize {
        self.net.dim
    }

    pub fn n_classes(&self) -> usize {
        self.net.n_classes
    }
}

fn flatten(features: &[EmbeddingVector], dim: usize) -> Result<Vec<f64>> {
    let mut x = Vec::with_capacity(features.len() * dim);
    for (i, v) in features.iter().enumerate() {
        if v.dim() != dim {
            return Err(Error::Data(format!(
                "feature row {i} has dimension {}, expected {dim}",
                v.dim()
            )));
        }
        x.extend_from_slice(v.values());
    }
    Ok(x)
}

/// Train a probe on `features` with integer labels in `0..n_classes`.
pub fn train(
    features: &[EmbeddingVector],
    labels: &[usize],
    n_classes: usize,
    cfg: &ProbeConfig,
) -> Result<TrainedProbe> {
    cfg.validate()?;
    if features.len() != labels.len() {
        return Err(Error::Data(format!(
            "{} feature rows but {} labels",
            features.len(),
            labels.len()
        )));
    }
    if features.is_empty() {
        return Err(Error::Data("cannot train on an empty set".into()));
    }
    if n_classes < 2 {
        return Err(Error::Data("a probe needs at least 2 classes".into()));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
        return Err(Error::Data(format!("label {bad} out of range for {n_classes} classes")));
    }
    let first = labels[0];
    if labels.iter().all(|&l| l == first) {
        return Err(Error::Data(format!(
            "training labels contain a single class ({first})"
        )));
    }
    let dim = features[0].dim();
    let x = flatten(features, dim)?;
    let n = labels.len();

    let mut init_rng = rng::seeded(rng::derive_seed(cfg.seed, "probe-init", 0));
    let mut shuffle_rng = rng::seeded(rng::derive_seed(cfg.seed, "probe-shuffle", 0));
    let mut net = Mlp::init(dim, cfg.hidden_size, n_classes, &mut init_rng);

    let n_params = net.params.len();
    let mut grad = vec![0.0; n_params];
    let mut m = vec![0.0; n_params];
    let mut v = vec![0.0; n_params];
    let mut ws = Workspace::new(&net, cfg.batch_size.min(n));
    let batch = cfg.batch_size.min(n);
    let mut order: Vec<usize> = (0..n).collect();
    let mut trace = Vec::with_capacity(cfg.max_epochs);
    let mut step: i32 = 0;

    for epoch in 0..cfg.max_epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for rows in order.chunks(batch) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let loss = net.accumulate(&x, labels, rows, 1.0, &mut grad, &mut ws);
            epoch_loss += loss * rows.len() as f64;

            step += 1;
            let lr = cfg.learning_rate * (1.0 - cfg.beta2.powi(step)).sqrt()
                / (1.0 - cfg.beta1.powi(step));
            for (((p, g), mi), vi) in net.params.iter_mut().zip(&grad).zip(&mut m).zip(&mut v) {
                *mi = cfg.beta1 * *mi + (1.0 - cfg.beta1) * g;
                *vi = cfg.beta2 * *vi + (1.0 - cfg.beta2) * g * g;
                *p -= lr * *mi / (vi.sqrt() + cfg.epsilon);
            }
        }
        let epoch_loss = epoch_loss / n as f64;
        if !epoch_loss.is_finite() || net.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Divergence { epoch });
        }
        trace.push(epoch_loss);
    }
    Ok(TrainedProbe {
        net,
        training_loss_trace: trace,
    })
}

/// Class probabilities, one row per input; rows sum to 1.
pub fn predict_scores(probe: &TrainedProbe, features: &[EmbeddingVector]) -> Result<ScoreMatrix> {
    predict_with(&probe.net, features)
}

const PREDICT_CHUNK: usize = 256;

pub fn predict_with(net: &Mlp, features: &[EmbeddingVector]) -> Result<ScoreMatrix> {
    let x = flatten(features, net.dim)?;
    let k = net.n_classes;
    let mut data = vec![0.0; features.len() * k];
    let mut ws = Workspace::new(net, PREDICT_CHUNK);
    for (xs, out) in x
        .chunks(PREDICT_CHUNK * net.dim.max(1))
        .zip(data.chunks_mut(PREDICT_CHUNK * k))
    {
        net.probabilities(xs, out.len() / k, &mut ws, out);
    }
    ScoreMatrix::new(features.len(), k, data)
}

/// Largest relative difference between the analytic gradient and central
/// finite differences (step 1e-5) over every parameter of a freshly
/// initialized network.
pub fn gradient_check(
    cfg: &ProbeConfig,
    n_classes: usize,
    sample: &[EmbeddingVector],
    labels: &[usize],
) -> Result<f64> {
    const STEP: f64 = 1e-5;
    const FLOOR: f64 = 1e-7;
    if sample.is_empty() || sample.len() > 8 || sample.len() != labels.len() {
        return Err(Error::Config("gradient check needs 1..=8 labeled rows".into()));
    }
    let dim = sample[0].dim();
    if dim > 8 || cfg.hidden_size > 8 {
        return Err(Error::Config("gradient check needs dim <= 8 and hidden <= 8".into()));
    }
    let x = flatten(sample, dim)?;
    let mut init_rng = rng::seeded(rng::derive_seed(cfg.seed, "probe-init", 0));
    let mut net = Mlp::init(dim, cfg.hidden_size, n_classes, &mut init_rng);
    let (_, analytic) = net.loss_and_gradient(&x, labels, 1.0);
    let mut worst: f64 = 0.0;
    for (i, &a) in analytic.iter().enumerate() {
        let orig = net.params[i];
        net.params[i] = orig + STEP;
        let (up, _) = net.loss_and_gradient(&x, labels, 1.0);
        net.params[i] = orig - STEP;
        let (down, _) = net.loss_and_gradient(&x, labels, 1.0);
        net.params[i] = orig;
        let numeric = (up - down) / (2.0 * STEP);
        let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(FLOOR);
        worst = worst.max(err);
    }
    Ok(worst)
}
