//! Synthetic learning tasks with unbiased stochastic gradient oracles.
//!
//! Three objectives are provided:
//!
//! * `quadratic`: `F(w) = ½ (w - w*)ᵀ H (w - w*) + F*` with diagonal `H`, plus
//!   additive isotropic Gaussian gradient noise. `L`, `σ²`, `F0` and `F*` are
//!   known in closed form.
//! * `logistic`: L2-regularized logistic regression on a seeded two-class
//!   Gaussian dataset (a bias feature is appended).
//! * `mlp`: one hidden `tanh` layer with a logistic output on a seeded
//!   XOR-style dataset; gradients by hand-written backprop.
//!
//! Minibatches of the dataset tasks are drawn uniformly *with* replacement, so
//! the per-sample gradient variance at a point is the exact population
//! variance over the training set.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vecmath::{ParamVector, RngStream};

fn default_one() -> f64 {
    1.0
}
fn default_mu() -> f64 {
    0.1
}
fn default_separation() -> f64 {
    1.0
}
fn default_l2() -> f64 {
    1e-4
}
fn default_hidden() -> usize {
    8
}
fn default_init_scale() -> f64 {
    0.1
}

/// Task selection and data-generation parameters, as found in run configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TaskSpec {
    Quadratic(QuadraticSpec),
    Logistic(DatasetSpec),
    Mlp(MlpSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadraticSpec {
    pub dim: usize,
    /// Explicit Hessian diagonal; when absent, eigenvalues are spaced
    /// geometrically between `mu` and `smoothness`.
    #[serde(default)]
    pub eigenvalues: Option<Vec<f64>>,
    #[serde(default = "default_one")]
    pub smoothness: f64,
    #[serde(default = "default_mu")]
    pub mu: f64,
    /// Per-coordinate standard deviation of a single-sample gradient.
    #[serde(default = "default_one")]
    pub noise: f64,
    #[serde(default)]
    pub fstar: f64,
    /// Every coordinate of `w0` (the minimizer is the origin).
    #[serde(default = "default_one")]
    pub init: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    /// Feature count, not counting the bias.
    pub dim: usize,
    pub samples: usize,
    #[serde(default)]
    pub test_samples: Option<usize>,
    #[serde(default = "default_separation")]
    pub separation: f64,
    #[serde(default)]
    pub label_noise: f64,
    #[serde(default = "default_l2")]
    pub l2: f64,
    /// Extra additive Gaussian gradient noise per sample (0 disables).
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub data_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpSpec {
    pub dim: usize,
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    pub samples: usize,
    #[serde(default)]
    pub test_samples: Option<usize>,
    #[serde(default = "default_separation")]
    pub separation: f64,
    #[serde(default)]
    pub label_noise: f64,
    #[serde(default = "default_l2")]
    pub l2: f64,
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub data_seed: u64,
    #[serde(default = "default_init_scale")]
    pub init_scale: f64,
}

/// Constants feeding the planner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskConstants {
    pub l_smooth: f64,
    pub sigma2: f64,
    pub f0: f64,
    pub fstar: f64,
    /// True only when every field is known in closed form (quadratic task).
    /// Otherwise `l_smooth` and `sigma2` are probe-based estimates and the
    /// planner outputs derived from them are approximate.
    pub exact: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    /// Held-out classification accuracy; absent for the quadratic task.
    pub accuracy: Option<f64>,
}

/// Row-major sample matrix with ±1 labels.
#[derive(Debug, Clone)]
struct Dataset {
    features: Vec<f64>,
    labels: Vec<f64>,
    width: usize,
}

impl Dataset {
    fn len(&self) -> usize {
        self.labels.len()
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.width..(i + 1) * self.width]
    }
}

#[derive(Debug, Clone)]
struct Quadratic {
    eigenvalues: Vec<f64>,
    noise: f64,
    fstar: f64,
    init: f64,
}

#[derive(Debug, Clone)]
struct Logistic {
    train: Dataset,
    test: Dataset,
    l2: f64,
    noise: f64,
}

#[derive(Debug, Clone)]
struct Mlp {
    train: Dataset,
    test: Dataset,
    inputs: usize,
    hidden: usize,
    l2: f64,
    noise: f64,
    w0: Vec<f64>,
}

#[derive(Debug, Clone)]
enum Model {
    Quadratic(Quadratic),
    Logistic(Logistic),
    Mlp(Mlp),
}

/// An instantiated, immutable task. Cheap to share across threads.
#[derive(Debug, Clone)]
pub struct Task {
    spec: TaskSpec,
    model: Model,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(z))` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

// Stream tags used for data generation, kept apart from training lanes.
const TRAIN_LANE: u64 = 0xDA7A_0001;
const TEST_LANE: u64 = 0xDA7A_0002;
const INIT_LANE: u64 = 0xDA7A_0003;

fn gaussian_classes(
    n: usize,
    dim: usize,
    sep: f64,
    label_noise: f64,
    direction: &[f64],
    stream: &mut RngStream,
) -> Dataset {
    let width = dim + 1;
    let mut features = Vec::with_capacity(n * width);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let y = if i % 2 == 0 { 1.0 } else { -1.0 };
        for d in direction {
            features.push(y * sep * d + stream.standard_normal());
        }
        features.push(1.0);
        let flip = stream.uniform() < label_noise;
        labels.push(if flip { -y } else { y });
    }
    Dataset { features, labels, width }
}

fn xor_clusters(n: usize, dim: usize, sep: f64, label_noise: f64, stream: &mut RngStream) -> Dataset {
    let mut features = Vec::with_capacity(n * dim);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        // Balanced: quadrant cycles through the four clusters.
        let sx = if i % 2 == 0 { 1.0 } else { -1.0 };
        let sy = if (i / 2) % 2 == 0 { 1.0 } else { -1.0 };
        for j in 0..dim {
            let center = match j {
                0 => sx * sep,
                1 => sy * sep,
                _ => 0.0,
            };
            features.push(center + 0.5 * stream.standard_normal());
        }
        let y = sx * sy;
        let flip = stream.uniform() < label_noise;
        labels.push(if flip { -y } else { y });
    }
    Dataset { features, labels, width: dim }
}

impl Quadratic {
    fn grad(&self, w: &[f64]) -> Vec<f64> {
        w.iter().zip(&self.eigenvalues).map(|(x, l)| l * x).collect()
    }

    fn loss(&self, w: &[f64]) -> f64 {
        0.5 * w
            .iter()
            .zip(&self.eigenvalues)
            .map(|(x, l)| l * x * x)
            .sum::<f64>()
            + self.fstar
    }
}

impl Logistic {
    fn margin(&self, data: &Dataset, i: usize, w: &[f64]) -> f64 {
        data.row(i).iter().zip(w).map(|(x, v)| x * v).sum::<f64>()
    }

    fn loss(&self, w: &[f64]) -> f64 {
        let n = self.train.len();
        let data: f64 = (0..n)
            .map(|i| softplus(-self.train.labels[i] * self.margin(&self.train, i, w)))
            .sum::<f64>()
            / n as f64;
        data + 0.5 * self.l2 * w.iter().map(|x| x * x).sum::<f64>()
    }

    /// Adds the data part of sample `i`'s gradient into `out`, scaled.
    fn add_sample_grad(&self, i: usize, w: &[f64], scale: f64, out: &mut [f64]) {
        let y = self.train.labels[i];
        let coeff = -y * sigmoid(-y * self.margin(&self.train, i, w)) * scale;
        for (o, x) in out.iter_mut().zip(self.train.row(i)) {
            *o += coeff * x;
        }
    }

    fn accuracy(&self, w: &[f64]) -> f64 {
        let n = self.test.len();
        let correct = (0..n)
            .filter(|&i| self.margin(&self.test, i, w) * self.test.labels[i] > 0.0)
            .count();
        correct as f64 / n as f64
    }
}

impl Mlp {
    fn param_dim(&self) -> usize {
        self.hidden * self.inputs + 2 * self.hidden + 1
    }

    /// Returns the output logit and the hidden activations.
    fn forward(&self, x: &[f64], theta: &[f64], hidden_out: &mut [f64]) -> f64 {
        let (h, k) = (self.hidden, self.inputs);
        let w1 = &theta[..h * k];
        let b1 = &theta[h * k..h * k + h];
        let w2 = &theta[h * k + h..h * k + 2 * h];
        let b2 = theta[h * k + 2 * h];
        let mut out = b2;
        for j in 0..h {
            let z: f64 = w1[j * k..(j + 1) * k].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + b1[j];
            let a = z.tanh();
            hidden_out[j] = a;
            out += w2[j] * a;
        }
        out
    }

    fn add_sample_grad(&self, data: &Dataset, i: usize, theta: &[f64], scale: f64, out: &mut [f64], act: &mut [f64]) {
        let (h, k) = (self.hidden, self.inputs);
        let x = data.row(i);
        let y = data.labels[i];
        let o = self.forward(x, theta, act);
        let dout = -y * sigmoid(-y * o) * scale;
        let w2 = &theta[h * k + h..h * k + 2 * h];
        for j in 0..h {
            let a = act[j];
            let dz = dout * w2[j] * (1.0 - a * a);
            for (g, xv) in out[j * k..(j + 1) * k].iter_mut().zip(x) {
                *g += dz * xv;
            }
            out[h * k + j] += dz;
            out[h * k + h + j] += dout * a;
        }
        out[h * k + 2 * h] += dout;
    }

    fn loss(&self, theta: &[f64]) -> f64 {
        let mut act = vec![0.0; self.hidden];
        let n = self.train.len();
        let data: f64 = (0..n)
            .map(|i| {
                let o = self.forward(self.train.row(i), theta, &mut act);
                softplus(-self.train.labels[i] * o)
            })
            .sum::<f64>()
            / n as f64;
        data + 0.5 * self.l2 * theta.iter().map(|x| x * x).sum::<f64>()
    }

    fn accuracy(&self, theta: &[f64]) -> f64 {
        let mut act = vec![0.0; self.hidden];
        let n = self.test.len();
        let correct = (0..n)
            .filter(|&i| self.forward(self.test.row(i), theta, &mut act) * self.test.labels[i] > 0.0)
            .count();
        correct as f64 / n as f64
    }
}

impl Task {
    pub fn build(spec: &TaskSpec) -> Result<Self> {
        let model = match spec {
            TaskSpec::Quadratic(q) => {
                if q.dim == 0 {
                    return Err(Error::Config("task.dim must be >= 1".into()));
                }
                let eigenvalues = match &q.eigenvalues {
                    Some(ev) => {
                        if ev.len() != q.dim {
                            return Err(Error::Config("task.eigenvalues length must equal task.dim".into()));
                        }
                        ev.clone()
                    }
                    None => {
                        if !(q.mu > 0.0 && q.smoothness >= q.mu) {
                            return Err(Error::Config("task requires 0 < mu <= smoothness".into()));
                        }
                        if q.dim == 1 {
                            vec![q.smoothness]
                        } else {
                            let ratio = q.smoothness / q.mu;
                            (0..q.dim)
                                .map(|i| q.mu * ratio.powf(i as f64 / (q.dim - 1) as f64))
                                .collect()
                        }
                    }
                };
                if eigenvalues.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
                    return Err(Error::Config("task eigenvalues must be positive".into()));
                }
                if q.noise < 0.0 {
                    return Err(Error::Config("task.noise must be >= 0".into()));
                }
                Model::Quadratic(Quadratic {
                    eigenvalues,
                    noise: q.noise,
                    fstar: q.fstar,
                    init: q.init,
                })
            }
            TaskSpec::Logistic(s) => {
                check_dataset(s.dim, s.samples, s.label_noise, s.l2, s.noise)?;
                let mut dir_stream = RngStream::with_tag(s.data_seed, 0, 0, INIT_LANE);
                let mut direction = dir_stream.normal_vec(s.dim);
                let norm = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
                direction.iter_mut().for_each(|x| *x /= norm);
                let n_test = s.test_samples.unwrap_or(s.samples.div_ceil(4).max(1));
                let train = gaussian_classes(
                    s.samples,
                    s.dim,
                    s.separation,
                    s.label_noise,
                    &direction,
                    &mut RngStream::with_tag(s.data_seed, 0, 0, TRAIN_LANE),
                );
                let test = gaussian_classes(
                    n_test,
                    s.dim,
                    s.separation,
                    s.label_noise,
                    &direction,
                    &mut RngStream::with_tag(s.data_seed, 0, 0, TEST_LANE),
                );
                Model::Logistic(Logistic { train, test, l2: s.l2, noise: s.noise })
            }
            TaskSpec::Mlp(s) => {
                check_dataset(s.dim, s.samples, s.label_noise, s.l2, s.noise)?;
                if s.dim < 2 || s.hidden == 0 {
                    return Err(Error::Config("mlp task requires dim >= 2 and hidden >= 1".into()));
                }
                let n_test = s.test_samples.unwrap_or(s.samples.div_ceil(4).max(1));
                let train = xor_clusters(
                    s.samples,
                    s.dim,
                    s.separation,
                    s.label_noise,
                    &mut RngStream::with_tag(s.data_seed, 0, 0, TRAIN_LANE),
                );
                let test = xor_clusters(
                    n_test,
                    s.dim,
                    s.separation,
                    s.label_noise,
                    &mut RngStream::with_tag(s.data_seed, 0, 0, TEST_LANE),
                );
                let mut mlp = Mlp {
                    train,
                    test,
                    inputs: s.dim,
                    hidden: s.hidden,
                    l2: s.l2,
                    noise: s.noise,
                    w0: Vec::new(),
                };
                let mut init = RngStream::with_tag(s.data_seed, 0, 0, INIT_LANE);
                mlp.w0 = (0..mlp.param_dim())
                    .map(|_| s.init_scale * init.standard_normal())
                    .collect();
                Model::Mlp(mlp)
            }
        };
        Ok(Self { spec: spec.clone(), model })
    }

    pub fn spec(&self) -> &TaskSpec {
        &self.spec
    }

    /// Parameter dimension.
    pub fn dim(&self) -> usize {
        match &self.model {
            Model::Quadratic(q) => q.eigenvalues.len(),
            Model::Logistic(l) => l.train.width,
            Model::Mlp(m) => m.param_dim(),
        }
    }

    /// Training-set size; `None` for the analytic quadratic task.
    pub fn dataset_len(&self) -> Option<usize> {
        match &self.model {
            Model::Quadratic(_) => None,
            Model::Logistic(l) => Some(l.train.len()),
            Model::Mlp(m) => Some(m.train.len()),
        }
    }

    pub fn initial_point(&self) -> ParamVector {
        let v = match &self.model {
            Model::Quadratic(q) => vec![q.init; q.eigenvalues.len()],
            Model::Logistic(l) => vec![0.0; l.train.width],
            Model::Mlp(m) => m.w0.clone(),
        };
        ParamVector::new(v).expect("initial point is finite")
    }

    /// Known minimizer, quadratic task only.
    pub fn minimizer(&self) -> Option<ParamVector> {
        match &self.model {
            Model::Quadratic(q) => Some(ParamVector::zeros(q.eigenvalues.len())),
            _ => None,
        }
    }

    /// Lower bound on the objective: exact for the quadratic task, zero for
    /// the (nonnegative) classification losses.
    pub fn fstar(&self) -> f64 {
        match &self.model {
            Model::Quadratic(q) => q.fstar,
            _ => 0.0,
        }
    }

    fn check(&self, w: &ParamVector) -> Result<()> {
        if w.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), actual: w.dim() });
        }
        Ok(())
    }

    pub fn loss(&self, w: &ParamVector) -> Result<f64> {
        self.check(w)?;
        let w = w.as_slice();
        Ok(match &self.model {
            Model::Quadratic(q) => q.loss(w),
            Model::Logistic(l) => l.loss(w),
            Model::Mlp(m) => m.loss(w),
        })
    }

    /// Exact gradient of the population (quadratic) or dataset objective.
    pub fn full_gradient(&self, w: &ParamVector) -> Result<ParamVector> {
        self.check(w)?;
        let all: Vec<usize> = match self.dataset_len() {
            Some(n) => (0..n).collect(),
            None => return ParamVector::new(self.quadratic().grad(w.as_slice())),
        };
        self.index_gradient(w, &all)
    }

    fn quadratic(&self) -> &Quadratic {
        match &self.model {
            Model::Quadratic(q) => q,
            _ => unreachable!("quadratic accessor on dataset task"),
        }
    }

    /// Mean per-sample gradient over the given training indices, without the
    /// extra additive noise. Dataset tasks only.
    pub fn index_gradient(&self, w: &ParamVector, indices: &[usize]) -> Result<ParamVector> {
        self.check(w)?;
        if indices.is_empty() {
            return Err(Error::Empty("sample indices"));
        }
        let theta = w.as_slice();
        let scale = 1.0 / indices.len() as f64;
        let mut out = vec![0.0; theta.len()];
        match &self.model {
            Model::Quadratic(_) => return Err(Error::invalid("quadratic task has no dataset")),
            Model::Logistic(l) => {
                for &i in indices {
                    l.add_sample_grad(i, theta, scale, &mut out);
                }
                for (o, x) in out.iter_mut().zip(theta) {
                    *o += l.l2 * x;
                }
            }
            Model::Mlp(m) => {
                let mut act = vec![0.0; m.hidden];
                for &i in indices {
                    m.add_sample_grad(&m.train, i, theta, scale, &mut out, &mut act);
                }
                for (o, x) in out.iter_mut().zip(theta) {
                    *o += m.l2 * x;
                }
            }
        }
        ParamVector::new(out)
    }

    fn noise_scale(&self) -> f64 {
        match &self.model {
            Model::Quadratic(q) => q.noise,
            Model::Logistic(l) => l.noise,
            Model::Mlp(m) => m.noise,
        }
    }

    /// Draws `batch` sample indices (with replacement) from `stream`.
    pub fn draw_indices(&self, batch: usize, stream: &mut RngStream) -> Vec<usize> {
        let n = self.dataset_len().unwrap_or(1);
        (0..batch).map(|_| stream.index(n)).collect()
    }

    /// Mean of `batch` i.i.d. per-sample gradients at `w`.
    ///
    /// Dataset tasks draw indices first, then (if configured) additive noise
    /// from the same stream. The quadratic task draws the averaged noise of
    /// `batch` samples directly, which has the same law as averaging
    /// `batch` isotropic draws.
    pub fn stochastic_gradient(&self, w: &ParamVector, batch: usize, stream: &mut RngStream) -> Result<ParamVector> {
        self.check(w)?;
        if batch == 0 {
            return Err(Error::invalid("batch size must be >= 1"));
        }
        let mut g = match self.dataset_len() {
            None => self.quadratic().grad(w.as_slice()),
            Some(_) => {
                let idx = self.draw_indices(batch, stream);
                self.index_gradient(w, &idx)?.into_inner()
            }
        };
        let s = self.noise_scale();
        if s > 0.0 {
            let k = s / (batch as f64).sqrt();
            for gi in g.iter_mut() {
                *gi += k * stream.standard_normal();
            }
        }
        ParamVector::new(g)
    }

    /// Exact per-sample gradient variance `E‖∇f(w,ξ) - ∇F(w)‖²` at `w`.
    pub fn sample_variance(&self, w: &ParamVector) -> Result<f64> {
        self.check(w)?;
        let extra = self.noise_scale().powi(2) * self.dim() as f64;
        let n = match self.dataset_len() {
            None => return Ok(extra),
            Some(n) => n,
        };
        let full = self.full_gradient(w)?;
        let mut total = 0.0;
        for i in 0..n {
            let gi = self.index_gradient(w, &[i])?;
            total += gi.dist_sq(&full)?;
        }
        Ok(total / n as f64 + extra)
    }

    pub fn evaluate(&self, w: &ParamVector) -> Result<Evaluation> {
        let loss = self.loss(w)?;
        let accuracy = match &self.model {
            Model::Quadratic(_) => None,
            Model::Logistic(l) => Some(l.accuracy(w.as_slice())),
            Model::Mlp(m) => Some(m.accuracy(w.as_slice())),
        };
        Ok(Evaluation { loss, accuracy })
    }

    /// Closed-form constants; quadratic task only.
    pub fn exact_constants(&self) -> Option<TaskConstants> {
        let q = match &self.model {
            Model::Quadratic(q) => q,
            _ => return None,
        };
        let w0 = self.initial_point();
        Some(TaskConstants {
            l_smooth: q.eigenvalues.iter().cloned().fold(f64::MIN, f64::max),
            sigma2: q.noise * q.noise * q.eigenvalues.len() as f64,
            f0: q.loss(w0.as_slice()) - q.fstar,
            fstar: q.fstar,
            exact: true,
        })
    }

    /// Probe-based constants.
    ///
    /// Probe points are `w0 + z_j` with `z_j` standard normal, drawn from
    /// forks of `stream` so a larger probe count always contains the smaller
    /// probe set. `L` is exact for the quadratic task and otherwise the largest
    /// gradient-difference quotient over probe pairs. `σ²` is the largest
    /// per-sample variance over probes: exact over the dataset for
    /// classification tasks, Monte-Carlo (10⁴ single-sample draws per probe)
    /// for the quadratic task.
    pub fn estimate_constants(&self, probes: usize, stream: &RngStream) -> Result<TaskConstants> {
        if probes < 2 {
            return Err(Error::invalid("estimate_constants needs at least 2 probes"));
        }
        let w0 = self.initial_point();
        let points: Vec<ParamVector> = (0..probes)
            .map(|j| {
                let mut s = stream.fork(j as u64);
                let z = ParamVector::new(s.normal_vec(self.dim())).expect("finite");
                w0.add(&z)
            })
            .collect::<Result<_>>()?;
        let grads: Vec<ParamVector> = points.iter().map(|p| self.full_gradient(p)).collect::<Result<_>>()?;

        let (l_smooth, exact) = match self.exact_constants() {
            Some(c) => (c.l_smooth, true),
            None => {
                let mut best = 0.0f64;
                for i in 0..probes {
                    for j in i + 1..probes {
                        let num = grads[i].dist_sq(&grads[j])?.sqrt();
                        let den = points[i].dist_sq(&points[j])?.sqrt();
                        if den > 0.0 {
                            best = best.max(num / den);
                        }
                    }
                }
                (best, false)
            }
        };

        let mut sigma2 = 0.0f64;
        for (j, (p, g)) in points.iter().zip(&grads).enumerate() {
            let v = if self.dataset_len().is_some() {
                self.sample_variance(p)?
            } else {
                let mut s = stream.fork(probes as u64 + j as u64);
                let draws = 10_000;
                let mut acc = 0.0;
                for _ in 0..draws {
                    acc += self.stochastic_gradient(p, 1, &mut s)?.dist_sq(g)?;
                }
                acc / draws as f64
            };
            sigma2 = sigma2.max(v);
        }

        let fstar = self.fstar();
        Ok(TaskConstants {
            l_smooth,
            sigma2,
            f0: self.loss(&w0)? - fstar,
            fstar,
            exact: exact && self.noise_scale() == 0.0,
        })
    }
}

fn check_dataset(dim: usize, samples: usize, label_noise: f64, l2: f64, noise: f64) -> Result<()> {
    if dim == 0 || samples == 0 {
        return Err(Error::Config("task.dim and task.samples must be >= 1".into()));
    }
    if !(0.0..=0.5).contains(&label_noise) {
        return Err(Error::Config("task.label_noise must be in [0, 0.5]".into()));
    }
    if l2 < 0.0 || noise < 0.0 {
        return Err(Error::Config("task.l2 and task.noise must be >= 0".into()));
    }
    Ok(())
}
