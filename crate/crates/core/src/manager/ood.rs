//! Autoencoder out-of-domain gate.
//!
//! A one-hidden-layer autoencoder is fit to in-domain query embeddings. A
//! query whose reconstruction error exceeds `mu + lambda * sigma` (mean and
//! population standard deviation of the training errors) is out of domain.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::embedding::{EmbedderSpec, Embedding};
use crate::error::{Error, Result};
use crate::rng::seeded_rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OodConfig {
    #[serde(default = "default_hidden_dim")]
    pub hidden_dim: usize,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_hidden_dim() -> usize {
    64
}
fn default_lambda() -> f64 {
    4.0
}
fn default_epochs() -> usize {
    500
}
fn default_learning_rate() -> f64 {
    0.01
}

impl Default for OodConfig {
    fn default() -> Self {
        OodConfig {
            hidden_dim: default_hidden_dim(),
            lambda: default_lambda(),
            epochs: default_epochs(),
            learning_rate: default_learning_rate(),
            seed: 0,
        }
    }
}

impl OodConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_dim == 0 {
            return Err(Error::Config("hidden_dim must be at least 1".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if !self.lambda.is_finite() {
            return Err(Error::Config("lambda must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Tanh,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the activation output.
    fn grad_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
        }
    }
}

/// Encoder `W1` (H x D, `b1`) and decoder `W2` (D x H, `b2`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoencoderParams {
    pub w1: Vec<Vec<f64>>,
    pub b1: Vec<f64>,
    pub w2: Vec<Vec<f64>>,
    pub b2: Vec<f64>,
    #[serde(default)]
    pub activation: Activation,
}

impl AutoencoderParams {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        AutoencoderParams {
            w1: vec![vec![0.0; input_dim]; hidden_dim],
            b1: vec![0.0; hidden_dim],
            w2: vec![vec![0.0; hidden_dim]; input_dim],
            b2: vec![0.0; input_dim],
            activation: Activation::Tanh,
        }
    }

    /// Xavier-uniform weights, zero biases.
    pub fn xavier(input_dim: usize, hidden_dim: usize, seed: u64) -> Self {
        let mut rng = seeded_rng(seed, "ood-init");
        let limit = (6.0 / (input_dim + hidden_dim) as f64).sqrt();
        let mut p = AutoencoderParams::zeros(input_dim, hidden_dim);
        for row in p.w1.iter_mut() {
            for w in row.iter_mut() {
                *w = rng.gen_range(-limit..limit);
            }
        }
        for row in p.w2.iter_mut() {
            for w in row.iter_mut() {
                *w = rng.gen_range(-limit..limit);
            }
        }
        p
    }

    pub fn input_dim(&self) -> usize {
        self.b2.len()
    }

    pub fn hidden_dim(&self) -> usize {
        self.b1.len()
    }

    /// Checks matrix shapes and finiteness.
    pub fn check(&self) -> Result<()> {
        let d = self.input_dim();
        let h = self.hidden_dim();
        let shapes_ok = self.w1.len() == h
            && self.w1.iter().all(|r| r.len() == d)
            && self.w2.len() == d
            && self.w2.iter().all(|r| r.len() == h);
        if !shapes_ok || d == 0 || h == 0 {
            return Err(Error::InvalidInput("autoencoder weight shapes are inconsistent".into()));
        }
        let all_finite = self
            .w1
            .iter()
            .chain(self.w2.iter())
            .flatten()
            .chain(self.b1.iter())
            .chain(self.b2.iter())
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::InvalidInput("autoencoder has non-finite weights".into()));
        }
        Ok(())
    }

    fn hidden(&self, x: &[f64]) -> Vec<f64> {
        self.w1
            .iter()
            .zip(&self.b1)
            .map(|(row, b)| {
                let z: f64 = row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + b;
                self.activation.apply(z)
            })
            .collect()
    }

    fn decode(&self, h: &[f64]) -> Vec<f64> {
        self.w2
            .iter()
            .zip(&self.b2)
            .map(|(row, b)| {
                let z: f64 = row.iter().zip(h).map(|(w, hi)| w * hi).sum::<f64>() + b;
                self.activation.apply(z)
            })
            .collect()
    }

    fn forward_raw(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: x.len(),
            });
        }
        Ok(self.decode(&self.hidden(x)))
    }

    fn error_raw(&self, x: &[f64]) -> Result<f64> {
        let xhat = self.forward_raw(x)?;
        Ok(x.iter()
            .zip(&xhat)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }
}

/// Reconstruction `sigma(W2 sigma(W1 x + b1) + b2)`.
pub fn ae_forward(params: &AutoencoderParams, x: &Embedding) -> Result<Vec<f64>> {
    params.forward_raw(x.values())
}

/// Euclidean distance between `x` and its reconstruction.
pub fn reconstruction_error(params: &AutoencoderParams, x: &Embedding) -> Result<f64> {
    params.error_raw(x.values())
}

/// Trained detector plus its calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OodModel {
    #[serde(flatten)]
    pub params: AutoencoderParams,
    pub mu: f64,
    pub sigma: f64,
    pub lambda: f64,
    pub threshold: f64,
    pub embedder: EmbedderSpec,
}

/// Mean and population standard deviation.
pub fn mean_and_population_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl OodModel {
    /// Builds a model whose threshold is `mu + lambda * sigma` of
    /// `training_errors`.
    pub fn calibrate(
        params: AutoencoderParams,
        training_errors: &[f64],
        lambda: f64,
        embedder: EmbedderSpec,
    ) -> Result<Self> {
        if training_errors.is_empty() {
            return Err(Error::TooFewSamples { needed: 1, got: 0 });
        }
        let (mu, sigma) = mean_and_population_std(training_errors);
        Ok(OodModel {
            params,
            mu,
            sigma,
            lambda,
            threshold: mu + lambda * sigma,
            embedder,
        })
    }

    /// Same autoencoder and error statistics, different `lambda`.
    pub fn with_lambda(&self, lambda: f64) -> Self {
        OodModel {
            lambda,
            threshold: self.mu + lambda * self.sigma,
            ..self.clone()
        }
    }

    pub fn classify(&self, x: &Embedding) -> Result<OodVerdict> {
        let r = reconstruction_error(&self.params, x)?;
        Ok(OodVerdict::from_error(r, self.threshold))
    }

    pub fn check(&self) -> Result<()> {
        self.params.check()?;
        if self.embedder.dimension != self.params.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.embedder.dimension,
                actual: self.params.input_dim(),
            });
        }
        if self.threshold != self.mu + self.lambda * self.sigma {
            return Err(Error::InvalidInput(
                "threshold does not equal mu + lambda * sigma".into(),
            ));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let model: OodModel = serde_json::from_str(s)?;
        model.check()?;
        Ok(model)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "error", rename_all = "snake_case")]
pub enum OodVerdict {
    InDomain(f64),
    OutOfDomain(f64),
}

impl OodVerdict {
    /// Strictly greater than the threshold is out of domain; the boundary
    /// itself stays in domain.
    pub fn from_error(r: f64, threshold: f64) -> Self {
        if r > threshold {
            OodVerdict::OutOfDomain(r)
        } else {
            OodVerdict::InDomain(r)
        }
    }

    pub fn error(self) -> f64 {
        match self {
            OodVerdict::InDomain(r) | OodVerdict::OutOfDomain(r) => r,
        }
    }

    pub fn is_out_of_domain(self) -> bool {
        matches!(self, OodVerdict::OutOfDomain(_))
    }
}

pub fn classify_ood(model: &OodModel, x: &Embedding) -> Result<OodVerdict> {
    model.classify(x)
}

/// Training output: the model plus the diagnostics it was calibrated from.
#[derive(Debug, Clone)]
pub struct TrainedOod {
    pub model: OodModel,
    /// Final per-sample reconstruction errors, in input order.
    pub training_errors: Vec<f64>,
    /// Mean squared reconstruction error before each epoch's update, then
    /// once more after the last update.
    pub loss_history: Vec<f64>,
}

impl TrainedOod {
    pub fn initial_loss(&self) -> f64 {
        self.loss_history[0]
    }

    pub fn final_loss(&self) -> f64 {
        *self.loss_history.last().unwrap()
    }
}

/// Row-major dense matrix used during training.
struct Dense {
    cols: usize,
    data: Vec<f64>,
}

impl Dense {
    fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        Dense {
            cols,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    fn zeros_like(&self) -> Self {
        Dense {
            cols: self.cols,
            data: vec![0.0; self.data.len()],
        }
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }
}

struct Workspace {
    w1: Dense,
    b1: Vec<f64>,
    w2: Dense,
    b2: Vec<f64>,
    act: Activation,
}

impl Workspace {
    fn forward(&self, x: &[f64], h: &mut [f64], y: &mut [f64]) {
        for (j, hj) in h.iter_mut().enumerate() {
            let z: f64 = self.w1.row(j).iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + self.b1[j];
            *hj = self.act.apply(z);
        }
        for (i, yi) in y.iter_mut().enumerate() {
            let z: f64 = self.w2.row(i).iter().zip(h.iter()).map(|(w, hj)| w * hj).sum::<f64>() + self.b2[i];
            *yi = self.act.apply(z);
        }
    }

    fn mean_loss(&self, xs: &[&[f64]]) -> f64 {
        let mut h = vec![0.0; self.b1.len()];
        let mut y = vec![0.0; self.b2.len()];
        let total: f64 = xs
            .iter()
            .map(|x| {
                self.forward(x, &mut h, &mut y);
                x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
            })
            .sum();
        total / xs.len() as f64
    }

    fn into_params(self) -> AutoencoderParams {
        AutoencoderParams {
            w1: self.w1.to_rows(),
            b1: self.b1,
            w2: self.w2.to_rows(),
            b2: self.b2,
            activation: self.act,
        }
    }
}

/// Full-batch gradient descent on the mean squared reconstruction error,
/// then calibration of the threshold on the final per-sample errors.
pub fn train_ood(in_domain: &[Embedding], embedder: &EmbedderSpec, cfg: &OodConfig) -> Result<TrainedOod> {
    cfg.validate()?;
    if in_domain.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: in_domain.len(),
        });
    }
    let d = in_domain[0].dim();
    for x in in_domain {
        x.check_dim(d)?;
    }
    if d != embedder.dimension {
        return Err(Error::DimensionMismatch {
            expected: embedder.dimension,
            actual: d,
        });
    }
    let xs: Vec<&[f64]> = in_domain.iter().map(Embedding::values).collect();
    let init = AutoencoderParams::xavier(d, cfg.hidden_dim, cfg.seed);
    let mut ws = Workspace {
        w1: Dense::from_rows(&init.w1),
        b1: init.b1,
        w2: Dense::from_rows(&init.w2),
        b2: init.b2,
        act: init.activation,
    };
    let hdim = cfg.hidden_dim;
    let n = xs.len() as f64;
    let mut g_w1 = ws.w1.zeros_like();
    let mut g_w2 = ws.w2.zeros_like();
    let mut g_b1 = vec![0.0; hdim];
    let mut g_b2 = vec![0.0; d];
    let mut h = vec![0.0; hdim];
    let mut y = vec![0.0; d];
    let mut dz2 = vec![0.0; d];
    let mut dz1 = vec![0.0; hdim];
    let mut loss_history = Vec::with_capacity(cfg.epochs + 1);

    for epoch in 0..cfg.epochs {
        g_w1.data.iter_mut().for_each(|g| *g = 0.0);
        g_w2.data.iter_mut().for_each(|g| *g = 0.0);
        g_b1.iter_mut().for_each(|g| *g = 0.0);
        g_b2.iter_mut().for_each(|g| *g = 0.0);
        let mut loss = 0.0;
        for x in &xs {
            ws.forward(x, &mut h, &mut y);
            for i in 0..d {
                let e = y[i] - x[i];
                loss += e * e;
                dz2[i] = 2.0 / n * e * ws.act.grad_from_output(y[i]);
            }
            for i in 0..d {
                let g = dz2[i];
                if g == 0.0 {
                    continue;
                }
                for (gw, hj) in g_w2.row_mut(i).iter_mut().zip(&h) {
                    *gw += g * hj;
                }
                g_b2[i] += g;
            }
            for j in 0..hdim {
                let back: f64 = (0..d).map(|i| ws.w2.row(i)[j] * dz2[i]).sum();
                dz1[j] = back * ws.act.grad_from_output(h[j]);
            }
            for j in 0..hdim {
                let g = dz1[j];
                for (gw, xi) in g_w1.row_mut(j).iter_mut().zip(x.iter()) {
                    *gw += g * xi;
                }
                g_b1[j] += g;
            }
        }
        loss /= n;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
        loss_history.push(loss);
        let lr = cfg.learning_rate;
        for (w, g) in ws.w1.data.iter_mut().zip(&g_w1.data) {
            *w -= lr * g;
        }
        for (w, g) in ws.w2.data.iter_mut().zip(&g_w2.data) {
            *w -= lr * g;
        }
        for (b, g) in ws.b1.iter_mut().zip(&g_b1) {
            *b -= lr * g;
        }
        for (b, g) in ws.b2.iter_mut().zip(&g_b2) {
            *b -= lr * g;
        }
        let finite = [&ws.w1.data, &ws.w2.data, &ws.b1, &ws.b2].iter().all(|v| v.iter().all(|x| x.is_finite()));
        if !finite {
            return Err(Error::NonFiniteLoss { epoch });
        }
    }
    let final_loss = ws.mean_loss(&xs);
    if !final_loss.is_finite() {
        return Err(Error::NonFiniteLoss { epoch: cfg.epochs });
    }
    loss_history.push(final_loss);

    let params = ws.into_params();
    let training_errors = xs
        .iter()
        .map(|x| params.error_raw(x))
        .collect::<Result<Vec<_>>>()?;
    let model = OodModel::calibrate(params, &training_errors, cfg.lambda, embedder.clone())?;
    Ok(TrainedOod {
        model,
        training_errors,
        loss_history,
    })
}
