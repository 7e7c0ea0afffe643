//! Branch router: a logistic linear head over query embeddings.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::embedding::{EmbedderSpec, Embedding};
use crate::error::{Error, Result};
use crate::rng::seeded_rng;
use crate::types::Route;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouterConfig {
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_l2")]
    pub l2: f64,
    /// Fraction of examples held out for the reported accuracy.
    #[serde(default = "default_holdout")]
    pub holdout_fraction: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_epochs() -> usize {
    300
}
fn default_learning_rate() -> f64 {
    1.0
}
fn default_l2() -> f64 {
    1e-4
}
fn default_holdout() -> f64 {
    0.2
}

impl Default for RouterConfig {
    fn default() -> Self {
        RouterConfig {
            epochs: default_epochs(),
            learning_rate: default_learning_rate(),
            l2: default_l2(),
            holdout_fraction: default_holdout(),
            seed: 0,
        }
    }
}

impl RouterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("router epochs must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("router learning_rate must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.holdout_fraction) {
            return Err(Error::Config("holdout_fraction must be in [0, 1)".into()));
        }
        if !(self.l2 >= 0.0) {
            return Err(Error::Config("l2 must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouterModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// `labels[0]` wins when the score is not positive.
    pub labels: [Route; 2],
    pub embedder: EmbedderSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RouteDecision {
    pub route: Route,
    /// Logistic probability of the chosen label, in [0.5, 1].
    pub confidence: f64,
    pub score: f64,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl RouterModel {
    pub fn score(&self, x: &Embedding) -> Result<f64> {
        x.check_dim(self.weights.len())?;
        Ok(self.weights.iter().zip(x.values()).map(|(w, v)| w * v).sum::<f64>() + self.bias)
    }

    pub fn route(&self, x: &Embedding) -> Result<RouteDecision> {
        let score = self.score(x)?;
        let p = sigmoid(score);
        let (route, confidence) = if score > 0.0 {
            (self.labels[1], p)
        } else {
            (self.labels[0], 1.0 - p)
        };
        Ok(RouteDecision {
            route,
            confidence,
            score,
        })
    }

    pub fn check(&self) -> Result<()> {
        if self.weights.is_empty() || !self.weights.iter().all(|w| w.is_finite()) || !self.bias.is_finite() {
            return Err(Error::InvalidInput("router weights must be finite and non-empty".into()));
        }
        if self.weights.len() != self.embedder.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.embedder.dimension,
                actual: self.weights.len(),
            });
        }
        if self.labels[0] == self.labels[1] {
            return Err(Error::InvalidInput("router labels must differ".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let model: RouterModel = serde_json::from_str(s)?;
        model.check()?;
        Ok(model)
    }
}

pub fn route(model: &RouterModel, x: &Embedding) -> Result<RouteDecision> {
    model.route(x)
}

#[derive(Debug, Clone)]
pub struct TrainedRouter {
    pub model: RouterModel,
    pub train_accuracy: f64,
    /// `None` when `holdout_fraction` is zero.
    pub holdout_accuracy: Option<f64>,
    pub train_size: usize,
    pub holdout_size: usize,
}

fn accuracy(model: &RouterModel, examples: &[&(Embedding, Route)]) -> Result<f64> {
    if examples.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0usize;
    for (x, label) in examples {
        if model.route(x)?.route == *label {
            correct += 1;
        }
    }
    Ok(correct as f64 / examples.len() as f64)
}

/// Full-batch gradient descent on the L2-regularised logistic loss.
///
/// The train/holdout split is a seeded shuffle; weights start at zero, so
/// training is deterministic for a given seed and example order.
pub fn train_router(examples: &[(Embedding, Route)], embedder: &EmbedderSpec, cfg: &RouterConfig) -> Result<TrainedRouter> {
    cfg.validate()?;
    let labels = [Route::Presenter, Route::InsightGenerator];
    if !labels.iter().all(|l| examples.iter().any(|(_, y)| y == l)) {
        return Err(Error::SingleClassData);
    }
    let d = embedder.dimension;
    for (x, _) in examples {
        x.check_dim(d)?;
    }

    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut rng = seeded_rng(cfg.seed, "router-split");
    order.shuffle(&mut rng);
    let n_holdout = (examples.len() as f64 * cfg.holdout_fraction).floor() as usize;
    let (holdout_idx, train_idx) = order.split_at(n_holdout);
    let train: Vec<&(Embedding, Route)> = train_idx.iter().map(|&i| &examples[i]).collect();
    let holdout: Vec<&(Embedding, Route)> = holdout_idx.iter().map(|&i| &examples[i]).collect();
    if !labels.iter().all(|l| train.iter().any(|(_, y)| y == l)) {
        return Err(Error::SingleClassData);
    }

    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let n = train.len() as f64;
    let mut grad = vec![0.0; d];
    for _ in 0..cfg.epochs {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut grad_b = 0.0;
        for (x, label) in &train {
            let target = if *label == labels[1] { 1.0 } else { 0.0 };
            let z: f64 = w.iter().zip(x.values()).map(|(wi, xi)| wi * xi).sum::<f64>() + b;
            let err = sigmoid(z) - target;
            for (g, xi) in grad.iter_mut().zip(x.values()) {
                *g += err * xi;
            }
            grad_b += err;
        }
        for (wi, g) in w.iter_mut().zip(&grad) {
            *wi -= cfg.learning_rate * (g / n + cfg.l2 * *wi);
        }
        b -= cfg.learning_rate * grad_b / n;
    }

    let model = RouterModel {
        weights: w,
        bias: b,
        labels,
        embedder: embedder.clone(),
    };
    let train_accuracy = accuracy(&model, &train)?;
    let holdout_accuracy = if holdout.is_empty() {
        None
    } else {
        Some(accuracy(&model, &holdout)?)
    };
    Ok(TrainedRouter {
        model,
        train_accuracy,
        holdout_accuracy,
        train_size: train.len(),
        holdout_size: holdout.len(),
    })
}
