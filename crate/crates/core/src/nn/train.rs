use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::network::Network;
use super::objective::Objective;
use super::samples::Samples;
use crate::error::{Error, Result};

/// Samples per work unit in a minibatch. Gradients are summed inside a unit
/// and units are reduced in index order, so results do not depend on the
/// thread count.
const CHUNK: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub es_threshold: f64,
    pub es_patience: usize,
    /// Stop as soon as the mean validation loss reaches this value.
    pub loss_cutoff: Option<f64>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_epochs: 200,
            batch_size: 128,
            learning_rate: 1e-3,
            es_threshold: 1e-3,
            es_patience: 30,
            loss_cutoff: None,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive and finite");
        }
        if !(self.es_threshold > 0.0) {
            return bad("es_threshold must be positive");
        }
        if self.es_patience == 0 {
            return bad("es_patience must be at least 1");
        }
        if let Some(c) = self.loss_cutoff {
            if c.is_nan() || c < 0.0 {
                return bad("loss_cutoff must be non-negative");
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxEpochs,
    EarlyStop,
    LossCutoff,
}

/// Per-epoch mean per-sample losses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    /// Validation loss of the initial weights.
    pub initial_val_loss: f64,
    /// 1-based epoch whose weights were kept; 0 means the initial weights.
    pub best_epoch: usize,
    pub stop_reason: StopReason,
}

impl TrainHistory {
    pub fn epochs(&self) -> usize {
        self.val_loss.len()
    }

    pub fn best_val_loss(&self) -> f64 {
        if self.best_epoch == 0 {
            self.initial_val_loss
        } else {
            self.val_loss[self.best_epoch - 1]
        }
    }
}

/// Counts consecutive epochs whose validation change stays below a threshold.
#[derive(Clone, Debug)]
pub struct EarlyStopping {
    threshold: f64,
    patience: usize,
    previous: Option<f64>,
    calm: usize,
}

impl EarlyStopping {
    pub fn new(threshold: f64, patience: usize) -> Self {
        Self {
            threshold,
            patience,
            previous: None,
            calm: 0,
        }
    }

    /// Feeds one epoch's validation loss; returns true when training should stop.
    pub fn observe(&mut self, loss: f64) -> bool {
        if let Some(prev) = self.previous {
            if (loss - prev).abs() < self.threshold {
                self.calm += 1;
            } else {
                self.calm = 0;
            }
        }
        self.previous = Some(loss);
        self.calm >= self.patience
    }
}

/// Mean per-sample objective over a dataset.
pub fn mean_loss<O: Objective>(net: &Network, objective: &O, data: &Samples) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    total_loss(net, objective, data) / data.len() as f64
}

/// Summed per-sample objective over a dataset.
pub fn total_loss<O: Objective>(net: &Network, objective: &O, data: &Samples) -> f64 {
    let idx: Vec<usize> = (0..data.len()).collect();
    let partial: Vec<f64> = idx
        .par_chunks(CHUNK)
        .map(|chunk| {
            chunk
                .iter()
                .map(|&i| objective.loss(net, data.input(i), data.target(i)))
                .sum::<f64>()
        })
        .collect();
    partial.iter().sum()
}

struct Adam {
    lr: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    step: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(lr: f64, n: usize) -> Self {
        Self {
            lr,
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
        }
    }

    fn update(&mut self, params: &mut [f64], grad: &[f64], ranges: &[std::ops::Range<usize>]) {
        self.step += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.step);
        let c2 = 1.0 - Self::BETA2.powi(self.step);
        for r in ranges {
            for i in r.clone() {
                let g = grad[i];
                self.m[i] = Self::BETA1 * self.m[i] + (1.0 - Self::BETA1) * g;
                self.v[i] = Self::BETA2 * self.v[i] + (1.0 - Self::BETA2) * g * g;
                let mh = self.m[i] / c1;
                let vh = self.v[i] / c2;
                params[i] -= self.lr * mh / (vh.sqrt() + Self::EPS);
            }
        }
    }
}

fn batch_gradient<O: Objective>(net: &Network, objective: &O, data: &Samples, batch: &[usize]) -> (f64, Vec<f64>) {
    let n = net.param_count();
    let parts: Vec<(f64, Vec<f64>)> = batch
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut g = vec![0.0; n];
            let loss = chunk
                .iter()
                .map(|&i| objective.loss_grad(net, data.input(i), data.target(i), &mut g))
                .sum::<f64>();
            (loss, g)
        })
        .collect();
    let mut total = vec![0.0; n];
    let mut loss = 0.0;
    for (l, g) in parts {
        loss += l;
        total.iter_mut().zip(&g).for_each(|(t, g)| *t += g);
    }
    (loss, total)
}

/// Adam on the mean minibatch objective. Keeps the best-validation weights in
/// `net` on return.
pub fn train<O: Objective>(
    net: &mut Network,
    objective: &O,
    train_set: &Samples,
    val_set: &Samples,
    config: &TrainConfig,
) -> Result<TrainHistory> {
    config.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::Config("training and validation sets must be non-empty".into()));
    }
    objective.check_dims(net, train_set.input_dim(), train_set.target_dim())?;
    objective.check_dims(net, val_set.input_dim(), val_set.target_dim())?;

    let initial_val_loss = mean_loss(net, objective, val_set);
    if !initial_val_loss.is_finite() {
        return Err(Error::TrainingDiverged { epoch: 0 });
    }
    let mut history = TrainHistory {
        train_loss: Vec::new(),
        val_loss: Vec::new(),
        initial_val_loss,
        best_epoch: 0,
        stop_reason: StopReason::MaxEpochs,
    };
    let mut best = (initial_val_loss, net.params().to_vec());
    let ranges = net.trainable_ranges();
    let mut adam = Adam::new(config.learning_rate, net.param_count());
    let mut rng = crate::seed::rng(config.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut early = EarlyStopping::new(config.es_threshold, config.es_patience);

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let (loss, mut grad) = batch_gradient(net, objective, train_set, batch);
            if !loss.is_finite() {
                return Err(Error::TrainingDiverged { epoch });
            }
            epoch_loss += loss;
            let scale = 1.0 / batch.len() as f64;
            grad.iter_mut().for_each(|g| *g *= scale);
            adam.update(net.params_mut(), &grad, &ranges);
        }
        let val = mean_loss(net, objective, val_set);
        if !val.is_finite() || net.params().iter().any(|p| !p.is_finite()) {
            return Err(Error::TrainingDiverged { epoch });
        }
        history.train_loss.push(epoch_loss / train_set.len() as f64);
        history.val_loss.push(val);
        if val < best.0 {
            best = (val, net.params().to_vec());
            history.best_epoch = epoch;
        }
        if config.loss_cutoff.is_some_and(|c| c.is_finite() && val <= c) {
            history.stop_reason = StopReason::LossCutoff;
            break;
        }
        if early.observe(val) {
            history.stop_reason = StopReason::EarlyStop;
            break;
        }
    }
    net.set_params(&best.1)?;
    Ok(history)
}
