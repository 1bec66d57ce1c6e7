//! Mini-batch Adam training of [`ToyNet`] on labeled clouds.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Classifier, ToyNet, ToyNetShape};
use crate::error::{Error, Result};
use crate::geometry::PointCloud;

/// Minimum examples per class accepted by [`train`].
pub const MIN_EXAMPLES_PER_CLASS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Share of each class held out for validation.
    pub validation_fraction: f64,
    pub encoder: Vec<usize>,
    pub head: Vec<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            batch_size: 32,
            learning_rate: 2e-3,
            seed: 0,
            validation_fraction: 0.2,
            encoder: vec![32, 64],
            head: vec![32],
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Parameter("epochs and batch_size must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Parameter(format!("learning_rate must be positive, got {}", self.learning_rate)));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::Parameter(format!(
                "validation_fraction must lie in [0, 1), got {}",
                self.validation_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub train_accuracy: f64,
    pub validation_accuracy: f64,
    /// Mean training cross-entropy per epoch.
    pub epoch_losses: Vec<f64>,
    pub train_size: usize,
    pub validation_size: usize,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize) -> Self {
        Adam { m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    fn step(&mut self, net: &mut ToyNet, grads: &ToyNet, lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        for (((p, &g), m), v) in net.params_mut().zip(grads.params()).zip(&mut self.m).zip(&mut self.v) {
            *m = Self::BETA1 * *m + (1.0 - Self::BETA1) * g;
            *v = Self::BETA2 * *v + (1.0 - Self::BETA2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + Self::EPS);
        }
    }
}

/// Stratified split: from each class, a deterministic shuffle puts the
/// first `ceil(fraction * n_c)` examples (leaving at least one for
/// training) into validation.
fn split(labels: &[usize], classes: usize, fraction: f64, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
    let mut train = vec![];
    let mut val = vec![];
    for c in 0..classes {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        idx.shuffle(rng);
        let n_val = ((fraction * idx.len() as f64).ceil() as usize).min(idx.len() - 1);
        val.extend_from_slice(&idx[..n_val]);
        train.extend_from_slice(&idx[n_val..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

fn accuracy(net: &ToyNet, data: &[(PointCloud, usize)], idx: &[usize]) -> Result<f64> {
    if idx.is_empty() {
        return Ok(f64::NAN);
    }
    let hits: Vec<bool> = idx
        .par_iter()
        .map(|&i| net.scores(&data[i].0).map(|s| s.argmax == data[i].1))
        .collect::<Result<_>>()?;
    Ok(hits.iter().filter(|&&h| h).count() as f64 / idx.len() as f64)
}

/// Trains a fresh network on `data` (cloud, label) pairs.
///
/// Per-example gradients are computed in parallel and summed in batch
/// order, so results do not depend on the thread count.
pub fn train(data: &[(PointCloud, usize)], config: &TrainConfig) -> Result<(ToyNet, TrainReport)> {
    config.validate()?;
    let labels: Vec<usize> = data.iter().map(|d| d.1).collect();
    let classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    if classes == 0 {
        return Err(Error::Parameter("training set is empty".into()));
    }
    for c in 0..classes {
        let n = labels.iter().filter(|&&l| l == c).count();
        if n < MIN_EXAMPLES_PER_CLASS {
            return Err(Error::Parameter(format!(
                "class {c} has {n} examples, at least {MIN_EXAMPLES_PER_CLASS} required"
            )));
        }
    }

    let shape = ToyNetShape { encoder: config.encoder.clone(), head: config.head.clone(), classes };
    let mut net = ToyNet::new(&shape, config.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_0000_0001_u64);
    let (train_idx, val_idx) = split(&labels, classes, config.validation_fraction, &mut rng);
    let mut adam = Adam::new(net.params().count());
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut order = train_idx.clone();

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for (b, batch) in order.chunks(config.batch_size).enumerate() {
            let results: Vec<(f64, ToyNet)> =
                batch.par_iter().map(|&i| net.loss_gradient(&data[i].0, data[i].1)).collect();
            let mut grads = net.zeros_like();
            let mut batch_loss = 0.0;
            for (loss, g) in &results {
                batch_loss += loss;
                for (acc, &v) in grads.params_mut().zip(g.params()) {
                    *acc += v;
                }
            }
            let scale = 1.0 / batch.len() as f64;
            for v in grads.params_mut() {
                *v *= scale;
            }
            let grad_norm = grads.params().map(|v| v * v).sum::<f64>().sqrt();
            if !batch_loss.is_finite() || !grad_norm.is_finite() {
                return Err(Error::Training(format!(
                    "epoch {epoch}, batch {b}: loss {batch_loss}, gradient norm {grad_norm}, learning rate {}",
                    config.learning_rate
                )));
            }
            adam.step(&mut net, &grads, config.learning_rate);
            total += batch_loss;
        }
        epoch_losses.push(total / order.len() as f64);
    }

    let report = TrainReport {
        train_accuracy: accuracy(&net, data, &train_idx)?,
        validation_accuracy: accuracy(&net, data, &val_idx)?,
        epoch_losses,
        train_size: train_idx.len(),
        validation_size: val_idx.len(),
    };
    Ok((net, report))
}
