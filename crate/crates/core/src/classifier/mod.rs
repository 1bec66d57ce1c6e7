//! The differentiable classifier contract used by the saliency methods,
//! plus a small trainable max-pool network that satisfies it.

mod checkpoint;
mod exchange;
mod toynet;
mod train;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{PointCloud, Vec3};

pub use checkpoint::{load_checkpoint, parse_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_VERSION};
pub use exchange::{parse_grads_csv, parse_scores_json, write_grads_csv, write_scores_json, ExchangeClassifier};
pub use toynet::{Dense, ToyNet, ToyNetShape};
pub use train::{train, TrainConfig, TrainReport};

/// Post-softmax class scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub scores: Vec<f64>,
    pub argmax: usize,
}

impl ClassScores {
    pub fn from_scores(scores: Vec<f64>) -> Self {
        let mut argmax = 0;
        for (i, &s) in scores.iter().enumerate() {
            if s > scores[argmax] {
                argmax = i;
            }
        }
        ClassScores { scores, argmax }
    }

    pub fn uniform(classes: usize) -> Self {
        Self::from_scores(vec![1.0 / classes as f64; classes])
    }
}

/// `d scores[c] / d p_i` for every point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputGradient {
    pub class: usize,
    pub grads: Vec<Vec3>,
}

/// A point-cloud classifier with exact input gradients.
///
/// Implementations must accept any point count `N >= 1`.
pub trait Classifier: Sync {
    fn num_classes(&self) -> usize;

    fn scores(&self, cloud: &PointCloud) -> Result<ClassScores>;

    fn input_gradient(&self, cloud: &PointCloud, class: usize) -> Result<InputGradient>;

    /// Score of `class` together with its input gradient.
    fn score_and_gradient(&self, cloud: &PointCloud, class: usize) -> Result<(f64, InputGradient)> {
        let s = self.scores(cloud)?;
        Ok((s.scores[class], self.input_gradient(cloud, class)?))
    }
}

pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|&z| (z - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}
