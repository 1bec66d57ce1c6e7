use rayon::prelude::*;

use super::blend::blend;
use super::{MaskOptConfig, RiemannRule};
use crate::classifier::Classifier;
use crate::error::{Error, Result};
use crate::smoother::SmoothSequence;

/// A loss value with its gradient with respect to per-point mask values.
#[derive(Debug, Clone, PartialEq)]
pub struct LossValue {
    pub value: f64,
    pub grad: Vec<f64>,
}

/// `f_c(blend(values))` and its gradient with respect to `values`.
pub fn mask_gradient(
    seq: &SmoothSequence,
    values: &[f64],
    classifier: &dyn Classifier,
    class: usize,
    alpha: f64,
) -> Result<LossValue> {
    let (cloud, jac) = blend(seq, values, alpha)?;
    let (score, g) = classifier.score_and_gradient(&cloud, class)?;
    if g.grads.len() != jac.len() {
        return Err(Error::Classifier(format!("gradient has {} rows for {} points", g.grads.len(), jac.len())));
    }
    let grad = g.grads.iter().zip(&jac).map(|(a, b)| a.dot(*b)).collect();
    Ok(LossValue { value: score, grad })
}

fn path_times(steps: usize, rule: RiemannRule) -> Vec<f64> {
    let s = steps as f64;
    match rule {
        RiemannRule::Right => (1..=steps).map(|k| k as f64 / s).collect(),
        RiemannRule::Left => (0..steps).map(|k| k as f64 / s).collect(),
    }
}

/// Averages `f_c` along `m(t) = start(t)`, where each sample's gradient is
/// scaled by `dm/dM = slope(t)`.
fn integrate(
    seq: &SmoothSequence,
    classifier: &dyn Classifier,
    class: usize,
    config: &MaskOptConfig,
    point: impl Fn(f64, f64) -> f64 + Sync,
    slope: impl Fn(f64) -> f64 + Sync,
    mask: &[f64],
) -> Result<LossValue> {
    let times = path_times(config.integration_steps, config.riemann);
    let samples: Vec<(f64, LossValue)> = times
        .par_iter()
        .map(|&t| {
            let m: Vec<f64> = mask.iter().map(|&v| point(v, t)).collect();
            mask_gradient(seq, &m, classifier, class, config.alpha).map(|lv| (t, lv))
        })
        .collect::<Result<_>>()?;
    let scale = 1.0 / times.len() as f64;
    let mut value = 0.0;
    let mut grad = vec![0.0; mask.len()];
    for (t, lv) in &samples {
        value += lv.value * scale;
        let k = slope(*t) * scale;
        for (g, d) in grad.iter_mut().zip(&lv.grad) {
            *g += k * d;
        }
    }
    Ok(LossValue { value, grad })
}

/// Deletion loss: mean score along the path from `mask` to all ones.
pub fn l_del(
    seq: &SmoothSequence,
    mask: &[f64],
    classifier: &dyn Classifier,
    class: usize,
    config: &MaskOptConfig,
) -> Result<LossValue> {
    integrate(seq, classifier, class, config, |v, t| v + t * (1.0 - v), |t| 1.0 - t, mask)
}

/// Insertion loss: negated mean score along the path from the reversed
/// mask `1 - mask` to all zeros.
pub fn l_ins(
    seq: &SmoothSequence,
    mask: &[f64],
    classifier: &dyn Classifier,
    class: usize,
    config: &MaskOptConfig,
) -> Result<LossValue> {
    let lv = integrate(seq, classifier, class, config, |v, t| (1.0 - v) * (1.0 - t), |t| -(1.0 - t), mask)?;
    Ok(LossValue { value: -lv.value, grad: lv.grad.into_iter().map(|g| -g).collect() })
}
