use serde::{Deserialize, Serialize};

use super::loss::{l_del, l_ins, mask_gradient, LossValue};
use super::{min_max_normalize, MaskOptConfig, SaliencyMask};
use crate::classifier::Classifier;
use crate::error::{Error, Result};
use crate::smoother::SmoothSequence;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskOutcome {
    pub mask: SaliencyMask,
    /// Objective value before each optimizer step.
    pub loss_trace: Vec<f64>,
}

/// Adds the l1 term (mean of anchor values) and pulls the per-point
/// gradient back to the anchors.
fn with_l1(mask: &SaliencyMask, lv: LossValue, lambda: f64) -> (f64, Vec<f64>) {
    let a = mask.values.len() as f64;
    let value = lv.value + lambda * mask.l1_mass();
    let mut g = mask.pull_back(&lv.grad);
    for x in &mut g {
        *x += lambda / a;
    }
    (value, g)
}

/// Clamped momentum descent from the all-zero mask.
fn descend(
    start: SaliencyMask,
    steps: usize,
    config: &MaskOptConfig,
    objective: impl Fn(&SaliencyMask) -> Result<(f64, Vec<f64>)>,
) -> Result<MaskOutcome> {
    let mut mask = start;
    let mut velocity = vec![0.0; mask.values.len()];
    let mut trace = Vec::with_capacity(steps);
    for step in 0..steps {
        let (value, grad) = objective(&mask)?;
        if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Classifier(format!("non-finite objective at optimizer step {step}")));
        }
        trace.push(value);
        for ((a, v), g) in mask.values.iter_mut().zip(&mut velocity).zip(&grad) {
            *v = config.momentum * *v - config.step_size * g;
            *a = (*a + *v).clamp(0.0, 1.0);
        }
    }
    Ok(MaskOutcome { mask, loss_trace: trace })
}

/// Objective minimized by [`pci_gos`] and its gradient with respect to the
/// anchor values.
pub fn pci_gos_objective(
    seq: &SmoothSequence,
    mask: &SaliencyMask,
    classifier: &dyn Classifier,
    class: usize,
    config: &MaskOptConfig,
) -> Result<(f64, Vec<f64>)> {
    let full = mask.full();
    let del = l_del(seq, &full, classifier, class, config)?;
    let ins = l_ins(seq, &full, classifier, class, config)?;
    let sum = LossValue {
        value: del.value + ins.value,
        grad: del.grad.iter().zip(&ins.grad).map(|(a, b)| a + b).collect(),
    };
    Ok(with_l1(mask, sum, config.lambda_l1))
}

fn check(seq: &SmoothSequence, classifier: &dyn Classifier, class: usize, config: &MaskOptConfig) -> Result<SaliencyMask> {
    config.validate()?;
    if class >= classifier.num_classes() {
        return Err(Error::Parameter(format!("class {class} out of range for {} classes", classifier.num_classes())));
    }
    SaliencyMask::zeros(seq.original(), config.anchors)
}

/// Integrated-gradient mask optimization over the smoothing levels.
pub fn pci_gos(
    seq: &SmoothSequence,
    classifier: &dyn Classifier,
    class: usize,
    config: &MaskOptConfig,
) -> Result<MaskOutcome> {
    let start = check(seq, classifier, class, config)?;
    descend(start, config.opt_steps, config, |m| pci_gos_objective(seq, m, classifier, class, config))
}

/// Same optimizer, but the losses are evaluated at the mask and its
/// reverse instead of integrated along a path.
pub fn mask_only(
    seq: &SmoothSequence,
    classifier: &dyn Classifier,
    class: usize,
    config: &MaskOptConfig,
) -> Result<MaskOutcome> {
    let start = check(seq, classifier, class, config)?;
    descend(start, config.mask_only_steps, config, |m| {
        let full = m.full();
        let reverse: Vec<f64> = full.iter().map(|v| 1.0 - v).collect();
        let del = mask_gradient(seq, &full, classifier, class, config.alpha)?;
        let ins = mask_gradient(seq, &reverse, classifier, class, config.alpha)?;
        // d/dM [-f(1 - M)] = +f'(1 - M)
        let sum = LossValue {
            value: del.value - ins.value,
            grad: del.grad.iter().zip(&ins.grad).map(|(a, b)| a + b).collect(),
        };
        Ok(with_l1(m, sum, config.lambda_l1))
    })
}

/// One-shot mask: min-max normalized magnitude of the deletion-loss
/// gradient at the all-zero mask.
pub fn ig_only(
    seq: &SmoothSequence,
    classifier: &dyn Classifier,
    class: usize,
    config: &MaskOptConfig,
) -> Result<MaskOutcome> {
    let start = check(seq, classifier, class, config)?;
    let lv = l_del(seq, &start.full(), classifier, class, config)?;
    let g: Vec<f64> = start.pull_back(&lv.grad).iter().map(|g| g.abs()).collect();
    Ok(MaskOutcome { mask: start.with_values(min_max_normalize(&g)), loss_trace: vec![lv.value] })
}
