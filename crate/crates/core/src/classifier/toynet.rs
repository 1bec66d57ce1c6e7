//! A PointNet-style classifier: a shared per-point MLP, channel-wise max
//! pooling, and an MLP head with softmax output.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{softmax, ClassScores, Classifier, InputGradient};
use crate::error::{Error, Result};
use crate::geometry::{PointCloud, Vec3};

/// Fully connected layer, `weight` stored row-major as `outputs x inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Dense { inputs, outputs, weight: vec![0.0; inputs * outputs], bias: vec![0.0; outputs] }
    }

    fn he(inputs: usize, outputs: usize, rng: &mut ChaCha8Rng) -> Self {
        let normal = Normal::new(0.0, (2.0 / inputs as f64).sqrt()).expect("positive std");
        let weight = (0..inputs * outputs).map(|_| normal.sample(rng)).collect();
        Dense { inputs, outputs, weight, bias: vec![0.0; outputs] }
    }

    #[inline]
    fn forward(&self, x: &[f64], out: &mut [f64]) {
        for (o, y) in out.iter_mut().enumerate() {
            let row = &self.weight[o * self.inputs..(o + 1) * self.inputs];
            *y = self.bias[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
    }

    /// Accumulates `dW += delta x^T`, `db += delta` and returns `W^T delta`.
    fn backward(&self, x: &[f64], delta: &[f64], grads: Option<&mut Dense>) -> Vec<f64> {
        if let Some(g) = grads {
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                g.bias[o] += d;
                let row = &mut g.weight[o * self.inputs..(o + 1) * self.inputs];
                for (w, &v) in row.iter_mut().zip(x) {
                    *w += d * v;
                }
            }
        }
        let mut dx = vec![0.0; self.inputs];
        for (o, &d) in delta.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            let row = &self.weight[o * self.inputs..(o + 1) * self.inputs];
            for (acc, &w) in dx.iter_mut().zip(row) {
                *acc += w * d;
            }
        }
        dx
    }

    pub(crate) fn check(&self, what: &str) -> Result<()> {
        if self.weight.len() != self.inputs * self.outputs || self.bias.len() != self.outputs {
            return Err(Error::Parameter(format!(
                "{what}: expected {}x{} weights and {} biases, found {} and {}",
                self.outputs,
                self.inputs,
                self.outputs,
                self.weight.len(),
                self.bias.len()
            )));
        }
        if self.weight.iter().chain(&self.bias).any(|v| !v.is_finite()) {
            return Err(Error::Parameter(format!("{what}: non-finite parameter")));
        }
        Ok(())
    }
}

#[inline]
fn relu(xs: &mut [f64]) {
    for x in xs {
        if *x <= 0.0 {
            *x = 0.0;
        }
    }
}

/// Layer widths. The encoder maps xyz through `encoder` widths (ReLU after
/// each); the head maps the pooled feature through `head` hidden widths
/// (ReLU) to `classes` logits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToyNetShape {
    pub encoder: Vec<usize>,
    pub head: Vec<usize>,
    pub classes: usize,
}

impl ToyNetShape {
    pub fn new(classes: usize) -> Self {
        ToyNetShape { encoder: vec![32, 64], head: vec![32], classes }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyNet {
    pub encoder: Vec<Dense>,
    pub head: Vec<Dense>,
    pub seed: u64,
}

/// Intermediate values of one forward pass.
pub(crate) struct ForwardCache {
    pooled: Vec<f64>,
    /// Point selected by each pooled channel (lowest index on ties).
    argmax: Vec<usize>,
    /// Inputs to each head layer, starting with `pooled`.
    head_inputs: Vec<Vec<f64>>,
    pub(crate) logits: Vec<f64>,
}

impl ToyNet {
    pub fn new(shape: &ToyNetShape, seed: u64) -> Result<Self> {
        if shape.encoder.is_empty() || shape.classes == 0 || shape.encoder.iter().chain(&shape.head).any(|&w| w == 0) {
            return Err(Error::Parameter("toy network widths and class count must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut encoder = vec![];
        let mut prev = 3;
        for &w in &shape.encoder {
            encoder.push(Dense::he(prev, w, &mut rng));
            prev = w;
        }
        let mut head = vec![];
        for &w in shape.head.iter().chain(std::iter::once(&shape.classes)) {
            head.push(Dense::he(prev, w, &mut rng));
            prev = w;
        }
        Ok(ToyNet { encoder, head, seed })
    }

    pub fn shape(&self) -> ToyNetShape {
        ToyNetShape {
            encoder: self.encoder.iter().map(|d| d.outputs).collect(),
            head: self.head[..self.head.len() - 1].iter().map(|d| d.outputs).collect(),
            classes: self.head.last().map_or(0, |d| d.outputs),
        }
    }

    /// Checks layer shapes chain correctly and all parameters are finite.
    pub fn validate(&self) -> Result<()> {
        if self.encoder.is_empty() || self.head.is_empty() {
            return Err(Error::Parameter("network needs at least one encoder and one head layer".into()));
        }
        let mut prev = 3;
        for (i, d) in self.encoder.iter().enumerate() {
            d.check(&format!("encoder[{i}]"))?;
            if d.inputs != prev {
                return Err(Error::Parameter(format!("encoder[{i}]: expects {} inputs, previous layer gives {prev}", d.inputs)));
            }
            prev = d.outputs;
        }
        for (i, d) in self.head.iter().enumerate() {
            d.check(&format!("head[{i}]"))?;
            if d.inputs != prev {
                return Err(Error::Parameter(format!("head[{i}]: expects {} inputs, previous layer gives {prev}", d.inputs)));
            }
            prev = d.outputs;
        }
        if prev == 0 {
            return Err(Error::Parameter("network has zero classes".into()));
        }
        Ok(())
    }

    fn feature_width(&self) -> usize {
        self.encoder.last().map_or(3, |d| d.outputs)
    }

    /// Post-ReLU activations of every encoder layer for one point.
    fn encode(&self, p: Vec3) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.encoder.len());
        let mut x = p.to_array().to_vec();
        for d in &self.encoder {
            let mut y = vec![0.0; d.outputs];
            d.forward(&x, &mut y);
            relu(&mut y);
            acts.push(y.clone());
            x = y;
        }
        acts
    }

    pub(crate) fn forward_cache(&self, cloud: &PointCloud) -> ForwardCache {
        let width = self.feature_width();
        let mut pooled = vec![f64::NEG_INFINITY; width];
        let mut argmax = vec![0usize; width];
        let max_width = self.encoder.iter().map(|d| d.outputs).max().unwrap_or(3).max(3);
        let mut a = vec![0.0; max_width];
        let mut b = vec![0.0; max_width];
        for (i, p) in cloud.points().iter().enumerate() {
            a[..3].copy_from_slice(&p.to_array());
            let mut len = 3;
            for d in &self.encoder {
                d.forward(&a[..len], &mut b[..d.outputs]);
                relu(&mut b[..d.outputs]);
                len = d.outputs;
                std::mem::swap(&mut a, &mut b);
            }
            for (j, &v) in a[..width].iter().enumerate() {
                if v > pooled[j] {
                    pooled[j] = v;
                    argmax[j] = i;
                }
            }
        }
        let mut head_inputs = Vec::with_capacity(self.head.len());
        let mut x = pooled.clone();
        for (li, d) in self.head.iter().enumerate() {
            let mut y = vec![0.0; d.outputs];
            d.forward(&x, &mut y);
            if li + 1 < self.head.len() {
                relu(&mut y);
            }
            head_inputs.push(std::mem::replace(&mut x, y));
        }
        ForwardCache { pooled, argmax, head_inputs, logits: x }
    }

    pub fn logits(&self, cloud: &PointCloud) -> Vec<f64> {
        self.forward_cache(cloud).logits
    }

    /// Points that some pooled channel selected.
    pub fn selected_points(&self, cloud: &PointCloud) -> Vec<usize> {
        let mut idx = self.forward_cache(cloud).argmax;
        idx.sort_unstable();
        idx.dedup();
        idx
    }

    /// Max-pool winners per channel followed by the on/off state of the
    /// head ReLUs and of the encoder ReLUs of the winning points. Scores are
    /// smooth in the input coordinates wherever this stays constant.
    pub fn activation_pattern(&self, cloud: &PointCloud) -> (Vec<usize>, Vec<bool>) {
        let cache = self.forward_cache(cloud);
        let mut on: Vec<bool> = cache.head_inputs[1..].iter().flatten().map(|&v| v > 0.0).collect();
        for i in self.selected_points(cloud) {
            on.extend(self.encode(cloud.point(i)).iter().flatten().map(|&v| v > 0.0));
        }
        (cache.argmax, on)
    }

    /// Backpropagates `dlogits` to the input coordinates, accumulating
    /// parameter gradients into `grads` when given.
    pub(crate) fn backward(
        &self,
        cloud: &PointCloud,
        cache: &ForwardCache,
        dlogits: &[f64],
        mut grads: Option<&mut ToyNet>,
    ) -> Vec<Vec3> {
        let mut delta = dlogits.to_vec();
        for li in (0..self.head.len()).rev() {
            let x = &cache.head_inputs[li];
            let g = grads.as_deref_mut().map(|g| &mut g.head[li]);
            let mut dx = self.head[li].backward(x, &delta, g);
            // Head inputs after the first are ReLU outputs; the first is the
            // pooled feature, itself a max over ReLU outputs.
            for (d, &v) in dx.iter_mut().zip(x) {
                if v <= 0.0 {
                    *d = 0.0;
                }
            }
            delta = dx;
        }

        // Route pooled gradients to the selected points, grouped per point.
        let mut per_point: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for (j, &d) in delta.iter().enumerate() {
            if d != 0.0 && cache.pooled[j] > 0.0 {
                per_point.entry(cache.argmax[j]).or_insert_with(|| vec![0.0; delta.len()])[j] += d;
            }
        }

        let mut input = vec![Vec3::ZERO; cloud.len()];
        for (i, upstream) in per_point {
            let p = cloud.point(i);
            let acts = self.encode(p);
            let coords = p.to_array();
            let mut delta = upstream;
            for li in (0..self.encoder.len()).rev() {
                let x: &[f64] = if li == 0 { &coords } else { &acts[li - 1] };
                let g = grads.as_deref_mut().map(|g| &mut g.encoder[li]);
                let mut dx = self.encoder[li].backward(x, &delta, g);
                if li > 0 {
                    for (d, &v) in dx.iter_mut().zip(&acts[li - 1]) {
                        if v <= 0.0 {
                            *d = 0.0;
                        }
                    }
                }
                delta = dx;
            }
            input[i] = Vec3::new(delta[0], delta[1], delta[2]);
        }
        input
    }

    /// Network with the same shapes and all parameters zero.
    pub fn zeros_like(&self) -> ToyNet {
        ToyNet {
            encoder: self.encoder.iter().map(|d| Dense::zeros(d.inputs, d.outputs)).collect(),
            head: self.head.iter().map(|d| Dense::zeros(d.inputs, d.outputs)).collect(),
            seed: self.seed,
        }
    }

    /// All parameters, layer by layer (weights then biases).
    pub fn params(&self) -> impl Iterator<Item = &f64> {
        self.encoder
            .iter()
            .chain(&self.head)
            .flat_map(|d| d.weight.iter().chain(d.bias.iter()))
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.encoder
            .iter_mut()
            .chain(self.head.iter_mut())
            .flat_map(|d| d.weight.iter_mut().chain(d.bias.iter_mut()))
    }

    /// Cross-entropy `-log softmax(logits)[label]` and its parameter gradient.
    pub fn loss_gradient(&self, cloud: &PointCloud, label: usize) -> (f64, ToyNet) {
        let cache = self.forward_cache(cloud);
        let s = softmax(&cache.logits);
        let loss = -s[label].max(f64::MIN_POSITIVE).ln();
        let mut dlogits = s;
        dlogits[label] -= 1.0;
        let mut grads = self.zeros_like();
        self.backward(cloud, &cache, &dlogits, Some(&mut grads));
        (loss, grads)
    }
}

impl Classifier for ToyNet {
    fn num_classes(&self) -> usize {
        self.head.last().map_or(0, |d| d.outputs)
    }

    fn scores(&self, cloud: &PointCloud) -> Result<ClassScores> {
        Ok(ClassScores::from_scores(softmax(&self.logits(cloud))))
    }

    fn input_gradient(&self, cloud: &PointCloud, class: usize) -> Result<InputGradient> {
        Ok(self.score_and_gradient(cloud, class)?.1)
    }

    fn score_and_gradient(&self, cloud: &PointCloud, class: usize) -> Result<(f64, InputGradient)> {
        let c = self.num_classes();
        if class >= c {
            return Err(Error::Parameter(format!("class {class} out of range for {c} classes")));
        }
        let cache = self.forward_cache(cloud);
        let s = softmax(&cache.logits);
        // d s_c / d z_k = s_c (delta_ck - s_k)
        let dlogits: Vec<f64> = (0..c)
            .map(|k| s[class] * (if k == class { 1.0 } else { 0.0 } - s[k]))
            .collect();
        let grads = self.backward(cloud, &cache, &dlogits, None);
        Ok((s[class], InputGradient { class, grads }))
    }
}
