//! Smoothing-based saliency: a per-point mask picks, for every point, a
//! blend of smoothing levels; the mask is optimized against a classifier.

mod blend;
mod loss;
mod optimize;
mod zheng;

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::io::{colormap, farthest_point_sample, write_ply_file, PlyExtras};

pub use blend::{apply_mask, blend, blend_weights, endpoint_bias_bound};
pub use loss::{l_del, l_ins, mask_gradient, LossValue};
pub use optimize::{ig_only, mask_only, pci_gos, pci_gos_objective, MaskOutcome};
pub use zheng::{coordinate_median, zheng_saliency};

/// Which end of each sub-interval the integrated losses sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiemannRule {
    /// Samples at `s/steps`, `s = 1..=steps`.
    #[default]
    Right,
    /// Samples at `s/steps`, `s = 0..steps`.
    Left,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaskOptConfig {
    pub integration_steps: usize,
    pub opt_steps: usize,
    /// Optimizer steps used by [`mask_only`].
    pub mask_only_steps: usize,
    pub lambda_l1: f64,
    pub step_size: f64,
    pub momentum: f64,
    /// Concentration of the Gaussian level kernel.
    pub alpha: f64,
    pub anchors: usize,
    pub riemann: RiemannRule,
}

impl Default for MaskOptConfig {
    fn default() -> Self {
        MaskOptConfig {
            integration_steps: 20,
            opt_steps: 30,
            mask_only_steps: 300,
            lambda_l1: 0.05,
            step_size: 0.1,
            momentum: 0.9,
            alpha: 2.0,
            anchors: 256,
            riemann: RiemannRule::Right,
        }
    }
}

impl MaskOptConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::Parameter(format!("{field}: {msg}")));
        if self.integration_steps == 0 {
            return bad("integration_steps", "must be at least 1".into());
        }
        if self.anchors == 0 {
            return bad("anchors", "must be at least 1".into());
        }
        if !(self.lambda_l1 >= 0.0) {
            return bad("lambda_l1", format!("must be >= 0, got {}", self.lambda_l1));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return bad("step_size", format!("must be positive, got {}", self.step_size));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum", format!("must lie in [0, 1), got {}", self.momentum));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad("alpha", format!("must be positive, got {}", self.alpha));
        }
        Ok(())
    }
}

/// Mask values on a set of anchor points, upsampled to every point by
/// nearest anchor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaliencyMask {
    pub anchor_indices: Vec<usize>,
    pub values: Vec<f64>,
    /// Anchor slot (index into `anchor_indices`) owning each point.
    pub upsample: Vec<usize>,
}

impl SaliencyMask {
    /// All-zero mask on `count` farthest-point anchors seeded at point 0
    /// (`count` is capped at the point count).
    pub fn zeros(cloud: &PointCloud, count: usize) -> Result<Self> {
        let anchors = farthest_point_sample(cloud, count.min(cloud.len()), 0)?;
        let pts = cloud.points();
        let upsample = pts
            .iter()
            .map(|p| {
                let mut best = 0;
                let mut best_d = f64::INFINITY;
                for (slot, &a) in anchors.iter().enumerate() {
                    let d = p.distance_squared(pts[a]);
                    if d < best_d {
                        best_d = d;
                        best = slot;
                    }
                }
                best
            })
            .collect();
        Ok(SaliencyMask { values: vec![0.0; anchors.len()], anchor_indices: anchors, upsample })
    }

    /// Mask whose anchors are all points, in order.
    pub fn full_resolution(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Parameter("mask values must be non-empty and lie in [0, 1]".into()));
        }
        let n = values.len();
        Ok(SaliencyMask { anchor_indices: (0..n).collect(), values, upsample: (0..n).collect() })
    }

    pub fn len_points(&self) -> usize {
        self.upsample.len()
    }

    /// Per-point values.
    pub fn full(&self) -> Vec<f64> {
        self.upsample.iter().map(|&s| self.values[s]).collect()
    }

    /// Sums per-point gradients onto the anchors that own them.
    pub fn pull_back(&self, full_grad: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.values.len()];
        for (&slot, &v) in self.upsample.iter().zip(full_grad) {
            g[slot] += v;
        }
        g
    }

    pub fn with_values(&self, values: Vec<f64>) -> Self {
        SaliencyMask { values, ..self.clone() }
    }

    pub fn l1_mass(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() / self.values.len() as f64
    }

    /// `point_index,mask_value` rows at full resolution.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["point_index", "mask_value"])?;
        for (i, v) in self.full().iter().enumerate() {
            w.write_record([i.to_string(), format!("{v:.17e}")])?;
        }
        w.flush()?;
        Ok(())
    }

    /// PLY of `cloud` with the mask as quality and colormap colors.
    pub fn write_ply(&self, path: impl AsRef<Path>, cloud: &PointCloud) -> Result<()> {
        let full = self.full();
        let colors: Vec<[u8; 3]> = full.iter().map(|&v| colormap(v)).collect();
        write_ply_file(path, cloud, &PlyExtras { quality: Some(&full), colors: Some(&colors), comments: &[] })
    }
}

pub const MAX_MASK_POINTS: usize = 1 << 24;

/// Reads the per-point values written by [`SaliencyMask::write_csv`]. Every
/// index in `0..n` must appear exactly once, in any order.
pub fn parse_mask_csv(bytes: &[u8]) -> Result<Vec<f64>> {
    const FORMAT: &str = "mask CSV";
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(bytes);
    let headers = rdr.headers().map_err(|e| Error::parse(FORMAT, 1, e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["point_index", "mask_value"] {
        return Err(Error::parse(FORMAT, 1, "header must be point_index,mask_value"));
    }
    let mut rows: Vec<Option<f64>> = vec![];
    let mut last_line = 1;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::parse(FORMAT, e.position().map_or(last_line + 1, |p| p.line() as usize), e.to_string()))?;
        let line = rec.position().map_or(last_line + 1, |p| p.line() as usize);
        last_line = line;
        let idx: usize = rec[0].parse().map_err(|_| Error::parse(FORMAT, line, format!("bad point index {:?}", &rec[0])))?;
        let v: f64 = match rec[1].parse::<f64>() {
            Ok(v) if (0.0..=1.0).contains(&v) => v,
            _ => return Err(Error::parse(FORMAT, line, format!("mask value {:?} is not a number in [0, 1]", &rec[1]))),
        };
        if idx >= MAX_MASK_POINTS {
            return Err(Error::parse(FORMAT, line, format!("point index {idx} exceeds {MAX_MASK_POINTS}")));
        }
        if idx >= rows.len() {
            rows.resize(idx + 1, None);
        }
        if rows[idx].replace(v).is_some() {
            return Err(Error::parse(FORMAT, line, format!("duplicate point index {idx}")));
        }
    }
    if rows.is_empty() {
        return Err(Error::parse(FORMAT, last_line + 1, "no mask rows"));
    }
    match rows.iter().position(Option::is_none) {
        Some(i) => Err(Error::parse(FORMAT, last_line + 1, format!("point index {i} is missing"))),
        None => Ok(rows.into_iter().flatten().collect()),
    }
}

/// Min-max normalization to [0, 1]; a constant input maps to all zeros.
pub fn min_max_normalize(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return vec![0.0; values.len()];
    }
    values.iter().map(|v| ((v - lo) / (hi - lo)).clamp(0.0, 1.0)).collect()
}
