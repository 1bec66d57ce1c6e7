use super::SaliencyMask;
use crate::error::{Error, Result};
use crate::geometry::{PointCloud, Vec3};
use crate::smoother::SmoothSequence;

/// Normalized kernel weights over levels `0..=levels` for mask value `m`,
/// together with their derivatives with respect to `m`.
pub fn blend_weights(m: f64, levels: usize, alpha: f64) -> (Vec<f64>, Vec<f64>) {
    let x = levels as f64 * m;
    let d2: Vec<f64> = (0..=levels).map(|l| (x - l as f64).powi(2)).collect();
    let shift = d2.iter().copied().fold(f64::INFINITY, f64::min);
    let raw: Vec<f64> = d2.iter().map(|d| (-alpha * (d - shift)).exp()).collect();
    let total: f64 = raw.iter().sum();
    let w: Vec<f64> = raw.iter().map(|r| r / total).collect();
    // dw_l/dm = w_l (g_l - sum_k w_k g_k) with g_l = -2 alpha L (x - l).
    let g: Vec<f64> = (0..=levels).map(|l| -2.0 * alpha * levels as f64 * (x - l as f64)).collect();
    let mean_g: f64 = w.iter().zip(&g).map(|(a, b)| a * b).sum();
    let dw = w.iter().zip(&g).map(|(a, b)| a * (b - mean_g)).collect();
    (w, dw)
}

/// Blends every point across levels according to its mask value; returns
/// the blended cloud and `d position / d m` per point.
pub fn blend(seq: &SmoothSequence, values: &[f64], alpha: f64) -> Result<(PointCloud, Vec<Vec3>)> {
    let n = seq.len_points();
    if values.len() != n {
        return Err(Error::Parameter(format!("mask has {} values for {n} points", values.len())));
    }
    let levels = seq.levels();
    let clouds = seq.clouds();
    let mut pts = Vec::with_capacity(n);
    let mut jac = Vec::with_capacity(n);
    for (i, &m) in values.iter().enumerate() {
        let (w, dw) = blend_weights(m, levels, alpha);
        let mut p = Vec3::ZERO;
        let mut d = Vec3::ZERO;
        for l in 0..=levels {
            let q = clouds[l].point(i);
            p += q * w[l];
            d += q * dw[l];
        }
        pts.push(p);
        jac.push(d);
    }
    Ok((PointCloud::new(pts)?, jac))
}

pub fn apply_mask(seq: &SmoothSequence, mask: &SaliencyMask, alpha: f64) -> Result<PointCloud> {
    Ok(blend(seq, &mask.full(), alpha)?.0)
}

/// Upper bound on how far a point with mask value exactly 0 (or 1) can sit
/// from level 0 (or the last level): the off-peak kernel mass times the
/// largest displacement between levels.
pub fn endpoint_bias_bound(seq: &SmoothSequence, alpha: f64) -> f64 {
    let levels = seq.levels();
    let tail: f64 = (1..=levels).map(|l| (-alpha * (l * l) as f64).exp()).sum();
    let mut spread: f64 = 0.0;
    for l in 0..=levels {
        for ((a, b), c) in seq.original().points().iter().zip(seq.level(l).points()).zip(seq.most_smoothed().points()) {
            spread = spread.max(a.distance(*b)).max(c.distance(*b));
        }
    }
    tail * spread
}
