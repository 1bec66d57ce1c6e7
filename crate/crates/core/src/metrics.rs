//! Smoothing-quality metrics: curvature standard deviation (CSD), min-max
//! ratio (MR) and density distribution similarity (DDS).

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::eigen::{covariance3, sym_eigen3};
use crate::geometry::{fit_plane, knn, PointCloud};
use crate::smoother::SmoothSequence;

/// Neighborhood size for the CSD plane fits.
pub const CSD_K: usize = 60;
/// Bandwidth of the Gaussian kernel used for per-point densities.
pub const DDS_SIGMA: f64 = 0.1;

/// Population standard deviation of the unsigned distances from each point
/// to the plane fitted to its `CSD_K` nearest neighbors.
pub fn csd(cloud: &PointCloud) -> Result<f64> {
    if cloud.len() <= CSD_K {
        return Err(Error::Parameter(format!(
            "csd needs more than {CSD_K} points, got {}",
            cloud.len()
        )));
    }
    let graph = knn(cloud, CSD_K)?;
    let dists: Vec<f64> = (0..cloud.len())
        .into_par_iter()
        .map(|i| {
            let nb = graph.neighbor_points(cloud, i);
            // A coincident neighborhood has no plane; its spread is zero.
            fit_plane(&nb).map_or(0.0, |pl| pl.signed_distance(cloud.point(i)).abs())
        })
        .collect();
    Ok(population_std(&dists))
}

fn population_std(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt()
}

/// Ratio of the coordinate ranges along the two leading principal axes.
pub fn mr(cloud: &PointCloud) -> Result<f64> {
    if cloud.len() < 3 {
        return Err(Error::Parameter("mr needs at least 3 points".into()));
    }
    let c = cloud.centroid();
    let (vals, vecs) = sym_eigen3(covariance3(cloud.points(), c));
    if !(vals[2] > 0.0) || vals[1] <= 1e-12 * vals[2] {
        return Err(Error::Degenerate("mr: covariance has rank < 2".into()));
    }
    let range = |axis| {
        let (lo, hi) = cloud.points().iter().fold((f64::MAX, f64::MIN), |(lo, hi), p| {
            let t = (*p - c).dot(axis);
            (lo.min(t), hi.max(t))
        });
        hi - lo
    };
    let (a, b) = (range(vecs[2]), range(vecs[1]));
    Ok(a.min(b) / a.max(b))
}

/// Per-point Gaussian kernel density `(1/N) sum_j exp(-|p_i - p_j|^2 / 2 sigma^2)`,
/// self term included.
pub fn kernel_densities(cloud: &PointCloud, sigma: f64) -> Vec<f64> {
    let pts = cloud.points();
    let inv = 1.0 / (2.0 * sigma * sigma);
    let n = pts.len() as f64;
    pts.par_iter()
        .map(|&p| pts.iter().map(|&q| (-p.distance_squared(q) * inv).exp()).sum::<f64>() / n)
        .collect()
}

/// Two-sample Kolmogorov-Smirnov statistic `sup |F_a - F_b|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Kolmogorov survival function `Q(x) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 x^2)`.
pub fn kolmogorov_q(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 1.18 {
        // Theta-function form converges fast for small x.
        let y = -std::f64::consts::PI.powi(2) / (8.0 * x * x);
        let s: f64 = (0..20).map(|k| (y * ((2 * k + 1) as f64).powi(2)).exp()).sum();
        return (1.0 - (2.0 * std::f64::consts::PI).sqrt() / x * s).clamp(0.0, 1.0);
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * x * x).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// Asymptotic two-sample KS p-value with the usual small-sample correction
/// `(sqrt(ne) + 0.12 + 0.11 / sqrt(ne)) D`, `ne = n m / (n + m)`.
pub fn ks_pvalue(a: &[f64], b: &[f64]) -> f64 {
    let d = ks_statistic(a, b);
    if d == 0.0 {
        return 1.0;
    }
    let ne = (a.len() * b.len()) as f64 / (a.len() + b.len()) as f64;
    let sq = ne.sqrt();
    kolmogorov_q((sq + 0.12 + 0.11 / sq) * d)
}

/// KS p-value between the per-point density distributions of two clouds.
pub fn dds(a: &PointCloud, b: &PointCloud) -> f64 {
    ks_pvalue(&kernel_densities(a, DDS_SIGMA), &kernel_densities(b, DDS_SIGMA))
}

/// CSD and MR per level, DDS per consecutive pair of levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub csd: Vec<f64>,
    pub mr: Vec<f64>,
    /// `dds[l - 1]` compares level `l - 1` with level `l`.
    pub dds: Vec<f64>,
}

impl MetricReport {
    pub fn for_sequence(seq: &SmoothSequence) -> Result<Self> {
        let clouds = seq.clouds();
        let csd = clouds.iter().map(csd).collect::<Result<Vec<_>>>()?;
        let mr = clouds.iter().map(mr).collect::<Result<Vec<_>>>()?;
        let densities: Vec<Vec<f64>> = clouds.iter().map(|c| kernel_densities(c, DDS_SIGMA)).collect();
        let dds = densities.windows(2).map(|w| ks_pvalue(&w[0], &w[1])).collect();
        Ok(MetricReport { csd, mr, dds })
    }

    /// `level,csd,mr,dds` rows; level 0 has an empty `dds` field.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["level", "csd", "mr", "dds"])?;
        for l in 0..self.csd.len() {
            let dds = if l == 0 { String::new() } else { self.dds[l - 1].to_string() };
            out.write_record([l.to_string(), self.csd[l].to_string(), self.mr[l].to_string(), dds])?;
        }
        out.flush()?;
        Ok(())
    }
}
