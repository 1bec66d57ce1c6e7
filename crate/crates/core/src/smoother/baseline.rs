//! Comparison smoothers: umbrella-operator Taubin steps and quadric-fit
//! mean-curvature displacement.

use rayon::prelude::*;

use crate::error::Result;
use crate::geometry::{build_frame, fit_plane, NeighborGraph, PointCloud, Vec3};

/// `p + coeff * L(p)` with the umbrella operator
/// `L(p_i) = mean_j (p_j - p_i)` over the kNN graph.
///
/// A Taubin iteration is `taubin_step(lambda)` followed by
/// `taubin_step(-mu)`.
pub fn taubin_step(cloud: &PointCloud, graph: &NeighborGraph, coeff: f64) -> Result<PointCloud> {
    let k = graph.k() as f64;
    let pts: Vec<Vec3> = (0..cloud.len())
        .into_par_iter()
        .map(|i| {
            let p = cloud.point(i);
            let lap = graph.neighbors(i).iter().map(|&j| cloud.point(j) - p).sum::<Vec3>() / k;
            p + lap * coeff
        })
        .collect();
    PointCloud::new(pts)
}

/// Least-squares fit of `z = a u^2 + b v^2 + c uv + d u + e v + f`.
fn fit_quadric(samples: &[[f64; 3]]) -> Option<[f64; 6]> {
    let mut ata = [[0.0; 6]; 6];
    let mut atz = [0.0; 6];
    for &[u, v, z] in samples {
        let row = [u * u, v * v, u * v, u, v, 1.0];
        for i in 0..6 {
            atz[i] += row[i] * z;
            for j in 0..6 {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    solve6(ata, atz)
}

/// Gaussian elimination with partial pivoting; `None` if singular.
fn solve6(mut a: [[f64; 6]; 6], mut b: [f64; 6]) -> Option<[f64; 6]> {
    let scale = a.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    if !(scale > 0.0) {
        return None;
    }
    for col in 0..6 {
        let piv = (col..6).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= 1e-13 * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..6 {
            let f = a[r][col] / a[col][col];
            for c in col..6 {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [0.0; 6];
    for r in (0..6).rev() {
        let s: f64 = (r + 1..6).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Mean curvature at `p` from a quadric fitted to `neighbors` in the local
/// frame of their least-squares plane, signed positive when the surface
/// bends toward the returned normal.
fn quadric_fit_at(p: Vec3, neighbors: &[Vec3]) -> Option<(f64, Vec3)> {
    if neighbors.len() < 6 {
        return None;
    }
    let plane = fit_plane(neighbors).ok().filter(|pl| !pl.degenerate)?;
    let frame = build_frame(&plane, plane.project(p));
    let samples: Vec<[f64; 3]> = neighbors
        .iter()
        .map(|&q| {
            let [u, v] = frame.to_uv(q);
            [u, v, (q - frame.origin).dot(frame.n)]
        })
        .collect();
    let [a, b, c, d, e, _f] = fit_quadric(&samples)?;
    // Second fundamental form of a graph surface at (u, v) = (0, 0).
    let (fu, fv, fuu, fvv, fuv) = (d, e, 2.0 * a, 2.0 * b, c);
    let g = 1.0 + fu * fu + fv * fv;
    let h = ((1.0 + fv * fv) * fuu - 2.0 * fu * fv * fuv + (1.0 + fu * fu) * fvv) / (2.0 * g.powf(1.5));
    h.is_finite().then_some((h, frame.n))
}

/// Mean curvature estimate at `p` from a local quadric fit (unsigned
/// orientation: the sign follows the fitted plane's normal convention).
pub fn quadric_mean_curvature(p: Vec3, neighbors: &[Vec3]) -> Option<f64> {
    quadric_fit_at(p, neighbors).map(|(h, _)| h)
}

/// Displacement `2 k^2 H n` toward the center of curvature, with `k` the
/// mean neighbor distance, so it is on the same scale as the plane offset
/// `h - p` for a densely sampled sphere.
pub fn quadric_displacement(p: Vec3, neighbors: &[Vec3]) -> Option<Vec3> {
    let (h, n) = quadric_fit_at(p, neighbors)?;
    let k = neighbors.iter().map(|q| q.distance(p)).sum::<f64>() / neighbors.len() as f64;
    Some(n * (2.0 * k * k * h))
}
