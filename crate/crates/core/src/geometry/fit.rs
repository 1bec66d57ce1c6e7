//! Least-squares plane and line fits on local neighborhoods.

use serde::{Deserialize, Serialize};

use super::cloud::mean;
use super::eigen::{covariance3, sym_eigen2, sym_eigen3};
use super::Vec3;
use crate::error::{Error, Result};

/// Components smaller than this are treated as zero by the sign rule.
const SIGN_EPS: f64 = 1e-12;
/// Relative eigenvalue gap below which two eigenvalues count as tied.
const TIE_EPS: f64 = 1e-12;

/// Plane `<x, normal> + offset = 0` fitted to a neighborhood.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittedPlane {
    pub normal: Vec3,
    pub offset: f64,
    /// RMS point-to-plane distance of the fitted points.
    pub residual: f64,
    /// Neighborhood was collinear; the normal is one deterministic choice
    /// among the equally good ones.
    pub degenerate: bool,
}

impl FittedPlane {
    pub fn signed_distance(&self, p: Vec3) -> f64 {
        p.dot(self.normal) + self.offset
    }

    pub fn project(&self, p: Vec3) -> Vec3 {
        project_to_plane(p, self)
    }
}

/// Orthonormal frame on a fitted plane, anchored at a projected point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalFrame {
    pub origin: Vec3,
    pub u: Vec3,
    pub v: Vec3,
    pub n: Vec3,
}

impl LocalFrame {
    /// In-plane coordinates of `p` (its projection expressed in `(u, v)`).
    pub fn to_uv(&self, p: Vec3) -> [f64; 2] {
        let d = p - self.origin;
        [d.dot(self.u), d.dot(self.v)]
    }

    pub fn uv_vector(&self, uv: [f64; 2]) -> Vec3 {
        self.u * uv[0] + self.v * uv[1]
    }
}

/// Line `<x, normal> + offset = 0` in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittedLine2D {
    pub normal: [f64; 2],
    pub offset: f64,
    /// Isotropic spread; the direction is a deterministic placeholder.
    pub degenerate: bool,
}

impl FittedLine2D {
    /// Orthogonal projection of `w` onto the line.
    pub fn project(&self, w: [f64; 2]) -> [f64; 2] {
        let d = w[0] * self.normal[0] + w[1] * self.normal[1] + self.offset;
        [w[0] - d * self.normal[0], w[1] - d * self.normal[1]]
    }
}

fn apply_sign_rule(n: Vec3) -> Vec3 {
    let first = n.to_array().into_iter().find(|c| c.abs() > SIGN_EPS).unwrap_or(0.0);
    if first < 0.0 {
        -n
    } else {
        n
    }
}

/// Index of the coordinate axis least aligned with `n` (ties: lowest index).
fn least_aligned_axis(n: Vec3) -> Vec3 {
    let a = [n.x.abs(), n.y.abs(), n.z.abs()];
    let mut best = 0;
    for i in 1..3 {
        if a[i] < a[best] {
            best = i;
        }
    }
    [Vec3::X, Vec3::Y, Vec3::Z][best]
}

/// Unit vector perpendicular to `n`, from the projection of the least
/// aligned axis.
fn perpendicular(n: Vec3) -> Vec3 {
    let e = least_aligned_axis(n);
    (e - n * e.dot(n)).normalized().expect("axis least aligned with a unit vector is never parallel to it")
}

/// Least-squares plane through `points` (at least three).
///
/// The normal is the smallest-eigenvalue eigenvector of the covariance,
/// oriented so that its first nonzero component is positive.
pub fn fit_plane(points: &[Vec3]) -> Result<FittedPlane> {
    if points.len() < 3 {
        return Err(Error::Parameter(format!(
            "plane fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    let m = mean(points);
    if points.iter().all(|&p| p == points[0]) {
        return Err(Error::Degenerate("plane fit on coincident points".into()));
    }
    let cov = covariance3(points, m);
    let (vals, vecs) = sym_eigen3(cov);
    if !(vals[2] > 0.0) {
        return Err(Error::Degenerate("plane fit on coincident points".into()));
    }
    let collinear = vals[1] <= TIE_EPS * vals[2];
    let normal = if collinear { perpendicular(vecs[2]) } else { vecs[0] };
    let normal = apply_sign_rule(normal);
    let offset = -m.dot(normal);
    let ss: f64 = points.iter().map(|p| (p.dot(normal) + offset).powi(2)).sum();
    Ok(FittedPlane {
        normal,
        offset,
        residual: (ss / points.len() as f64).sqrt(),
        degenerate: collinear,
    })
}

/// `h = p - (<p, n> + D) n`.
pub fn project_to_plane(p: Vec3, plane: &FittedPlane) -> Vec3 {
    p - plane.normal * plane.signed_distance(p)
}

/// Frame on `plane` at `h`: `u` is the normalized projection of the axis
/// least aligned with the normal, `v = n x u`.
pub fn build_frame(plane: &FittedPlane, h: Vec3) -> LocalFrame {
    let n = plane.normal;
    let u = perpendicular(n);
    LocalFrame { origin: h, u, v: n.cross(u), n }
}

/// Least-squares line through 2-D points (at least two).
pub fn fit_line2d(points: &[[f64; 2]]) -> Result<FittedLine2D> {
    if points.len() < 2 {
        return Err(Error::Parameter(format!(
            "line fit needs at least 2 points, got {}",
            points.len()
        )));
    }
    if points.iter().all(|&p| p == points[0]) {
        return Err(Error::Degenerate("line fit on coincident points".into()));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p[0]).sum::<f64>() / n;
    let my = points.iter().map(|p| p[1]).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in points {
        let (dx, dy) = (p[0] - mx, p[1] - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let ((lo, hi), minor) = sym_eigen2(sxx / n, sxy / n, syy / n);
    let tied = hi - lo <= TIE_EPS * hi;
    let mut normal = if tied { [1.0, 0.0] } else { minor };
    let first = if normal[0].abs() > SIGN_EPS { normal[0] } else { normal[1] };
    if first < 0.0 {
        normal = [-normal[0], -normal[1]];
    }
    Ok(FittedLine2D {
        normal,
        offset: -(mx * normal[0] + my * normal[1]),
        degenerate: tied,
    })
}

/// Curvature-normal estimate `(h - p) / (2 k^2)` with `k` the mean
/// distance from `p` to its neighbors.
pub fn curvature_normal(p: Vec3, neighbors: &[Vec3]) -> Result<Vec3> {
    let plane = fit_plane(neighbors)?;
    if plane.degenerate {
        return Err(Error::Degenerate("collinear neighborhood".into()));
    }
    let k = neighbors.iter().map(|q| q.distance(p)).sum::<f64>() / neighbors.len() as f64;
    if !(k > 0.0) {
        return Err(Error::Degenerate("neighbors coincide with the query point".into()));
    }
    Ok((project_to_plane(p, &plane) - p) / (2.0 * k * k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn v(x: f64, y: f64, z: f64) -> Vec3 {
        Vec3::new(x, y, z)
    }

    #[test]
    fn coplanar_points() {
        let pts = [v(0.0, 0.0, 2.0), v(1.0, 0.0, 2.0), v(0.0, 1.0, 2.0), v(1.0, 1.0, 2.0)];
        let p = fit_plane(&pts).unwrap();
        assert_eq!(p.normal, Vec3::Z);
        assert!((p.offset + 2.0).abs() < 1e-15);
        assert_eq!(p.residual, 0.0);
        assert!(!p.degenerate);
    }

    #[test]
    fn ring_plane() {
        // Covariance of an 8-point ring at z = 0.5 is diag(1/2, 1/2, 0):
        // the zero eigenvalue's eigenvector is z.
        let pts: Vec<Vec3> = (0..8)
            .map(|i| {
                let a = 2.0 * PI * i as f64 / 8.0;
                v(a.cos(), a.sin(), 0.5)
            })
            .collect();
        let p = fit_plane(&pts).unwrap();
        assert!((p.normal - Vec3::Z).norm() < 1e-12);
        assert!((p.offset + 0.5).abs() < 1e-12);
        assert!(p.residual < 1e-12);
    }

    #[test]
    fn coincident_points_rejected() {
        let pts = [v(1.0, 1.0, 1.0); 3];
        assert!(matches!(fit_plane(&pts), Err(Error::Degenerate(_))));
    }

    #[test]
    fn collinear_points_flagged() {
        let pts = [v(0.0, 0.0, 0.0), v(1.0, 0.0, 0.0), v(2.0, 0.0, 0.0)];
        let p = fit_plane(&pts).unwrap();
        assert!(p.degenerate);
        assert!(p.normal.dot(Vec3::X).abs() < 1e-12);
        assert!((p.normal.norm() - 1.0).abs() < 1e-12);
        // Deterministic: the line along x gets the y axis as its normal.
        assert_eq!(p.normal, Vec3::Y);
    }

    #[test]
    fn projection_examples() {
        let z0 = FittedPlane { normal: Vec3::Z, offset: 0.0, residual: 0.0, degenerate: false };
        assert_eq!(project_to_plane(v(0.0, 0.0, 3.0), &z0), Vec3::ZERO);
        assert_eq!(project_to_plane(v(1.0, -2.0, 0.0), &z0), v(1.0, -2.0, 0.0));

        let s = 1.0 / 3f64.sqrt();
        let diag = FittedPlane { normal: v(s, s, s), offset: 0.0, residual: 0.0, degenerate: false };
        let h = project_to_plane(v(1.0, 1.0, 1.0), &diag);
        assert!(h.norm() < 1e-15, "{h:?}");
    }

    #[test]
    fn frame_conventions() {
        let mk = |n| FittedPlane { normal: n, offset: 0.0, residual: 0.0, degenerate: false };
        let f = build_frame(&mk(Vec3::Z), Vec3::ZERO);
        assert_eq!((f.u, f.v), (Vec3::X, Vec3::Y));
        let f = build_frame(&mk(Vec3::X), Vec3::ZERO);
        assert_eq!((f.u, f.v), (Vec3::Y, Vec3::Z));
    }

    #[test]
    fn line_on_v_equals_one() {
        let pts = [[0.0, 1.0], [1.0, 1.0], [-2.0, 1.0], [5.0, 1.0]];
        let l = fit_line2d(&pts).unwrap();
        assert_eq!(l.normal, [0.0, 1.0]);
        assert!((l.offset + 1.0).abs() < 1e-15);
        assert!(!l.degenerate);
    }

    #[test]
    fn symmetric_cross_is_tied() {
        let pts = [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]];
        let l = fit_line2d(&pts).unwrap();
        assert!(l.degenerate);
        assert_eq!(l.normal, [1.0, 0.0]);
        assert_eq!(fit_line2d(&pts).unwrap(), l);
    }

    #[test]
    fn coincident_line_rejected() {
        assert!(fit_line2d(&[[2.0, 2.0], [2.0, 2.0]]).is_err());
        assert!(fit_line2d(&[[2.0, 2.0]]).is_err());
    }

    #[test]
    fn curvature_normal_flat_is_zero() {
        let nb = [v(1.0, 0.0, 0.0), v(0.0, 1.0, 0.0), v(-1.0, 0.0, 0.0), v(0.0, -1.0, 0.0)];
        assert_eq!(curvature_normal(Vec3::ZERO, &nb).unwrap().norm(), 0.0);
    }

    #[test]
    fn curvature_normal_scales_inversely() {
        let p = v(0.1, 0.2, 0.9);
        let nb = [v(1.0, 0.0, 0.0), v(0.0, 1.1, 0.1), v(-0.9, 0.0, 0.2), v(0.0, -1.0, 0.0), v(0.5, 0.5, 0.3)];
        let base = curvature_normal(p, &nb).unwrap();
        for s in [0.5, 3.0] {
            let scaled: Vec<Vec3> = nb.iter().map(|&q| q * s).collect();
            let c = curvature_normal(p * s, &scaled).unwrap();
            assert!((c * s - base).norm() < 1e-12);
        }
    }
}
