use serde::{Deserialize, Serialize};

use super::Vec3;
use crate::error::{Error, Result};

/// An ordered, non-empty set of points with finite coordinates.
///
/// Point order is meaningful: smoothed copies of a cloud keep a 1-1
/// correspondence by index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec3>", into = "Vec<Vec3>")]
pub struct PointCloud {
    points: Vec<Vec3>,
}

/// Translation and scale applied by [`PointCloud::normalize`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub centroid: Vec3,
    pub scale: f64,
}

impl Normalization {
    pub fn apply(&self, p: Vec3) -> Vec3 {
        (p - self.centroid) / self.scale
    }

    pub fn invert(&self, p: Vec3) -> Vec3 {
        p * self.scale + self.centroid
    }
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Degenerate("point cloud is empty".into()));
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::Parameter(format!("point {i} has a non-finite coordinate")));
        }
        Ok(PointCloud { points })
    }

    pub fn from_arrays(points: &[[f64; 3]]) -> Result<Self> {
        Self::new(points.iter().copied().map(Vec3::from_array).collect())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Always false; kept for API symmetry with slices.
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    #[inline]
    pub fn point(&self, i: usize) -> Vec3 {
        self.points[i]
    }

    pub fn into_points(self) -> Vec<Vec3> {
        self.points
    }

    pub fn centroid(&self) -> Vec3 {
        mean(&self.points)
    }

    /// Largest distance from `center` to any point.
    pub fn max_radius(&self, center: Vec3) -> f64 {
        self.points
            .iter()
            .map(|p| p.distance(center))
            .fold(0.0, f64::max)
    }

    /// Subset by index, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<PointCloud> {
        PointCloud::new(indices.iter().map(|&i| self.points[i]).collect())
    }

    /// Centers the cloud at the origin and scales it to unit max norm.
    pub fn normalize(&self) -> Result<(PointCloud, Normalization)> {
        let centroid = self.centroid();
        let scale = self.max_radius(centroid);
        if !(scale > 0.0) {
            return Err(Error::Degenerate(
                "all points coincide; normalization scale is zero".into(),
            ));
        }
        let t = Normalization { centroid, scale };
        let points = self.points.iter().map(|&p| t.apply(p)).collect();
        Ok((PointCloud { points }, t))
    }

    /// Applies `f` to every point, rejecting non-finite results.
    pub fn map(&self, f: impl Fn(Vec3) -> Vec3) -> Result<PointCloud> {
        PointCloud::new(self.points.iter().map(|&p| f(p)).collect())
    }
}

impl TryFrom<Vec<Vec3>> for PointCloud {
    type Error = Error;
    fn try_from(points: Vec<Vec3>) -> Result<Self> {
        PointCloud::new(points)
    }
}

impl From<PointCloud> for Vec<Vec3> {
    fn from(c: PointCloud) -> Self {
        c.points
    }
}

pub(crate) fn mean(points: &[Vec3]) -> Vec3 {
    let n = points.len() as f64;
    points.iter().copied().sum::<Vec3>() / n
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(p: &[[f64; 3]]) -> PointCloud {
        PointCloud::from_arrays(p).unwrap()
    }

    #[test]
    fn normalize_identity_case() {
        let (n, t) = cloud(&[[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]]).normalize().unwrap();
        assert_eq!(n.points(), cloud(&[[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]]).points());
        assert_eq!(t.scale, 1.0);
    }

    #[test]
    fn normalize_shifts_and_scales() {
        let (n, t) = cloud(&[[2.0, 0.0, 0.0], [4.0, 0.0, 0.0]]).normalize().unwrap();
        assert_eq!(t.centroid, Vec3::new(3.0, 0.0, 0.0));
        assert_eq!(t.scale, 1.0);
        assert_eq!(n.point(0), Vec3::new(-1.0, 0.0, 0.0));
        assert_eq!(n.point(1), Vec3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn single_point_is_degenerate() {
        assert!(matches!(
            cloud(&[[5.0, 5.0, 5.0]]).normalize(),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn rejects_empty_and_nan() {
        assert!(PointCloud::new(vec![]).is_err());
        assert!(PointCloud::new(vec![Vec3::new(f64::NAN, 0.0, 0.0)]).is_err());
    }

    #[test]
    fn normalized_centroid_and_radius() {
        let c = cloud(&[[0.3, 7.0, -2.0], [1.0, 2.0, 3.0], [-4.0, 0.5, 0.0], [2.0, 2.0, 2.0]]);
        let (n, _) = c.normalize().unwrap();
        assert!(n.centroid().norm() < 1e-9);
        assert!((n.max_radius(Vec3::ZERO) - 1.0).abs() < 1e-9);
    }
}
