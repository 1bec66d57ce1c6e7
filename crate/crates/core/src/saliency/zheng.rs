use super::{min_max_normalize, SaliencyMask};
use crate::classifier::Classifier;
use crate::error::{Error, Result};
use crate::geometry::{PointCloud, Vec3};

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Coordinate-wise median of the cloud.
pub fn coordinate_median(cloud: &PointCloud) -> Vec3 {
    let pts = cloud.points();
    Vec3::new(
        median(pts.iter().map(|p| p.x).collect()),
        median(pts.iter().map(|p| p.y).collect()),
        median(pts.iter().map(|p| p.z).collect()),
    )
}

/// Gradient saliency relative to the cloud median: `s_i = <grad_i f_c,
/// p_i - median>`, the first-order score drop when `p_i` is moved onto the
/// median, min-max normalized to [0, 1] at full resolution.
pub fn zheng_saliency(cloud: &PointCloud, classifier: &dyn Classifier, class: usize) -> Result<SaliencyMask> {
    if class >= classifier.num_classes() {
        return Err(Error::Parameter(format!("class {class} out of range for {} classes", classifier.num_classes())));
    }
    let center = coordinate_median(cloud);
    let g = classifier.input_gradient(cloud, class)?;
    let raw: Vec<f64> = cloud
        .points()
        .iter()
        .zip(&g.grads)
        .map(|(p, d)| {
            let r = *p - center;
            if r == Vec3::ZERO {
                0.0
            } else {
                d.dot(r)
            }
        })
        .collect();
    SaliencyMask::full_resolution(min_max_normalize(&raw))
}
