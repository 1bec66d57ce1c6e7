#![allow(dead_code)]

use curvsal::classifier::{Classifier, ToyNet, ToyNetShape};
use curvsal::io::{farthest_point_sample, sample_shape, ShapeClass};
use curvsal::smoother::{smooth_sequence, SmoothConfig, SmoothSequence};
use curvsal::{PointCloud, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Evenly spread surface sample: a 10x denser i.i.d. sample thinned by
/// farthest-point sampling.
pub fn even_sample(class: ShapeClass, n: usize, seed: u64) -> PointCloud {
    let dense = PointCloud::new(sample_shape(class, 10 * n, &mut rng(seed))).unwrap();
    dense.select(&farthest_point_sample(&dense, n, 0).unwrap()).unwrap()
}

/// i.i.d. area-uniform surface sample.
pub fn iid_sample(class: ShapeClass, n: usize, seed: u64) -> PointCloud {
    PointCloud::new(sample_shape(class, n, &mut rng(seed))).unwrap()
}

pub fn random_cloud(n: usize, seed: u64) -> PointCloud {
    let mut r = rng(seed);
    PointCloud::new(
        (0..n)
            .map(|_| Vec3::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)))
            .collect(),
    )
    .unwrap()
}

pub fn random_net(classes: usize, seed: u64) -> ToyNet {
    ToyNet::new(&ToyNetShape::new(classes), seed).unwrap()
}

/// A cheap smoothing schedule for small clouds.
pub fn small_config() -> SmoothConfig {
    SmoothConfig { k_start: 8, k_max: 16, k_step: 4, rounds_per_k: 2, iterations: 20, ..Default::default() }
}

/// Sequence on a noisy, lumpy sphere small enough for finite differences.
pub fn small_sequence(n: usize, seed: u64) -> SmoothSequence {
    let mut r = rng(seed);
    let cloud = PointCloud::new(
        sample_shape(ShapeClass::Sphere, n, &mut r)
            .into_iter()
            .map(|p| p * (1.0 + 0.3 * (3.0 * p.x).sin() * p.z) + Vec3::new(r.random_range(-0.02..0.02), 0.0, 0.0))
            .collect(),
    )
    .unwrap();
    smooth_sequence(&cloud, &small_config()).unwrap()
}

/// Largest componentwise difference relative to the largest analytic
/// component.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    let scale = analytic.iter().chain(numeric).fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    analytic.iter().zip(numeric).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale
}

pub fn flatten(v: &[Vec3]) -> Vec<f64> {
    v.iter().flat_map(|p| p.to_array()).collect()
}

/// Spearman rank correlation (average ranks for ties).
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0;
            for &k in &idx[i..=j] {
                r[k] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

/// Mean-pooled tanh features with a linear softmax head: a classifier that
/// is smooth everywhere, for checking mask gradients without max-pool kinks.
pub struct SmoothNet {
    pub dirs: Vec<Vec3>,
    pub offsets: Vec<f64>,
    /// `head[k][j]`.
    pub head: Vec<Vec<f64>>,
}

impl SmoothNet {
    pub fn new(classes: usize, features: usize, seed: u64) -> Self {
        let mut r = rng(seed);
        let mut g = || r.random_range(-2.0..2.0);
        let dirs = (0..features).map(|_| Vec3::new(g(), g(), g())).collect();
        let offsets = (0..features).map(|_| g() * 0.5).collect();
        let head = (0..classes).map(|_| (0..features).map(|_| g()).collect()).collect();
        SmoothNet { dirs, offsets, head }
    }

    fn features(&self, cloud: &PointCloud) -> Vec<f64> {
        let n = cloud.len() as f64;
        self.dirs
            .iter()
            .zip(&self.offsets)
            .map(|(d, b)| cloud.points().iter().map(|p| (d.dot(*p) + b).tanh()).sum::<f64>() / n)
            .collect()
    }

    fn softmax_scores(&self, cloud: &PointCloud) -> Vec<f64> {
        let f = self.features(cloud);
        let z: Vec<f64> = self.head.iter().map(|w| w.iter().zip(&f).map(|(a, b)| a * b).sum()).collect();
        let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
        let s: f64 = e.iter().sum();
        e.iter().map(|v| v / s).collect()
    }
}

impl curvsal::classifier::Classifier for SmoothNet {
    fn num_classes(&self) -> usize {
        self.head.len()
    }

    fn scores(&self, cloud: &PointCloud) -> curvsal::Result<curvsal::classifier::ClassScores> {
        Ok(curvsal::classifier::ClassScores::from_scores(self.softmax_scores(cloud)))
    }

    fn input_gradient(&self, cloud: &PointCloud, class: usize) -> curvsal::Result<curvsal::classifier::InputGradient> {
        let s = self.softmax_scores(cloud);
        let n = cloud.len() as f64;
        // d s_c / d f_j = s_c * (w_cj - sum_k s_k w_kj)
        let dfeat: Vec<f64> = (0..self.dirs.len())
            .map(|j| {
                let avg: f64 = self.head.iter().zip(&s).map(|(w, sk)| sk * w[j]).sum();
                s[class] * (self.head[class][j] - avg)
            })
            .collect();
        let grads = cloud
            .points()
            .iter()
            .map(|p| {
                let mut g = Vec3::ZERO;
                for ((d, b), df) in self.dirs.iter().zip(&self.offsets).zip(&dfeat) {
                    let t = (d.dot(*p) + b).tanh();
                    g += *d * (df * (1.0 - t * t) / n);
                }
                g
            })
            .collect();
        Ok(curvsal::classifier::InputGradient { class, grads })
    }
}

// Independent oracles shared by the oracle, gradient and acceptance suites.

pub const H: f64 = 1e-4;

pub fn brute_knn(points: &[Vec3], i: usize, k: usize) -> Vec<(usize, f64)> {
    let mut all: Vec<(usize, f64)> =
        (0..points.len()).filter(|&j| j != i).map(|j| (j, points[i].distance_squared(points[j]))).collect();
    all.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    all.truncate(k);
    all
}


/// Line normal angle by grid search over [0, pi) refined by bisection on the
/// sign of the residual's derivative, evaluated directly from the points.
pub fn grid_line_angle(points: &[[f64; 2]]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p[0]).sum::<f64>() / n;
    let my = points.iter().map(|p| p[1]).sum::<f64>() / n;
    let residual = |t: f64| points.iter().map(|p| ((p[0] - mx) * t.cos() + (p[1] - my) * t.sin()).powi(2)).sum::<f64>();
    let slope = |t: f64| {
        points
            .iter()
            .map(|p| {
                let (u, v) = (p[0] - mx, p[1] - my);
                2.0 * (u * t.cos() + v * t.sin()) * (-u * t.sin() + v * t.cos())
            })
            .sum::<f64>()
    };
    let steps = 20_000;
    let dt = std::f64::consts::PI / steps as f64;
    let best = (0..steps).map(|i| i as f64 * dt).min_by(|a, b| residual(*a).total_cmp(&residual(*b))).unwrap();
    let (mut lo, mut hi) = (best - dt, best + dt);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if slope(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}


pub fn brute_fps(points: &[Vec3], count: usize, seed: usize) -> Vec<usize> {
    let mut chosen = vec![seed];
    while chosen.len() < count {
        let mut best = (usize::MAX, -1.0);
        for i in 0..points.len() {
            if chosen.contains(&i) {
                continue;
            }
            let d = chosen.iter().map(|&c| points[i].distance_squared(points[c])).fold(f64::INFINITY, f64::min);
            if d > best.1 {
                best = (i, d);
            }
        }
        chosen.push(best.0);
    }
    chosen
}


pub fn power_largest(m: [[f64; 3]; 3]) -> f64 {
    let mut v = [1.0, 0.7, 0.3];
    let mut lambda = 0.0;
    for _ in 0..5000 {
        let w: Vec<f64> = (0..3).map(|i| (0..3).map(|j| m[i][j] * v[j]).sum()).collect();
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        lambda = (0..3).map(|i| v[i] * w[i]).sum::<f64>();
        v = [w[0] / norm, w[1] / norm, w[2] / norm];
    }
    lambda
}


pub fn perturbed(cloud: &PointCloud, i: usize, axis: usize, d: f64) -> PointCloud {
    let mut pts = cloud.points().to_vec();
    let mut a = pts[i].to_array();
    a[axis] += d;
    pts[i] = curvsal::Vec3::from_array(a);
    PointCloud::new(pts).unwrap()
}

/// Central differences of one class score for every coordinate.
pub fn numeric_input_gradient(net: &dyn Classifier, cloud: &PointCloud, class: usize) -> Vec<f64> {
    let mut g = vec![];
    for i in 0..cloud.len() {
        for axis in 0..3 {
            let up = net.scores(&perturbed(cloud, i, axis, H)).unwrap().scores[class];
            let down = net.scores(&perturbed(cloud, i, axis, -H)).unwrap().scores[class];
            g.push((up - down) / (2.0 * H));
        }
    }
    g
}

/// True when no max-pool winner or ReLU state changes within `±H` of any
/// coordinate, so central differences see a smooth function.
pub fn smooth_within_step(net: &ToyNet, cloud: &PointCloud) -> bool {
    let base = net.activation_pattern(cloud);
    (0..cloud.len()).all(|i| {
        (0..3).all(|axis| [H, -H].iter().all(|&d| net.activation_pattern(&perturbed(cloud, i, axis, d)) == base))
    })
}

/// Central differences of a scalar function of the mask.
pub fn numeric_mask_gradient(f: impl Fn(&[f64]) -> f64, m: &[f64]) -> Vec<f64> {
    (0..m.len())
        .map(|i| {
            let mut up = m.to_vec();
            let mut down = m.to_vec();
            up[i] += H;
            down[i] -= H;
            (f(&up) - f(&down)) / (2.0 * H)
        })
        .collect()
}
