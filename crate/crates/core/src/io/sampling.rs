use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Mesh;
use crate::error::{Error, Result};
use crate::geometry::PointCloud;

/// Area-weighted uniform sampling of `n` points on the mesh surface.
pub fn sample_surface(mesh: &Mesh, n: usize, seed: u64) -> Result<PointCloud> {
    if n == 0 {
        return Err(Error::Parameter("sample count must be positive".into()));
    }
    let mut cumulative = Vec::with_capacity(mesh.triangles.len());
    let mut total = 0.0;
    for t in &mesh.triangles {
        let [a, b, c] = t.map(|i| mesh.vertices[i]);
        total += 0.5 * (b - a).cross(c - a).norm();
        cumulative.push(total);
    }
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::Degenerate(format!("mesh surface area is {total}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..n)
        .map(|_| {
            let u = rng.random::<f64>() * total;
            let k = cumulative.partition_point(|&c| c <= u).min(cumulative.len() - 1);
            let [a, b, c] = mesh.triangles[k].map(|i| mesh.vertices[i]);
            let r1 = rng.random::<f64>().sqrt();
            let r2 = rng.random::<f64>();
            a * (1.0 - r1) + b * (r1 * (1.0 - r2)) + c * (r1 * r2)
        })
        .collect();
    PointCloud::new(points)
}

/// Greedy farthest-point sampling of `count` indices starting at
/// `seed_index`. Distance ties go to the lowest index.
pub fn farthest_point_sample(cloud: &PointCloud, count: usize, seed_index: usize) -> Result<Vec<usize>> {
    let n = cloud.len();
    if count == 0 || count > n {
        return Err(Error::Parameter(format!("sample count {count} outside 1..={n}")));
    }
    if seed_index >= n {
        return Err(Error::Parameter(format!("seed index {seed_index} out of range for {n} points")));
    }
    let pts = cloud.points();
    let mut dist = vec![f64::INFINITY; n];
    let mut chosen = Vec::with_capacity(count);
    let mut current = seed_index;
    loop {
        chosen.push(current);
        dist[current] = f64::NEG_INFINITY;
        if chosen.len() == count {
            return Ok(chosen);
        }
        let c = pts[current];
        let mut best = usize::MAX;
        let mut best_d = f64::NEG_INFINITY;
        for (i, d) in dist.iter_mut().enumerate() {
            if *d == f64::NEG_INFINITY {
                continue;
            }
            let dd = pts[i].distance_squared(c);
            if dd < *d {
                *d = dd;
            }
            if *d > best_d {
                best_d = *d;
                best = i;
            }
        }
        current = best;
    }
}
