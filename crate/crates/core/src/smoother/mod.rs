//! Curvature smoothing by repeated erosion/dilation toward local planes.
//!
//! One iteration runs four sub-steps on freshly rebuilt neighbor graphs:
//! planar (2-D) erosion, 3-D erosion, planar dilation, 3-D dilation. The
//! 3-D steps move each point toward (erosion, `+lambda`) or away from
//! (dilation, `-mu`) the plane fitted to its neighbors. The 2-D steps do the
//! same inside that plane against a line fitted to the projected neighbors,
//! which is what rounds off the boundary of flat regions.
//!
//! All per-point updates within a sub-step read the pre-step positions only.

mod baseline;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{build_frame, fit_line2d, fit_plane, knn, NeighborGraph, PointCloud, Vec3};

pub use baseline::{quadric_displacement, quadric_mean_curvature, taubin_step};

/// Direction of a sub-step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Round {
    /// Toward the fitted plane or line.
    Erosion,
    /// Away from it.
    Dilation,
}

impl Round {
    fn sign(self) -> f64 {
        match self {
            Round::Erosion => 1.0,
            Round::Dilation => -1.0,
        }
    }
}

/// When neighbor graphs are rebuilt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphRefresh {
    /// Before each of the four sub-steps of an iteration.
    #[default]
    PerSubStep,
    /// Once at the start of every iteration.
    PerIteration,
}

/// How the overall size of the cloud is held fixed between iterations.
///
/// With `mu > lambda` the erosion/dilation pair magnifies the lowest
/// frequencies, so a closed shape slowly inflates; rescaling keeps successive
/// levels comparable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rescale {
    /// Leave the shape at whatever size the updates produce.
    None,
    /// Restore the input's centroid and RMS distance from the centroid.
    #[default]
    RmsRadius,
    /// Restore the input's centroid and maximum distance from the centroid.
    MaxRadius,
    /// Restore the input's centroid and mean distance to the
    /// [`SPACING_K`] nearest neighbors, which holds the sampling density
    /// (points per unit area) fixed.
    MeanSpacing,
}

/// Neighborhood size used by [`Rescale::MeanSpacing`].
pub const SPACING_K: usize = 8;

/// Per-point displacement rule used by [`smooth_sequence`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmoothMethod {
    /// Plane-fit erosion/dilation with the planar boundary step.
    #[default]
    PlaneFit,
    /// Umbrella-operator smoothing on the kNN graph.
    Taubin,
    /// Mean-curvature displacement from local quadric fits.
    Quadric,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoothConfig {
    pub lambda: f64,
    pub mu: f64,
    pub k_start: usize,
    pub k_max: usize,
    pub k_step: usize,
    pub rounds_per_k: usize,
    pub iterations: usize,
    pub levels: usize,
    pub graph_refresh: GraphRefresh,
    pub rescale: Rescale,
    pub method: SmoothMethod,
}

impl Default for SmoothConfig {
    fn default() -> Self {
        SmoothConfig {
            lambda: 0.7,
            mu: 1.0,
            k_start: 20,
            k_max: 60,
            k_step: 20,
            rounds_per_k: 4,
            iterations: 80,
            levels: 10,
            graph_refresh: GraphRefresh::PerSubStep,
            rescale: Rescale::RmsRadius,
            method: SmoothMethod::PlaneFit,
        }
    }
}

impl SmoothConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, why: &str| Err(Error::Parameter(format!("smooth.{field}: {why}")));
        // lambda = mu = 0 is allowed as the identity configuration.
        if !(self.lambda >= 0.0 && self.lambda < 1.0) {
            return bad("lambda", "must lie in [0, 1)");
        }
        if !(self.mu.is_finite() && self.mu >= self.lambda) {
            return bad("mu", "must be finite and >= lambda");
        }
        if self.k_start == 0 {
            return bad("k_start", "must be >= 1");
        }
        if self.k_start > self.k_max {
            return bad("k_start", "must not exceed k_max");
        }
        if self.rounds_per_k == 0 {
            return bad("rounds_per_k", "must be >= 1");
        }
        if self.levels == 0 {
            return bad("levels", "must be >= 1");
        }
        if self.iterations % self.levels != 0 {
            return bad("iterations", "must be divisible by levels");
        }
        Ok(())
    }

    /// Neighborhood size used at 1-based iteration `iteration`.
    pub fn k_at(&self, iteration: usize) -> usize {
        let grown = (iteration.saturating_sub(1) / self.rounds_per_k).saturating_mul(self.k_step);
        self.k_start.saturating_add(grown).min(self.k_max)
    }
}

/// The input cloud plus `levels` progressively smoothed copies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothSequence {
    clouds: Vec<PointCloud>,
    config: SmoothConfig,
}

impl SmoothSequence {
    /// Builds a sequence from precomputed levels; all levels must have the
    /// same point count.
    pub fn from_levels(clouds: Vec<PointCloud>, config: SmoothConfig) -> Result<Self> {
        if clouds.len() < 2 {
            return Err(Error::Parameter("a smooth sequence needs at least two levels".into()));
        }
        let n = clouds[0].len();
        if clouds.iter().any(|c| c.len() != n) {
            return Err(Error::Parameter("all levels must have the same point count".into()));
        }
        Ok(SmoothSequence { clouds, config })
    }

    /// Number of smoothed levels (the index of the most smoothed cloud).
    pub fn levels(&self) -> usize {
        self.clouds.len() - 1
    }

    pub fn len_points(&self) -> usize {
        self.clouds[0].len()
    }

    pub fn level(&self, l: usize) -> &PointCloud {
        &self.clouds[l]
    }

    pub fn clouds(&self) -> &[PointCloud] {
        &self.clouds
    }

    pub fn original(&self) -> &PointCloud {
        &self.clouds[0]
    }

    pub fn most_smoothed(&self) -> &PointCloud {
        &self.clouds[self.levels()]
    }

    pub fn config(&self) -> &SmoothConfig {
        &self.config
    }
}

/// `h - p` for point `i`, or `None` when its neighborhood is degenerate.
fn plane_offset(cloud: &PointCloud, graph: &NeighborGraph, i: usize) -> Option<Vec3> {
    let nb = graph.neighbor_points(cloud, i);
    let plane = fit_plane(&nb).ok().filter(|p| !p.degenerate)?;
    let p = cloud.point(i);
    Some(plane.project(p) - p)
}

fn map_points(cloud: &PointCloud, f: impl Fn(usize, Vec3) -> Vec3 + Sync) -> Result<PointCloud> {
    let pts: Vec<Vec3> = (0..cloud.len())
        .into_par_iter()
        .map(|i| f(i, cloud.point(i)))
        .collect();
    PointCloud::new(pts)
}

fn check_graph(cloud: &PointCloud, graph: &NeighborGraph) -> Result<()> {
    if graph.len() != cloud.len() {
        return Err(Error::Parameter(format!(
            "neighbor graph has {} rows for a cloud of {} points",
            graph.len(),
            cloud.len()
        )));
    }
    Ok(())
}

/// 3-D sub-step: `p + sign * coeff * (h - p)`.
pub fn plane_step_3d(cloud: &PointCloud, graph: &NeighborGraph, coeff: f64, round: Round) -> Result<PointCloud> {
    check_graph(cloud, graph)?;
    let s = round.sign() * coeff;
    map_points(cloud, |i, p| match plane_offset(cloud, graph, i) {
        Some(d) => p + d * s,
        None => p,
    })
}

/// `p' = p + lambda (h - p)`.
pub fn erosion_step_3d(cloud: &PointCloud, graph: &NeighborGraph, lambda: f64) -> Result<PointCloud> {
    plane_step_3d(cloud, graph, lambda, Round::Erosion)
}

/// `p'' = p' - mu (h' - p')`.
pub fn dilation_step_3d(cloud: &PointCloud, graph: &NeighborGraph, mu: f64) -> Result<PointCloud> {
    plane_step_3d(cloud, graph, mu, Round::Dilation)
}

/// In-plane displacement of point `i` toward the line fitted to its
/// projected neighbors, before scaling by the step coefficient.
fn planar_offset(cloud: &PointCloud, graph: &NeighborGraph, i: usize) -> Option<Vec3> {
    let nb = graph.neighbor_points(cloud, i);
    let plane = fit_plane(&nb).ok().filter(|p| !p.degenerate)?;
    let p = cloud.point(i);
    let frame = build_frame(&plane, plane.project(p));
    let uv: Vec<[f64; 2]> = nb.iter().map(|&q| frame.to_uv(q)).collect();
    let line = fit_line2d(&uv).ok().filter(|l| !l.degenerate)?;
    // The point itself sits at the frame origin.
    let q = line.project([0.0, 0.0]);
    Some(frame.uv_vector(q))
}

/// 2-D sub-step. The displacement is computed in the local frame at the
/// projection `h` but applied to the original position `p`.
pub fn planar_step_2d(cloud: &PointCloud, graph: &NeighborGraph, coeff: f64, round: Round) -> Result<PointCloud> {
    check_graph(cloud, graph)?;
    let s = round.sign() * coeff;
    map_points(cloud, |i, p| match planar_offset(cloud, graph, i) {
        Some(d) => p + d * s,
        None => p,
    })
}

/// One erosion + dilation iteration of `config.method` at neighborhood size `k`.
pub fn smooth_iteration(cloud: &PointCloud, k: usize, config: &SmoothConfig) -> Result<PointCloud> {
    let mut graph: Option<NeighborGraph> = None;
    let mut graph_for = |c: &PointCloud| -> Result<NeighborGraph> {
        match (config.graph_refresh, &graph) {
            (GraphRefresh::PerIteration, Some(g)) => Ok(g.clone()),
            _ => {
                let g = knn(c, k)?;
                graph = Some(g.clone());
                Ok(g)
            }
        }
    };

    match config.method {
        SmoothMethod::PlaneFit => {
            let g = graph_for(cloud)?;
            let c = planar_step_2d(cloud, &g, config.lambda, Round::Erosion)?;
            let g = graph_for(&c)?;
            let c = plane_step_3d(&c, &g, config.lambda, Round::Erosion)?;
            let g = graph_for(&c)?;
            let c = planar_step_2d(&c, &g, config.mu, Round::Dilation)?;
            let g = graph_for(&c)?;
            plane_step_3d(&c, &g, config.mu, Round::Dilation)
        }
        SmoothMethod::Taubin => {
            let g = graph_for(cloud)?;
            let c = taubin_step(cloud, &g, config.lambda)?;
            let g = graph_for(&c)?;
            taubin_step(&c, &g, -config.mu)
        }
        SmoothMethod::Quadric => {
            let g = graph_for(cloud)?;
            let c = quadric_step(cloud, &g, config.lambda, Round::Erosion)?;
            let g = graph_for(&c)?;
            quadric_step(&c, &g, config.mu, Round::Dilation)
        }
    }
}

fn quadric_step(cloud: &PointCloud, graph: &NeighborGraph, coeff: f64, round: Round) -> Result<PointCloud> {
    check_graph(cloud, graph)?;
    let s = round.sign() * coeff;
    map_points(cloud, |i, p| {
        match quadric_displacement(p, &graph.neighbor_points(cloud, i)) {
            Some(d) => p + d * s,
            None => p,
        }
    })
}

fn size_measure(cloud: &PointCloud, center: Vec3, rescale: Rescale) -> f64 {
    if cloud.len() < 2 {
        return 0.0;
    }
    match rescale {
        Rescale::None => 1.0,
        Rescale::MaxRadius => cloud.max_radius(center),
        Rescale::RmsRadius => {
            let ss: f64 = cloud.points().iter().map(|p| p.distance_squared(center)).sum();
            (ss / cloud.len() as f64).sqrt()
        }
        Rescale::MeanSpacing => match knn(cloud, SPACING_K.min(cloud.len() - 1)) {
            Ok(g) => (0..g.len()).flat_map(|i| g.distances(i).iter().copied()).sum::<f64>() / (g.len() * g.k()) as f64,
            Err(_) => 0.0,
        },
    }
}

fn restore_size(cloud: PointCloud, centroid: Vec3, size: f64, rescale: Rescale) -> Result<PointCloud> {
    if rescale == Rescale::None {
        return Ok(cloud);
    }
    let c = cloud.centroid();
    let current = size_measure(&cloud, c, rescale);
    if !(current > 0.0) {
        return Err(Error::Degenerate("smoothing collapsed the cloud to a point".into()));
    }
    if current == size && c == centroid {
        return Ok(cloud);
    }
    let s = size / current;
    cloud.map(|p| centroid + (p - c) * s)
}

/// Runs `config.iterations` smoothing iterations with the growing
/// neighborhood schedule and captures a snapshot every
/// `iterations / levels` iterations. Level 0 is `cloud` itself.
pub fn smooth_sequence(cloud: &PointCloud, config: &SmoothConfig) -> Result<SmoothSequence> {
    config.validate()?;
    if cloud.len() <= config.k_max {
        return Err(Error::Parameter(format!(
            "smoothing needs more than k_max={} points, got {}",
            config.k_max,
            cloud.len()
        )));
    }
    let centroid = cloud.centroid();
    let size = size_measure(cloud, centroid, config.rescale);
    let every = config.iterations / config.levels;

    let mut clouds = Vec::with_capacity(config.levels + 1);
    clouds.push(cloud.clone());
    let mut current = cloud.clone();
    for it in 1..=config.iterations {
        let next = smooth_iteration(&current, config.k_at(it), config)?;
        current = restore_size(next, centroid, size, config.rescale)?;
        if every > 0 && it % every == 0 {
            clouds.push(current.clone());
        }
    }
    while clouds.len() < config.levels + 1 {
        // iterations == 0: every level is the input.
        clouds.push(cloud.clone());
    }
    Ok(SmoothSequence { clouds, config: *config })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn planar_grid(n: usize) -> PointCloud {
        let mut pts = vec![];
        for i in 0..n {
            for j in 0..n {
                // Slight shear keeps the grid in generic position for kNN.
                pts.push(Vec3::new(i as f64 + 0.013 * j as f64, j as f64 + 0.007 * i as f64, 0.0));
            }
        }
        PointCloud::new(pts).unwrap()
    }

    fn max_shift(a: &PointCloud, b: &PointCloud) -> f64 {
        a.points().iter().zip(b.points()).map(|(p, q)| p.distance(*q)).fold(0.0, f64::max)
    }

    #[test]
    fn k_schedule_default() {
        let c = SmoothConfig::default();
        let ks: Vec<usize> = (1..=80).map(|i| c.k_at(i)).collect();
        assert!(ks[0..4].iter().all(|&k| k == 20));
        assert!(ks[4..8].iter().all(|&k| k == 40));
        assert!(ks[8..].iter().all(|&k| k == 60));
    }

    #[test]
    fn config_validation() {
        assert!(SmoothConfig::default().validate().is_ok());
        let bad = [
            SmoothConfig { lambda: 1.0, ..Default::default() },
            SmoothConfig { mu: 0.5, ..Default::default() },
            SmoothConfig { k_start: 80, ..Default::default() },
            SmoothConfig { iterations: 81, ..Default::default() },
            SmoothConfig { levels: 0, ..Default::default() },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }

    #[test]
    fn planar_cloud_fixed_under_3d_steps() {
        let c = planar_grid(8);
        let g = knn(&c, 8).unwrap();
        assert_eq!(erosion_step_3d(&c, &g, 0.7).unwrap(), c);
        assert_eq!(dilation_step_3d(&c, &g, 1.0).unwrap(), c);
    }

    #[test]
    fn zero_coefficients_are_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = PointCloud::new((0..40).map(|_| Vec3::new(rng.random(), rng.random(), rng.random())).collect()).unwrap();
        let g = knn(&c, 6).unwrap();
        assert_eq!(erosion_step_3d(&c, &g, 0.0).unwrap(), c);
        assert_eq!(dilation_step_3d(&c, &g, 0.0).unwrap(), c);
        assert_eq!(planar_step_2d(&c, &g, 0.0, Round::Erosion).unwrap(), c);
        let cfg = SmoothConfig { lambda: 0.0, mu: 0.0, ..Default::default() };
        assert_eq!(smooth_iteration(&c, 6, &cfg).unwrap(), c);
    }

    #[test]
    fn corner_point_moves_toward_face_plane() {
        // Point 0 sits above four neighbors on z = 0; the fit is z = 0, so the
        // erosion step moves it by exactly lambda * (0, 0, -1).
        let pts = vec![
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(-1.0, 0.0, 0.0),
            Vec3::new(0.0, -1.0, 0.0),
        ];
        let c = PointCloud::new(pts).unwrap();
        let g = knn(&c, 4).unwrap();
        let out = erosion_step_3d(&c, &g, 0.7).unwrap();
        assert!((out.point(0) - Vec3::new(0.0, 0.0, 0.3)).norm() < 1e-15);
    }

    #[test]
    fn erosion_then_dilation_two_step() {
        // Apex over the center of one cell of a 7x7 grid on z = 0. Every grid
        // point's four nearest neighbors lie on the grid, so no grid point
        // moves and the apex's plane stays z = 0 across both steps.
        let mut pts = vec![Vec3::new(0.5, 0.5, 1.0)];
        for i in -3..=3 {
            for j in -3..=3 {
                pts.push(Vec3::new(i as f64, j as f64, 0.0));
            }
        }
        let c = PointCloud::new(pts).unwrap();
        let g = knn(&c, 4).unwrap();
        let lambda = 0.4;
        let e = erosion_step_3d(&c, &g, lambda).unwrap();
        assert_eq!(&e.points()[1..], &c.points()[1..]);
        let d1 = c.point(0).distance(e.point(0));
        assert!((d1 - lambda * 1.0).abs() < 1e-15);
        let g2 = knn(&e, 4).unwrap();
        let d = dilation_step_3d(&e, &g2, lambda).unwrap();
        let d2 = e.point(0).distance(d.point(0));
        assert!((d2 - lambda * (1.0 - lambda)).abs() < 1e-15);
    }

    #[test]
    fn half_plane_boundary_moves_inward() {
        // Point 0 on the edge y = 0 of a half-disk of neighbors in z = 0.
        let nb = [(1.0, 0.0), (-1.0, 0.0), (0.5, 0.8), (-0.5, 0.8), (0.0, 1.0), (0.9, 0.4)];
        let mut pts = vec![Vec3::ZERO];
        pts.extend(nb.iter().map(|&(x, y)| Vec3::new(x, y, 0.0)));
        let c = PointCloud::new(pts).unwrap();
        let g = knn(&c, 6).unwrap();

        // Independent evaluation: the frame for n = z is (x, y); fit the line
        // to the six 2-D neighbors via the covariance and project the origin.
        let n = nb.len() as f64;
        let (mx, my) = (nb.iter().map(|p| p.0).sum::<f64>() / n, nb.iter().map(|p| p.1).sum::<f64>() / n);
        let sxx = nb.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>() / n;
        let syy = nb.iter().map(|p| (p.1 - my).powi(2)).sum::<f64>() / n;
        let sxy = nb.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / n;
        let lmin = 0.5 * (sxx + syy) - (0.25 * (sxx - syy).powi(2) + sxy * sxy).sqrt();
        let (nx, ny) = {
            let (a, b) = (sxy, lmin - sxx);
            let l = (a * a + b * b).sqrt();
            (a / l, b / l)
        };
        let dist = mx * nx + my * ny; // signed distance of the origin to the line
        let coeff = 0.7;
        let out = planar_step_2d(&c, &g, coeff, Round::Erosion).unwrap();
        let moved = out.point(0) - c.point(0);
        assert_eq!(moved.z, 0.0);
        assert!(moved.y > 0.0, "boundary point should move into the half-plane");
        assert!((moved.norm() - coeff * dist.abs()).abs() < 1e-12);
    }

    #[test]
    fn symmetric_disk_interior_does_not_move() {
        let mut pts = vec![Vec3::ZERO];
        for i in 0..12 {
            let a = std::f64::consts::TAU * i as f64 / 12.0;
            pts.push(Vec3::new(a.cos(), a.sin(), 0.0));
        }
        let c = PointCloud::new(pts).unwrap();
        let g = knn(&c, 12).unwrap();
        let out = planar_step_2d(&c, &g, 0.7, Round::Erosion).unwrap();
        assert!(out.point(0).norm() < 1e-12);
    }

    #[test]
    fn zero_coefficient_sequence_repeats_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let c = PointCloud::new((0..80).map(|_| Vec3::new(rng.random(), rng.random(), rng.random())).collect()).unwrap();
        let cfg = SmoothConfig { lambda: 0.0, mu: 0.0, iterations: 20, ..Default::default() };
        let seq = smooth_sequence(&c, &cfg).unwrap();
        assert_eq!(seq.clouds().len(), 11);
        for l in seq.clouds() {
            assert_eq!(l.points(), c.points());
        }
    }

    #[test]
    fn sequence_requires_enough_points() {
        let c = planar_grid(7);
        assert!(matches!(smooth_sequence(&c, &SmoothConfig::default()), Err(Error::Parameter(_))));
    }

    #[test]
    fn snapshot_count_follows_levels() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c = PointCloud::new((0..120).map(|_| Vec3::new(rng.random(), rng.random(), rng.random())).collect()).unwrap();
        let cfg = SmoothConfig { levels: 5, iterations: 10, ..Default::default() };
        let seq = smooth_sequence(&c, &cfg).unwrap();
        assert_eq!(seq.levels(), 5);
        assert_eq!(seq.original(), &c);
        assert!(max_shift(seq.original(), seq.most_smoothed()) > 0.0);
    }
}
