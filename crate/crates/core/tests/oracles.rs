mod common;

use common::*;
use curvsal::classifier::Classifier;
use curvsal::geometry::{
    curvature_normal, eigen::sym_eigen3, fit_line2d, fit_plane, knn, project_to_plane,
};
use curvsal::io::{farthest_point_sample, ShapeClass};
use curvsal::metrics::{csd, dds, kernel_densities, ks_pvalue, ks_statistic, mr, DDS_SIGMA};
use curvsal::saliency::{coordinate_median, zheng_saliency};
use curvsal::{PointCloud, Vec3};
use nalgebra::{Matrix3, Rotation3, SymmetricEigen, Vector3};
use rand::seq::SliceRandom;
use rand::Rng;

#[test]
fn knn_equals_brute_force() {
    for (seed, n) in [(1, 5), (2, 17), (3, 64), (4, 150), (5, 200)] {
        let mut cloud = random_cloud(n, seed);
        if seed == 4 {
            // Snap to a coarse grid so many distances tie exactly.
            cloud = cloud.map(|p| Vec3::new((p.x * 3.0).round(), (p.y * 3.0).round(), (p.z * 2.0).round() + p.x * 0.0)).unwrap();
        }
        for k in [1, 2, 7, n - 1].into_iter().filter(|&k| k < n) {
            let g = knn(&cloud, k).unwrap();
            for i in 0..n {
                let want = brute_knn(cloud.points(), i, k);
                let idx: Vec<usize> = want.iter().map(|w| w.0).collect();
                assert_eq!(g.neighbors(i), idx.as_slice(), "n={n} k={k} i={i}");
                for (d, w) in g.distances(i).iter().zip(&want) {
                    assert!((d - w.1.sqrt()).abs() <= 1e-12);
                }
            }
        }
    }
}

fn sign_rule(v: [f64; 3]) -> [f64; 3] {
    let first = v.iter().copied().find(|c| c.abs() > 1e-12).unwrap_or(1.0);
    if first < 0.0 {
        [-v[0], -v[1], -v[2]]
    } else {
        v
    }
}

#[test]
fn fit_plane_matches_independent_eigensolver() {
    let mut r = rng(7);
    for fixture in 0..60 {
        let n = 3 + fixture % 40;
        let tilt = Rotation3::from_euler_angles(r.random_range(0.0..3.0), r.random_range(0.0..3.0), r.random_range(0.0..3.0));
        let pts: Vec<Vec3> = (0..n)
            .map(|_| {
                let v = tilt * Vector3::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(-0.1..0.1));
                Vec3::new(v.x + 0.5, v.y - 2.0, v.z + 1.0)
            })
            .collect();
        let mean = pts.iter().copied().sum::<Vec3>() / n as f64;
        let mut cov = Matrix3::zeros();
        for p in &pts {
            let d = Vector3::new(p.x - mean.x, p.y - mean.y, p.z - mean.z);
            cov += d * d.transpose();
        }
        cov /= n as f64;
        let eig = SymmetricEigen::new(cov);
        let imin = (0..3).min_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b])).unwrap();
        let e = eig.eigenvectors.column(imin);
        let want = sign_rule([e[0], e[1], e[2]]);
        let plane = fit_plane(&pts).unwrap();
        for a in 0..3 {
            assert!((plane.normal[a] - want[a]).abs() < 1e-9, "fixture {fixture}: {:?} vs {want:?}", plane.normal);
        }
        let offset = -(want[0] * mean.x + want[1] * mean.y + want[2] * mean.z);
        assert!((plane.offset - offset).abs() < 1e-9);
        assert!((plane.residual - eig.eigenvalues[imin].max(0.0).sqrt()).abs() < 1e-9);
    }
}

#[test]
fn fit_plane_is_rotation_equivariant_and_projection_idempotent() {
    let mut r = rng(8);
    for _ in 0..30 {
        let pts: Vec<Vec3> = (0..20)
            .map(|_| Vec3::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(-0.2..0.2)))
            .collect();
        let rot = Rotation3::from_euler_angles(r.random_range(0.0..6.0), r.random_range(0.0..6.0), r.random_range(0.0..6.0));
        let apply = |p: Vec3| {
            let v = rot * Vector3::new(p.x, p.y, p.z);
            Vec3::new(v.x, v.y, v.z)
        };
        let a = fit_plane(&pts).unwrap();
        let b = fit_plane(&pts.iter().map(|&p| apply(p)).collect::<Vec<_>>()).unwrap();
        let rotated = apply(a.normal);
        assert!((rotated.dot(b.normal).abs() - 1.0).abs() < 1e-9);
        for &p in &pts {
            let h = project_to_plane(p, &a);
            assert!((project_to_plane(h, &a) - h).norm() < 1e-12);
        }
    }
}

#[test]
fn fit_line2d_matches_grid_search() {
    let mut r = rng(9);
    for fixture in 0..40 {
        let pts: Vec<[f64; 2]> = (0..20)
            .map(|_| {
                let s: f64 = r.random_range(-2.0..2.0);
                // Noisy samples near u + v = 2, plus a random tilt per fixture.
                let e: f64 = r.random_range(-0.05..0.05) * (1.0 + fixture as f64 * 0.1);
                [1.0 + s + e, 1.0 - s + e]
            })
            .collect();
        let line = fit_line2d(&pts).unwrap();
        let t = grid_line_angle(&pts);
        let want = [t.cos(), t.sin()];
        let dot = line.normal[0] * want[0] + line.normal[1] * want[1];
        assert!(1.0 - dot.abs() < 1e-12, "fixture {fixture}: {:?} vs {want:?}", line.normal);
        assert!(dot.abs().min(1.0).acos() < 1e-6);
    }
    // The exact line u + v = 2.
    let exact: Vec<[f64; 2]> = (0..20).map(|i| [i as f64 * 0.1, 2.0 - i as f64 * 0.1]).collect();
    let line = fit_line2d(&exact).unwrap();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    assert!((line.normal[0] - s).abs() < 1e-9 && (line.normal[1] - s).abs() < 1e-9);
    assert!((line.offset + 2.0 * s).abs() < 1e-9);
}

#[test]
fn farthest_point_sample_equals_brute_force_greedy() {
    for (seed, n) in [(1, 2), (2, 10), (3, 57), (4, 100)] {
        let cloud = random_cloud(n, seed);
        for count in [1, 2, n / 2, n] {
            for start in [0, n - 1] {
                let got = farthest_point_sample(&cloud, count.max(1), start).unwrap();
                assert_eq!(got, brute_fps(cloud.points(), count.max(1), start), "n={n} count={count}");
            }
        }
    }
    // Lattice with equal distances everywhere: ties go to the lower index.
    let lattice = PointCloud::new((0..27).map(|i| Vec3::new((i % 3) as f64, (i / 3 % 3) as f64, (i / 9) as f64)).collect()).unwrap();
    assert_eq!(farthest_point_sample(&lattice, 27, 13).unwrap(), brute_fps(lattice.points(), 27, 13));
}

#[test]
fn eigen_extremes_match_power_iteration() {
    let mut r = rng(10);
    for _ in 0..20 {
        let a: Vec<f64> = (0..6).map(|_| r.random_range(-1.0..1.0)).collect();
        let m = [[a[0] + 3.0, a[1], a[2]], [a[1], a[3], a[4]], [a[2], a[4], a[5] - 3.0]];
        let (vals, _) = sym_eigen3(m);
        // Shift to a positive definite matrix so the dominant eigenvalue is
        // the largest one.
        let up = [0, 1, 2].map(|i| [0, 1, 2].map(|j| m[i][j] + if i == j { 10.0 } else { 0.0 }));
        assert!((vals[2] - (power_largest(up) - 10.0)).abs() < 1e-9);
        let shift = vals[2] + 10.0;
        let flipped = [0, 1, 2].map(|i| [0, 1, 2].map(|j| if i == j { shift - m[i][j] } else { -m[i][j] }));
        assert!((vals[0] - (shift - power_largest(flipped))).abs() < 1e-9);
    }
}

#[test]
fn ring_curvature_normal_is_quarter_inverse_radius() {
    for r in [0.5, 1.0, 2.0] {
        for deg in [1.0, 10.0, 30.0, 45.0, 60.0, 89.0] {
            let theta = f64::to_radians(deg);
            let ring: Vec<Vec3> = (0..64)
                .map(|i| {
                    let phi = std::f64::consts::TAU * i as f64 / 64.0;
                    Vec3::new(r * theta.sin() * phi.cos(), r * theta.sin() * phi.sin(), r * theta.cos())
                })
                .collect();
            let v = curvature_normal(Vec3::new(0.0, 0.0, r), &ring).unwrap();
            assert!((v.norm() - 0.25 / r).abs() < 1e-9, "R={r} theta={deg}: {}", v.norm());
        }
    }
}

fn brute_ks(a: &[f64], b: &[f64]) -> f64 {
    let cdf = |s: &[f64], x: f64| s.iter().filter(|&&v| v <= x).count() as f64 / s.len() as f64;
    a.iter().chain(b).map(|&x| (cdf(a, x) - cdf(b, x)).abs()).fold(0.0, f64::max)
}

#[test]
fn ks_matches_permutation_test() {
    let mut r = rng(11);
    let mut compared = 0;
    for shift in [0.0, 0.1, 0.2, 0.3] {
        let a: Vec<f64> = (0..100).map(|_| r.random_range(0.0..1.0)).collect();
        let b: Vec<f64> = (0..100).map(|_| r.random_range(0.0..1.0) + shift).collect();
        let d = ks_statistic(&a, &b);
        assert!((d - brute_ks(&a, &b)).abs() < 1e-15);
        let mut pool: Vec<f64> = a.iter().chain(&b).copied().collect();
        let mut hits = 0;
        for _ in 0..1000 {
            pool.shuffle(&mut r);
            if ks_statistic(&pool[..100], &pool[100..]) >= d - 1e-12 {
                hits += 1;
            }
        }
        let perm = hits as f64 / 1000.0;
        let p = ks_pvalue(&a, &b);
        assert!((p - perm).abs() < 0.05, "shift {shift}: asymptotic {p} vs permutation {perm}");
        compared += 1;
    }
    assert_eq!(compared, 4);
}

#[test]
fn dds_behaviour_on_spheres() {
    // Densities within one sample are correlated, so single-pair p-values
    // scatter more than a calibrated test would; the median is stable.
    let mut ps: Vec<f64> = (0..7)
        .map(|s| dds(&iid_sample(ShapeClass::Sphere, 1024, 2 * s + 1), &iid_sample(ShapeClass::Sphere, 1024, 2 * s + 2)))
        .collect();
    ps.sort_by(f64::total_cmp);
    assert!(ps[3] > 0.2, "independent samples: {ps:?}");
    let a = iid_sample(ShapeClass::Sphere, 1024, 1);
    let b = iid_sample(ShapeClass::Sphere, 1024, 2);
    assert!((dds(&a, &b) - dds(&b, &a)).abs() < 1e-12);
    assert_eq!(dds(&a, &a), 1.0);
    // Half the points pulled into a tight cap cluster.
    let mut r = rng(3);
    let clustered = PointCloud::new(
        a.points()
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                if i % 2 == 0 {
                    (Vec3::Z + Vec3::new(r.random_range(-0.1..0.1), r.random_range(-0.1..0.1), 0.0)).normalized().unwrap()
                } else {
                    p
                }
            })
            .collect(),
    )
    .unwrap();
    assert!(dds(&a, &clustered) < 0.01);
    // Independent KS on the same densities.
    let (da, dc) = (kernel_densities(&a, DDS_SIGMA), kernel_densities(&clustered, DDS_SIGMA));
    assert!((ks_statistic(&da, &dc) - brute_ks(&da, &dc)).abs() < 1e-15);
}

#[test]
fn shape_metrics_invariances() {
    let cloud = iid_sample(ShapeClass::Torus, 600, 4);
    let rot = Rotation3::from_euler_angles(0.3, -1.1, 2.0);
    let moved = cloud
        .map(|p| {
            let v = rot * Vector3::new(p.x, p.y, p.z);
            Vec3::new(v.x + 3.0, v.y - 1.0, v.z + 0.5)
        })
        .unwrap();
    assert!((csd(&cloud).unwrap() - csd(&moved).unwrap()).abs() < 1e-9);
    assert!((mr(&cloud).unwrap() - mr(&moved).unwrap()).abs() < 1e-9);
    let scaled = cloud.map(|p| p * 2.5).unwrap();
    assert!((csd(&scaled).unwrap() - 2.5 * csd(&cloud).unwrap()).abs() < 1e-9);
    assert!((mr(&scaled).unwrap() - mr(&cloud).unwrap()).abs() < 1e-9);
    assert!(mr(&cloud).unwrap() < 1.0);
    let sphere = even_sample(ShapeClass::Sphere, 1024, 5);
    assert!((mr(&sphere).unwrap() - 1.0).abs() < 0.02);
    let plane = even_sample(ShapeClass::PlanePatch, 400, 6);
    assert!(csd(&plane).unwrap() < 1e-12);
}

#[test]
fn zheng_ranking_agrees_with_point_drop() {
    let net = random_net(4, 12);
    let cloud = random_cloud(64, 13);
    let class = net.scores(&cloud).unwrap().argmax;
    let sal = zheng_saliency(&cloud, &net, class).unwrap().full();
    let median = coordinate_median(&cloud);
    let base = net.scores(&cloud).unwrap().scores[class];
    let drop: Vec<f64> = (0..cloud.len())
        .map(|i| {
            let mut pts = cloud.points().to_vec();
            pts[i] = median;
            base - net.scores(&PointCloud::new(pts).unwrap()).unwrap().scores[class]
        })
        .collect();
    let rho = spearman(&sal, &drop);
    eprintln!("zheng vs point-drop rank correlation: {rho:.3}");
    assert!(rho > 0.5, "rank correlation {rho}");
}
