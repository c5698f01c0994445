use graph_poisson::geometry::{build_graph, closest_point, make_kernel, sample_points, DensityKind};
use graph_poisson::{Density, Domain, Error, KernelKind, PointSet};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

const KERNELS: [KernelKind; 3] = [KernelKind::Indicator, KernelKind::Cone, KernelKind::Bump];

fn cell_probabilities(rho: &Density, m: usize) -> Vec<f64> {
    let q = 40;
    let h = 1.0 / (m * q) as f64;
    let mut p = vec![0.0; m * m];
    for i in 0..m * q {
        for j in 0..m * q {
            let x = [(i as f64 + 0.5) * h, (j as f64 + 0.5) * h];
            p[(i / q) * m + j / q] += rho.eval(&x) * h * h;
        }
    }
    p
}

#[test]
fn sampler_matches_density_cell_masses() {
    let dom = Domain::unit_box(2);
    let kinds = [
        DensityKind::Constant,
        DensityKind::Affine { slope: vec![0.8, -0.4] },
        DensityKind::Bump { center: Some(vec![0.3, 0.6]), amplitude: 2.0, width: 0.15 },
    ];
    let n = 10_000;
    let m = 4;
    for (s, kind) in kinds.into_iter().enumerate() {
        let rho = Density::new(kind, &dom).unwrap();
        let p = cell_probabilities(&rho, m);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-4);
        let pts = sample_points(&dom, &rho, n, 40 + s as u64).unwrap();
        let mut count = vec![0usize; m * m];
        for x in pts.iter() {
            assert!(dom.contains(x));
            count[(x[0] * m as f64) as usize * m + (x[1] * m as f64) as usize] += 1;
        }
        for (c, p) in count.iter().zip(&p) {
            let mean = n as f64 * p;
            let sd = (n as f64 * p * (1.0 - p)).sqrt();
            assert!((*c as f64 - mean).abs() <= 4.0 * sd, "count {c} expected {mean:.1} ± {sd:.1}");
        }
    }
}

#[test]
fn disk_samples_stay_inside() {
    let dom = Domain::unit_disk();
    let rho = Density::constant(&dom).unwrap();
    let pts = sample_points(&dom, &rho, 2000, 3).unwrap();
    assert!(pts.iter().all(|x| dom.contains(x)));
    let inner = pts.iter().filter(|x| (x[0] - 0.5).hypot(x[1] - 0.5) < 0.25).count() as f64 / 2000.0;
    assert!((inner - 0.25).abs() < 4.0 * (0.25f64 * 0.75 / 2000.0).sqrt());
}

#[test]
fn sampling_is_deterministic() {
    let dom = Domain::unit_box(2);
    let rho = Density::constant(&dom).unwrap();
    let a = sample_points(&dom, &rho, 100, 7).unwrap();
    let b = sample_points(&dom, &rho, 100, 7).unwrap();
    let c = sample_points(&dom, &rho, 100, 8).unwrap();
    assert_eq!(a.coords(), b.coords());
    assert_ne!(a.coords(), c.coords());
}

#[test]
fn edges_match_brute_force() {
    for d in 1..=3 {
        let dom = Domain::unit_box(d);
        let pts = sample_points(&dom, &Density::constant(&dom).unwrap(), 500, d as u64).unwrap();
        for kind in KERNELS {
            let eps = 0.25;
            let k = make_kernel(kind, d).unwrap();
            let g = build_graph(&pts, eps, &k).unwrap();
            let mut count = 0;
            for i in 0..500 {
                assert_eq!(g.weight(i, i), k.eval_eps(0.0, eps));
                for j in i + 1..500 {
                    let r: f64 = pts.point(i).iter().zip(pts.point(j)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                    let w = if r <= eps { k.eval_eps(r, eps) } else { 0.0 };
                    assert_eq!(g.weight(i, j), w, "d={d} {kind:?} ({i},{j})");
                    if w > 0.0 {
                        count += 1;
                    }
                }
            }
            assert_eq!(g.edges().count(), count);
        }
    }
}

#[test]
fn closest_point_is_nearest_with_smallest_index() {
    let dom = Domain::unit_box(2);
    let pts = sample_points(&dom, &Density::constant(&dom).unwrap(), 1000, 5).unwrap();
    let g = build_graph(&pts, 0.1, &make_kernel(KernelKind::Indicator, 2).unwrap()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..200 {
        let x = [rng.gen::<f64>(), rng.gen::<f64>()];
        let i = closest_point(&x, &g).unwrap();
        let di = (pts.point(i)[0] - x[0]).hypot(pts.point(i)[1] - x[1]);
        for (j, p) in pts.iter().enumerate() {
            let dj = (p[0] - x[0]).hypot(p[1] - x[1]);
            assert!(dj > di || (dj == di && j >= i));
        }
    }
    let dup = PointSet::from_rows(1, &[vec![0.5], vec![0.2], vec![0.2], vec![0.8]]).unwrap();
    let g = build_graph(&dup, 0.5, &make_kernel(KernelKind::Indicator, 1).unwrap()).unwrap();
    assert_eq!(closest_point(&[0.21], &g).unwrap(), 1);
    assert!(matches!(closest_point(&[0.2, 0.1], &g), Err(Error::LengthMismatch { .. })));
}

#[test]
fn sigma_eta_is_isotropic() {
    let m = 400;
    let h = 2.0 / m as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for kind in KERNELS {
        let k = make_kernel(kind, 2).unwrap();
        let tol = if kind == KernelKind::Indicator { 2e-2 } else { 2e-3 };
        for _ in 0..20 {
            let t: f64 = rng.gen_range(0.0..2.0 * PI);
            let e = [t.cos(), t.sin()];
            let mut s = 0.0;
            let mut mass = 0.0;
            for i in 0..m {
                for j in 0..m {
                    let z = [-1.0 + (i as f64 + 0.5) * h, -1.0 + (j as f64 + 0.5) * h];
                    let w = k.eval(z[0].hypot(z[1])) * h * h;
                    let p = z[0] * e[0] + z[1] * e[1];
                    s += p * p * w;
                    mass += w;
                }
            }
            assert!((mass - 1.0).abs() < tol, "{kind:?} mass {mass}");
            assert!((s - k.sigma_eta()).abs() < tol * k.sigma_eta(), "{kind:?} {s} vs {}", k.sigma_eta());
        }
    }
}

#[test]
fn kernel_reference_values() {
    let k = make_kernel(KernelKind::Indicator, 2).unwrap();
    assert!((k.eval_eps(0.05, 0.1) - 1.0 / (PI * 0.01)).abs() < 1e-9);
    assert!((k.sigma_eta() - 0.25).abs() < 1e-9);
    assert_eq!(k.eval_eps(0.1000001, 0.1), 0.0);
    let k3 = make_kernel(KernelKind::Indicator, 3).unwrap();
    assert!((k3.peak() - 3.0 / (4.0 * PI)).abs() < 1e-9);
    assert!((k3.sigma_eta() - 0.2).abs() < 1e-9);
    assert!(matches!(make_kernel(KernelKind::Cone, 4), Err(Error::UnsupportedDimension(4))));
}

#[test]
fn far_points_are_disconnected() {
    let pts = PointSet::from_rows(2, &[vec![0.1, 0.1], vec![0.15, 0.1], vec![0.9, 0.9], vec![0.9, 0.85]]).unwrap();
    let g = build_graph(&pts, 0.5, &make_kernel(KernelKind::Indicator, 2).unwrap()).unwrap();
    assert_eq!(g.weight(0, 2), 0.0);
    assert!(g.weight(0, 1) > 0.0);
    assert!(!g.is_connected());
}

#[test]
fn build_graph_rejects_sparse_regime() {
    let dom = Domain::unit_box(2);
    let pts = sample_points(&dom, &Density::constant(&dom).unwrap(), 50, 1).unwrap();
    let k = make_kernel(KernelKind::Indicator, 2).unwrap();
    assert!(matches!(build_graph(&pts, 0.1, &k), Err(Error::Assumption(_))));
    assert!(build_graph(&pts, 0.2, &make_kernel(KernelKind::Indicator, 1).unwrap()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn graph_weights_are_symmetric_and_local(n in 120usize..300, eps in 0.1f64..0.4, seed in 0u64..1000) {
        let dom = Domain::unit_box(2);
        let pts = sample_points(&dom, &Density::constant(&dom).unwrap(), n, seed).unwrap();
        let g = build_graph(&pts, eps, &make_kernel(KernelKind::Cone, 2).unwrap()).unwrap();
        for (i, j, w) in g.edges() {
            prop_assert!(i < j);
            prop_assert_eq!(g.weight(j, i), w);
            let r = (pts.point(i)[0] - pts.point(j)[0]).hypot(pts.point(i)[1] - pts.point(j)[1]);
            prop_assert!(r <= eps);
        }
    }

    #[test]
    fn density_is_normalised_and_bounded(a in -0.9f64..0.9, b in -0.9f64..0.9) {
        let dom = Domain::unit_box(2);
        let rho = Density::new(DensityKind::Affine { slope: vec![a, b] }, &dom).unwrap();
        let p = cell_probabilities(&rho, 1);
        prop_assert!((p[0] - 1.0).abs() < 1e-9);
        for x in [[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.3, 0.7]] {
            let v = rho.eval(&x);
            prop_assert!(v >= rho.min() - 1e-12 && v <= rho.max() + 1e-12);
        }
    }
}
