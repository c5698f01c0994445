mod common;

use common::*;
use graph_poisson::{Error, Graph, LaplacianKind};
use proptest::prelude::*;

const KINDS: [LaplacianKind; 4] =
    [LaplacianKind::Unnormalized, LaplacianKind::RandomWalk, LaplacianKind::RandomWalkAdjoint, LaplacianKind::GeometricScaled];

fn path3() -> Graph {
    Graph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap()
}

#[test]
fn inner_product_examples() {
    let g = Graph::from_edges(2, &[(0, 1, 1.0)]).unwrap();
    let one = g.constant(1.0);
    assert_eq!(g.inner(&one, &one).unwrap(), 1.0);
    let u = func(&g, vec![1.0, 2.0]);
    let v = func(&g, vec![3.0, 4.0]);
    assert_eq!(g.inner(&u, &v).unwrap(), 5.5);
}

#[test]
fn delta_examples() {
    let g = random_graph(4, 0.5, 1);
    assert_eq!(g.delta(2).unwrap().values(), &[0.0, 0.0, 4.0, 0.0]);
    let d = g.delta(1).unwrap();
    assert_eq!(g.inner(&d, &d).unwrap(), 4.0);
    assert_eq!(g.pnorm(&d, 1.0).unwrap(), 1.0);
    let u = func(&g, random_vec(4, 2));
    assert!((g.inner(&d, &u).unwrap() - u.values()[1]).abs() < 1e-15);
    assert!(matches!(g.delta(4), Err(Error::IndexOutOfRange { index: 4, n: 4 })));
}

#[test]
fn norm_examples() {
    let g = random_graph(4, 0.5, 3);
    let u = func(&g, vec![1.0, -1.0, 1.0, -1.0]);
    assert!((g.pnorm(&u, 2.0).unwrap() - 1.0).abs() < 1e-15);
    let c = g.constant(-2.5);
    for p in [1.0, 1.5, 2.0, 7.0, f64::INFINITY] {
        assert!((g.pnorm(&c, p).unwrap() - 2.5).abs() < 1e-14);
    }
    assert!(g.pnorm(&c, 0.5).is_err());
}

#[test]
fn weighted_mean_examples() {
    let g = path3();
    assert_eq!(g.degrees(), &[1.0, 2.0, 1.0]);
    assert_eq!(g.weighted_mean(&func(&g, vec![1.0, 0.0, 0.0])).unwrap(), 0.25);
    assert_eq!(g.weighted_mean(&g.constant(3.0)).unwrap(), 3.0);
    let empty = Graph::from_edges(2, &[]).unwrap();
    assert!(matches!(empty.weighted_mean(&empty.constant(1.0)), Err(Error::ZeroTotalDegree)));
}

#[test]
fn laplacian_examples() {
    let g = Graph::from_edges(2, &[(0, 1, 1.0)]).unwrap();
    let u = func(&g, vec![1.0, 0.0]);
    assert_eq!(g.laplacian_apply(LaplacianKind::Unnormalized, &u).unwrap().values(), &[1.0, -1.0]);
    let h = random_graph(30, 0.2, 4);
    let z = h.laplacian_apply(LaplacianKind::RandomWalk, &h.constant(1.0)).unwrap();
    assert!(max_abs(z.values()) < 1e-15);
    let bare = Graph::from_edges(3, &[(0, 1, 1.0)]).unwrap();
    assert!(matches!(bare.laplacian_apply(LaplacianKind::RandomWalk, &bare.constant(1.0)), Err(Error::ZeroDegree(2))));
    assert!(bare.laplacian_apply(LaplacianKind::GeometricScaled, &bare.constant(1.0)).is_err());
}

#[test]
fn laplacians_match_dense_assembly() {
    let g = random_graph(50, 0.15, 5).with_scale(0.2, 0.3).unwrap();
    let w = weights(&g);
    let l = laplacian(&w);
    let d = degrees(&w);
    let u = random_vec(50, 6);
    let lu = matvec(&l, &u);
    let f = g.geometric_factor().unwrap();
    assert!((f - 0.3 * 0.04 * 49.0).abs() < 1e-15);
    let expect = [
        lu.clone(),
        lu.iter().zip(&d).map(|(a, b)| a / b).collect(),
        {
            let s: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a / b).collect();
            let ws = matvec(&w, &s);
            u.iter().zip(ws).map(|(a, b)| a - b).collect()
        },
        lu.iter().map(|a| a / f).collect(),
    ];
    for (kind, e) in KINDS.iter().zip(expect.iter()) {
        let got = g.laplacian_apply(*kind, &func(&g, u.clone())).unwrap();
        assert!(max_abs_diff(got.values(), e) < 1e-13 * max_abs(e).max(1.0), "{kind:?}");
    }
}

#[test]
fn dirichlet_energy_examples() {
    let g = random_graph(40, 0.2, 7).with_scale(0.1, 0.25).unwrap();
    assert_eq!(g.dirichlet_energy(&g.constant(4.0)).unwrap(), 0.0);
    let u = func(&g, random_vec(40, 8));
    let e = g.dirichlet_energy(&u).unwrap();
    let lu = g.laplacian_apply(LaplacianKind::GeometricScaled, &u).unwrap();
    assert!((e - g.inner(&u, &lu).unwrap()).abs() < 1e-12 * e);
    assert!((g.dirichlet_energy(&u.scaled(2.0)).unwrap() - 4.0 * e).abs() < 1e-12 * e);
    let f = func(&g, random_vec(40, 9));
    assert_eq!(g.energy(&g.zeros(), &f).unwrap(), 0.0);
    assert!((g.energy(&u, &g.zeros()).unwrap() - 0.5 * e).abs() < 1e-15 * e.max(1.0));
}

#[test]
fn cross_graph_mixing_is_rejected() {
    let a = random_graph(5, 0.5, 1);
    let b = random_graph(5, 0.5, 1);
    let u = a.constant(1.0);
    assert!(matches!(b.inner(&u, &b.constant(1.0)), Err(Error::GraphMismatch)));
    assert!(matches!(b.laplacian_apply(LaplacianKind::Unnormalized, &u), Err(Error::GraphMismatch)));
    assert!(matches!(a.function(vec![1.0; 4]), Err(Error::LengthMismatch { expected: 5, got: 4 })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn stored_weights_are_symmetric(n in 2usize..60, p in 0.0f64..1.0, seed in 0u64..10_000) {
        let g = random_graph(n, p, seed);
        for (i, j, w) in g.edges() {
            prop_assert_eq!(g.weight(i, j), w);
            prop_assert_eq!(g.weight(j, i), w);
        }
    }

    #[test]
    fn adjoint_pair(n in 2usize..80, p in 0.0f64..1.0, seed in 0u64..10_000) {
        let g = random_graph(n, p, seed);
        let u = func(&g, random_vec(n, seed + 1));
        let v = func(&g, random_vec(n, seed + 2));
        let lhs = g.inner(&g.laplacian_apply(LaplacianKind::RandomWalk, &u).unwrap(), &v).unwrap();
        let rhs = g.inner(&u, &g.laplacian_apply(LaplacianKind::RandomWalkAdjoint, &v).unwrap()).unwrap();
        let scale = g.pnorm(&u, 2.0).unwrap() * g.pnorm(&v, 2.0).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);
    }

    #[test]
    fn adjoint_is_degree_conjugate(n in 2usize..80, seed in 0u64..10_000) {
        let g = random_graph(n, 0.3, seed);
        let u = func(&g, random_vec(n, seed + 1));
        let deg = g.degrees();
        let s = func(&g, u.values().iter().zip(deg).map(|(a, d)| a / d).collect());
        let rhs: Vec<f64> = g.laplacian_apply(LaplacianKind::RandomWalk, &s).unwrap().values().iter().zip(deg).map(|(a, d)| a * d).collect();
        let lhs = g.laplacian_apply(LaplacianKind::RandomWalkAdjoint, &u).unwrap();
        prop_assert!(max_abs_diff(lhs.values(), &rhs) <= 1e-12 * max_abs(lhs.values()).max(max_abs(u.values())));
    }

    #[test]
    fn constants_are_in_every_kernel(n in 2usize..80, seed in 0u64..10_000, c in -10.0f64..10.0) {
        let g = random_graph(n, 0.3, seed).with_scale(0.5, 0.2).unwrap();
        let one = g.constant(c);
        for kind in [LaplacianKind::Unnormalized, LaplacianKind::RandomWalk, LaplacianKind::GeometricScaled] {
            prop_assert!(max_abs(g.laplacian_apply(kind, &one).unwrap().values()) < 1e-13 * c.abs().max(1.0) * 10.0);
        }
    }

    #[test]
    fn energy_equals_quadratic_form(n in 2usize..80, seed in 0u64..10_000) {
        let g = random_graph(n, 0.3, seed).with_scale(0.3, 0.1).unwrap();
        let u = func(&g, random_vec(n, seed + 4));
        let e = g.dirichlet_energy(&u).unwrap();
        let q = g.inner(&u, &g.laplacian_apply(LaplacianKind::GeometricScaled, &u).unwrap()).unwrap();
        prop_assert!((e - q).abs() <= 1e-12 * e.abs().max(q.abs()).max(1e-300));
    }

    #[test]
    fn mean_projection(n in 2usize..80, seed in 0u64..10_000) {
        let g = random_graph(n, 0.3, seed);
        let u = func(&g, random_vec(n, seed + 5));
        let m = g.weighted_mean(&u).unwrap();
        let centred = u.map(|v| v - m);
        prop_assert!(g.weighted_mean(&centred).unwrap().abs() < 1e-14);
    }
}
