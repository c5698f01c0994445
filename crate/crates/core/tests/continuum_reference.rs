use graph_poisson::continuum::{build_grid, greens_function, interpolate_at, solve_weighted_poisson, GridSource, ReferenceGrid};
use graph_poisson::geometry::DensityKind;
use graph_poisson::solver::SourceSpec;
use graph_poisson::{Density, Domain, Error, PointSet};
use std::f64::consts::PI;

fn grid(d: usize, h: f64, kind: DensityKind) -> ReferenceGrid {
    let dom = Domain::unit_box(d);
    build_grid(&dom, h, &Density::new(kind, &dom).unwrap()).unwrap()
}

fn sampled(g: &ReferenceGrid, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    (0..g.len()).map(|i| f(&g.cell_center(i))).collect()
}

/// Max error against `exact` after fixing the gauge `∫ ρ² u = 0`.
fn gauge_error(g: &ReferenceGrid, u: &[f64], exact: &[f64]) -> f64 {
    let k = g.kappa();
    let mean = exact.iter().zip(k).map(|(a, b)| a * b).sum::<f64>() / k.iter().sum::<f64>();
    u.iter().zip(exact).map(|(a, b)| (a - (b - mean)).abs()).fold(0.0, f64::max)
}

#[test]
fn one_dimensional_green_function_closed_form() {
    let g = grid(1, 1.0 / 512.0, DensityKind::Constant);
    let y = 0.5;
    let u = greens_function(&g, &[y], 1e-12).unwrap();
    let exact = |x: f64| (x * x + y * y) / 2.0 - x.max(y) + 1.0 / 3.0;
    assert!((u.eval(&[0.5]) - 1.0 / 12.0).abs() < 2e-3);
    for i in (0..512).step_by(17) {
        let x = g.cell_center(i)[0];
        assert!((u.values()[i] - exact(x)).abs() < 2e-3, "x={x}");
    }
}

#[test]
fn green_function_reciprocity() {
    let g = grid(2, 1.0 / 32.0, DensityKind::Affine { slope: vec![0.5, -0.3] });
    let a = g.cell_center(5 * 32 + 7);
    let b = g.cell_center(20 * 32 + 26);
    let ga = greens_function(&g, &a, 1e-13).unwrap();
    let gb = greens_function(&g, &b, 1e-13).unwrap();
    let (x, y) = (ga.eval(&b), gb.eval(&a));
    assert!((x - y).abs() < 1e-8 * x.abs().max(1.0), "{x} vs {y}");
}

#[test]
fn superposition_and_negation() {
    let g = grid(2, 1.0 / 32.0, DensityKind::Bump { center: None, amplitude: 1.0, width: 0.25 });
    let s1 = SourceSpec::new(vec![vec![0.3, 0.5], vec![0.7, 0.5]], vec![1.0, -1.0]).unwrap();
    let s2 = SourceSpec::new(vec![vec![0.2, 0.2], vec![0.6, 0.9]], vec![-0.5, 0.5]).unwrap();
    let both = SourceSpec::new(
        vec![vec![0.3, 0.5], vec![0.7, 0.5], vec![0.2, 0.2], vec![0.6, 0.9]],
        vec![1.0, -1.0, -0.5, 0.5],
    )
    .unwrap();
    let neg = SourceSpec::new(s1.anchors().to_vec(), vec![-1.0, 1.0]).unwrap();
    let solve = |s: &SourceSpec| solve_weighted_poisson(&g, &GridSource::atoms(s), 1e-13).unwrap().0;
    let (u1, u2, u12, un) = (solve(&s1), solve(&s2), solve(&both), solve(&neg));
    let scale = u12.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for i in 0..g.len() {
        assert!((u1.values()[i] + u2.values()[i] - u12.values()[i]).abs() < 1e-9 * scale);
        assert!((u1.values()[i] + un.values()[i]).abs() < 1e-9 * scale);
    }
    assert!(g.weighted_integral(&u1).abs() < 1e-12);
}

fn manufactured_error(d: usize, h: f64, slope: f64) -> f64 {
    let mut sl = vec![0.0; d];
    sl[0] = slope;
    let g = grid(d, h, DensityKind::Affine { slope: sl });
    let rho = |x: &[f64]| 1.0 + slope * (x[0] - 0.5);
    let u = |x: &[f64]| x.iter().map(|c| (PI * c).cos()).product::<f64>();
    // -div(ρ² ∇u) with ρ depending on x₀ only
    let f = |x: &[f64]| {
        let r = rho(x);
        let rest: f64 = x[1..].iter().map(|c| (PI * c).cos()).product();
        let c0 = (PI * x[0]).cos();
        let s0 = (PI * x[0]).sin();
        2.0 * PI * slope * r * s0 * rest + d as f64 * PI * PI * r * r * c0 * rest
    };
    let mut b = sampled(&g, f);
    let m = b.iter().sum::<f64>() / b.len() as f64;
    b.iter_mut().for_each(|v| *v -= m);
    let (sol, _) = solve_weighted_poisson(&g, &GridSource::field(b), 1e-13).unwrap();
    gauge_error(&g, sol.values(), &sampled(&g, u))
}

#[test]
fn second_order_on_smooth_data() {
    for (d, hs) in [(1, [1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0]), (2, [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0])] {
        for slope in [0.0, 0.8] {
            let e: Vec<f64> = hs.iter().map(|h| manufactured_error(d, *h, slope)).collect();
            for w in e.windows(2) {
                let order = (w[0] / w[1]).log2();
                assert!(order >= 1.8, "d={d} slope={slope} errors {e:?}");
            }
        }
    }
}

#[test]
fn discrete_operator_is_symmetric() {
    let g = grid(2, 1.0 / 16.0, DensityKind::Bump { center: Some(vec![0.3, 0.6]), amplitude: 2.0, width: 0.2 });
    let n = g.len();
    let mut cols = vec![vec![0.0; n]; n];
    let mut e = vec![0.0; n];
    for (j, col) in cols.iter_mut().enumerate() {
        e[j] = 1.0;
        g.apply(&e, col);
        e[j] = 0.0;
    }
    for i in 0..n {
        let row: f64 = (0..n).map(|j| cols[j][i]).sum();
        assert!(row.abs() < 1e-10);
        for j in 0..n {
            assert!((cols[j][i] - cols[i][j]).abs() < 1e-12);
        }
    }
}

#[test]
fn invalid_sources() {
    let g = grid(2, 1.0 / 16.0, DensityKind::Constant);
    let src = GridSource { field: None, atoms: vec![(vec![0.3, 0.3], 1.0)] };
    assert!(matches!(solve_weighted_poisson(&g, &src, 1e-10), Err(Error::Incompatible(_))));
    let src = GridSource { field: None, atoms: vec![(vec![1.3, 0.3], 1.0), (vec![0.3, 0.3], -1.0)] };
    assert!(solve_weighted_poisson(&g, &src, 1e-10).is_err());
    let (zero, _) = solve_weighted_poisson(&g, &GridSource::default(), 1e-10).unwrap();
    assert!(zero.values().iter().all(|v| *v == 0.0));
}

#[test]
fn interpolation_at_sample_points() {
    let g = grid(2, 1.0 / 16.0, DensityKind::Constant);
    let u = g.sample(|x| 2.0 * x[0] - x[1]);
    let pts = PointSet::from_rows(2, &[vec![0.5, 0.5], vec![0.1, 0.9]]).unwrap();
    let v = interpolate_at(&u, &pts).unwrap();
    assert!((v[0] - 0.5).abs() < 1e-12 && (v[1] + 0.7).abs() < 1e-12);
    let out = PointSet::from_rows(2, &[vec![1.5, 0.5]]).unwrap();
    assert!(matches!(interpolate_at(&u, &out), Err(Error::OutsideDomain)));
}
