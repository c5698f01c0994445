#![allow(dead_code)]

use graph_poisson::{Graph, GraphFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Dense = Vec<Vec<f64>>;

/// Random connected weighted graph: a path backbone plus random chords and self loops.
pub fn random_graph(n: usize, p: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        if rng.gen_bool(0.5) {
            edges.push((i, i, rng.gen_range(0.1..1.0)));
        }
        for j in i + 1..n {
            if j == i + 1 || rng.gen_bool(p) {
                edges.push((i, j, rng.gen_range(0.1..2.0)));
            }
        }
    }
    Graph::from_edges(n, &edges).unwrap()
}

pub fn random_vec(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn weights(g: &Graph) -> Dense {
    let n = g.len();
    let mut w = vec![vec![0.0; n]; n];
    for (i, s) in g.self_weights().iter().enumerate() {
        w[i][i] = *s;
    }
    for (i, j, v) in g.edges() {
        w[i][j] = v;
        w[j][i] = v;
    }
    w
}

pub fn degrees(w: &Dense) -> Vec<f64> {
    w.iter().map(|r| r.iter().sum()).collect()
}

pub fn matvec(a: &Dense, x: &[f64]) -> Vec<f64> {
    a.iter().map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
}

pub fn matmul(a: &Dense, b: &Dense) -> Dense {
    let n = a.len();
    let m = b[0].len();
    let mut c = vec![vec![0.0; m]; n];
    for i in 0..n {
        for (l, bl) in b.iter().enumerate() {
            let a_il = a[i][l];
            if a_il != 0.0 {
                for j in 0..m {
                    c[i][j] += a_il * bl[j];
                }
            }
        }
    }
    c
}

pub fn identity(n: usize) -> Dense {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

pub fn matpow(a: &Dense, k: usize) -> Dense {
    let mut out = identity(a.len());
    for _ in 0..k {
        out = matmul(a, &out);
    }
    out
}

/// `D⁻¹ W`, the forward walk `I - L_rw`.
pub fn forward(w: &Dense) -> Dense {
    let d = degrees(w);
    w.iter().enumerate().map(|(i, r)| r.iter().map(|v| v / d[i]).collect()).collect()
}

/// `W D⁻¹`, the adjoint walk `I - L_rw^T`.
pub fn adjoint(w: &Dense) -> Dense {
    let d = degrees(w);
    w.iter().map(|r| r.iter().zip(&d).map(|(v, dj)| v / dj).collect()).collect()
}

/// Unnormalised Laplacian `D - W`.
pub fn laplacian(w: &Dense) -> Dense {
    let d = degrees(w);
    let n = w.len();
    (0..n).map(|i| (0..n).map(|j| if i == j { d[i] - w[i][j] } else { -w[i][j] }).collect()).collect()
}

/// Solves `L x = b` with `Σ deg·x = 0` through the bordered system
/// `[L deg; degᵀ 0]` by Gaussian elimination with partial pivoting.
pub fn solve_singular(l: &Dense, deg: &[f64], b: &[f64]) -> Vec<f64> {
    let n = l.len();
    let mut a: Dense = (0..=n)
        .map(|i| {
            let mut row = vec![0.0; n + 2];
            if i < n {
                row[..n].copy_from_slice(&l[i]);
                row[n] = deg[i];
                row[n + 1] = b[i];
            } else {
                row[..n].copy_from_slice(deg);
            }
            row
        })
        .collect();
    let m = n + 1;
    for c in 0..m {
        let p = (c..m).max_by(|x, y| a[*x][c].abs().partial_cmp(&a[*y][c].abs()).unwrap()).unwrap();
        a.swap(c, p);
        let piv = a[c][c];
        for r in 0..m {
            if r != c && a[r][c] != 0.0 {
                let f = a[r][c] / piv;
                for j in c..=m {
                    a[r][j] -= f * a[c][j];
                }
            }
        }
    }
    (0..n).map(|i| a[i][m] / a[i][i]).collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn func(g: &Graph, v: Vec<f64>) -> GraphFunction {
    g.function(v).unwrap()
}
