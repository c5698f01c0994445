//! Preconditioned conjugate gradients for symmetric positive (semi)definite operators.

use crate::graph::dot;

#[derive(Clone, Copy, Debug)]
pub(crate) struct CgOutcome {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Solves `A x = b` starting from `x`.
///
/// `project` maps vectors into the subspace where `A` is definite and is
/// applied to residuals and preconditioned residuals. `done` sees the
/// current residual and its ℓ² norm.
pub(crate) fn conjugate_gradient(
    mut apply: impl FnMut(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    inv_diag: Option<&[f64]>,
    project: impl Fn(&mut [f64]),
    mut done: impl FnMut(&[f64], f64) -> bool,
    max_iter: usize,
) -> CgOutcome {
    let n = b.len();
    let mut r = vec![0.0; n];
    let mut ap = vec![0.0; n];
    let residual = |x: &[f64], r: &mut [f64], ap: &mut Vec<f64>, apply: &mut dyn FnMut(&[f64], &mut [f64])| {
        apply(x, ap);
        for i in 0..n {
            r[i] = b[i] - ap[i];
        }
    };
    residual(x, &mut r, &mut ap, &mut apply);
    project(&mut r);
    let precondition = |r: &[f64], z: &mut [f64]| match inv_diag {
        Some(m) => z.iter_mut().zip(r.iter().zip(m)).for_each(|(z, (r, m))| *z = r * m),
        None => z.copy_from_slice(r),
    };
    let mut z = vec![0.0; n];
    precondition(&r, &mut z);
    project(&mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut iterations = 0;
    loop {
        let rn = dot(&r, &r).sqrt();
        if done(&r, rn) {
            return CgOutcome { iterations, residual: rn, converged: true };
        }
        if iterations >= max_iter || !rn.is_finite() {
            return CgOutcome { iterations, residual: rn, converged: false };
        }
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return CgOutcome { iterations, residual: rn, converged: false };
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        iterations += 1;
        if iterations % 64 == 0 {
            residual(x, &mut r, &mut ap, &mut apply);
        }
        project(&mut r);
        precondition(&r, &mut z);
        project(&mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
}

/// Removes the plain mean, the orthogonal projection onto `1^⊥`.
pub(crate) fn remove_mean(v: &mut [f64]) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= m);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_spd_system() {
        let a = [[4.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 2.0]];
        let b = [1.0, 2.0, 3.0];
        let mut x = vec![0.0; 3];
        let out = conjugate_gradient(
            |v, out| {
                for i in 0..3 {
                    out[i] = (0..3).map(|j| a[i][j] * v[j]).sum();
                }
            },
            &b,
            &mut x,
            Some(&[0.25, 1.0 / 3.0, 0.5]),
            |_| {},
            |_, r| r < 1e-14,
            100,
        );
        assert!(out.converged);
        for i in 0..3 {
            let ax: f64 = (0..3).map(|j| a[i][j] * x[j]).sum();
            assert!((ax - b[i]).abs() < 1e-12);
        }
    }
}
