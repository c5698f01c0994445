//! The local density estimate `ρ̂_ε` and the averaging operator `M_ε`.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::geometry::{dist, Density, Domain, KernelProfile};
use crate::quad::Rule;

/// `ρ̂_ε(x) = ∫_Ω η_ε(|x - y|) ρ(y) dy` by quadrature adapted to `B(x, ε) ∩ Ω`.
pub fn rho_hat(density: &Density, domain: &Domain, kernel: &KernelProfile, eps: f64, x: &[f64]) -> Result<f64> {
    let d = domain.dim();
    if kernel.dim() != d || x.len() != d {
        return Err(Error::LengthMismatch { expected: d, got: x.len() });
    }
    if !(eps > 0.0) {
        return Err(invalid("eps must be positive"));
    }
    if !domain.contains_closed(x) {
        return Err(Error::OutsideDomain);
    }
    let rule = Rule::new(8);
    let eta = |r: f64| kernel.eval_eps(r, eps);
    match (d, domain) {
        (1, Domain::Box { lower, upper }) => {
            let lo = (x[0] - eps).max(lower[0]);
            let hi = (x[0] + eps).min(upper[0]);
            let mut breaks = vec![lo, hi];
            if lo < x[0] && x[0] < hi {
                breaks.insert(1, x[0]);
            }
            Ok(rule.integrate_pieces(&breaks, 4, |y| eta((y - x[0]).abs()) * density.eval(&[y])))
        }
        (2, _) => {
            let mut breaks = vec![0.0, eps];
            breaks.extend(radial_breaks(domain, x).into_iter().filter(|r| *r > 0.0 && *r < eps));
            breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
            breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
            // r = a + (b - a)(1 - cos πs)/2 absorbs the square-root behaviour at the breaks
            let mut total = 0.0;
            for w in breaks.windows(2) {
                let (a, b) = (w[0], w[1]);
                total += rule.integrate(0.0, 1.0, 2, |s| {
                    let r = a + (b - a) * 0.5 * (1.0 - (PI * s).cos());
                    let jac = (b - a) * 0.5 * PI * (PI * s).sin();
                    if r == 0.0 {
                        return 0.0;
                    }
                    jac * r * eta(r) * circle_integral(&rule, density, domain, x, r)
                });
            }
            Ok(total)
        }
        (3, Domain::Box { .. }) => {
            let mut p = [0.0; 3];
            Ok(rule.integrate(0.0, eps, 4, |r| {
                r * r * eta(r)
                    * rule.integrate(-1.0, 1.0, 16, |mu| {
                        let s = (1.0 - mu * mu).max(0.0).sqrt();
                        rule.integrate(0.0, 2.0 * PI, 32, |t| {
                            p[0] = x[0] + r * s * t.cos();
                            p[1] = x[1] + r * s * t.sin();
                            p[2] = x[2] + r * mu;
                            if domain.contains_closed(&p) {
                                density.eval(&p)
                            } else {
                                0.0
                            }
                        })
                    })
            }))
        }
        _ => Err(Error::UnsupportedDimension(d)),
    }
}

/// Radii at which the circle `|y - x| = r` changes how it meets ∂Ω.
fn radial_breaks(domain: &Domain, x: &[f64]) -> Vec<f64> {
    match domain {
        Domain::Box { lower, upper } => {
            let mut out = Vec::new();
            for a in 0..2 {
                out.push((x[a] - lower[a]).abs());
                out.push((upper[a] - x[a]).abs());
            }
            for cx in [lower[0], upper[0]] {
                for cy in [lower[1], upper[1]] {
                    out.push(dist(x, &[cx, cy]));
                }
            }
            out
        }
        Domain::Disk { center, radius } => {
            let q = dist(x, center);
            vec![(radius - q).abs(), radius + q]
        }
    }
}

/// `∫ ρ(x + r θ) 1_Ω dθ` over the unit circle, split at the exact crossings with ∂Ω.
fn circle_integral(rule: &Rule, density: &Density, domain: &Domain, x: &[f64], r: f64) -> f64 {
    let mut angles = vec![0.0, 2.0 * PI];
    let mut push = |t: f64| {
        if t.is_finite() {
            angles.push(t.rem_euclid(2.0 * PI));
        }
    };
    match domain {
        Domain::Box { lower, upper } => {
            for bound in [lower[0], upper[0]] {
                let c = (bound - x[0]) / r;
                if c.abs() <= 1.0 {
                    push(c.acos());
                    push(-c.acos());
                }
            }
            for bound in [lower[1], upper[1]] {
                let s = (bound - x[1]) / r;
                if s.abs() <= 1.0 {
                    push(s.asin());
                    push(PI - s.asin());
                }
            }
        }
        Domain::Disk { center, radius } => {
            let v = [x[0] - center[0], x[1] - center[1]];
            let q = (v[0] * v[0] + v[1] * v[1]).sqrt();
            if q > 0.0 {
                let c = (radius * radius - q * q - r * r) / (2.0 * r * q);
                if c.abs() <= 1.0 {
                    let phi = v[1].atan2(v[0]);
                    push(phi + c.acos());
                    push(phi - c.acos());
                }
            }
        }
    }
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut total = 0.0;
    for w in angles.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b - a < 1e-15 {
            continue;
        }
        let m = 0.5 * (a + b);
        if !domain.contains_closed(&[x[0] + r * m.cos(), x[1] + r * m.sin()]) {
            continue;
        }
        let panels = 2 + ((b - a) * 2.0).ceil() as usize;
        total += rule.integrate(a, b, panels, |t| density.eval(&[x[0] + r * t.cos(), x[1] + r * t.sin()]));
    }
    total
}

/// Cell-centred discretisation of `M_ε φ(x) = ∫ η_ε(|x-y|) ρ̂_ε(y)⁻¹ ρ(y) φ(y) dy` on a box.
///
/// Kernel weights are cell averages of `η_ε` and `ρ̂_ε` is the same discrete
/// sum, so the discrete operator conserves `Σ ρ φ h^d` exactly and has the
/// discrete symmetry `M^k η^x (y) = M^k η^y (x)` between cell centres.
#[derive(Clone, Debug)]
pub struct AveragingOperator {
    lower: Vec<f64>,
    h: f64,
    shape: [usize; 3],
    dim: usize,
    radius: [usize; 3],
    stencil: Vec<f64>,
    rho: Vec<f64>,
    rho_hat: Vec<f64>,
    kernel: KernelProfile,
    eps: f64,
    sub: usize,
}

impl AveragingOperator {
    pub fn new(density: &Density, domain: &Domain, kernel: &KernelProfile, eps: f64, h: f64) -> Result<Self> {
        let Domain::Box { lower, upper } = domain else {
            return Err(invalid("the averaging grid needs a box domain"));
        };
        let dim = domain.dim();
        if kernel.dim() != dim {
            return Err(Error::LengthMismatch { expected: dim, got: kernel.dim() });
        }
        if !(eps > 0.0) || !(h > 0.0) {
            return Err(invalid("eps and h must be positive"));
        }
        if h > eps / 8.0 {
            return Err(invalid(format!("grid spacing {h} exceeds eps/8")));
        }
        let mut shape = [1usize; 3];
        let mut radius = [0usize; 3];
        let s = (eps / h).ceil() as usize;
        for a in 0..dim {
            let m = (upper[a] - lower[a]) / h;
            if (m - m.round()).abs() > 1e-6 * m.max(1.0) {
                return Err(invalid("h must divide every side of the box"));
            }
            shape[3 - dim + a] = m.round() as usize;
            radius[3 - dim + a] = s;
        }
        let sub = if dim == 3 { 2 } else { 4 };
        let mut op = AveragingOperator {
            lower: lower.clone(),
            h,
            shape,
            dim,
            radius,
            stencil: Vec::new(),
            rho: Vec::new(),
            rho_hat: Vec::new(),
            kernel: *kernel,
            eps,
            sub,
        };
        let sw = [2 * radius[0] + 1, 2 * radius[1] + 1, 2 * radius[2] + 1];
        let mut stencil = vec![0.0; sw[0] * sw[1] * sw[2]];
        for a in 0..sw[0] {
            for b in 0..sw[1] {
                for c in 0..sw[2] {
                    let off = [a as f64 - radius[0] as f64, b as f64 - radius[1] as f64, c as f64 - radius[2] as f64];
                    let o: Vec<f64> = off[3 - dim..].iter().map(|v| v * h).collect();
                    stencil[(a * sw[1] + b) * sw[2] + c] = op.cell_average(&o);
                }
            }
        }
        op.stencil = stencil;
        op.rho = (0..op.len()).map(|i| density.eval(&op.center(i))).collect();
        let ones = vec![1.0; op.len()];
        let weighted: Vec<f64> = op.rho.iter().map(|r| r * op.cell_volume()).collect();
        let mut rho_hat = vec![0.0; op.len()];
        op.convolve(&weighted, &mut rho_hat);
        debug_assert_eq!(ones.len(), rho_hat.len());
        op.rho_hat = rho_hat;
        Ok(op)
    }

    /// Mean of `η_ε(|o + δ|)` over sub-points `δ` of a cell centred at the origin.
    fn cell_average(&self, o: &[f64]) -> f64 {
        let q = self.sub;
        let total = q.pow(self.dim as u32);
        let mut acc = 0.0;
        let mut p = vec![0.0; self.dim];
        for idx in 0..total {
            let mut rest = idx;
            for a in 0..self.dim {
                let l = rest % q;
                rest /= q;
                p[a] = o[a] + self.h * (-0.5 + (l as f64 + 0.5) / q as f64);
            }
            let r = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            acc += self.kernel.eval_eps(r, self.eps);
        }
        acc / total as f64
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    /// Cells per axis.
    pub fn shape(&self) -> Vec<usize> {
        self.shape[3 - self.dim..].to_vec()
    }

    pub fn center(&self, i: usize) -> Vec<f64> {
        let idx = [i / (self.shape[1] * self.shape[2]), (i / self.shape[2]) % self.shape[1], i % self.shape[2]];
        (0..self.dim).map(|a| self.lower[a] + (idx[3 - self.dim + a] as f64 + 0.5) * self.h).collect()
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn rho_hat(&self) -> &[f64] {
        &self.rho_hat
    }

    /// `out_i = Σ_j K(i - j) v_j`.
    fn convolve(&self, v: &[f64], out: &mut [f64]) {
        let [n0, n1, n2] = self.shape;
        let [r0, r1, r2] = self.radius;
        let (w1, w2) = (2 * r1 + 1, 2 * r2 + 1);
        for i0 in 0..n0 {
            for i1 in 0..n1 {
                for i2 in 0..n2 {
                    let mut acc = 0.0;
                    for j0 in i0.saturating_sub(r0)..(i0 + r0 + 1).min(n0) {
                        let a = j0 + r0 - i0;
                        for j1 in i1.saturating_sub(r1)..(i1 + r1 + 1).min(n1) {
                            let b = j1 + r1 - i1;
                            let lo = i2.saturating_sub(r2);
                            let hi = (i2 + r2 + 1).min(n2);
                            let srow = &self.stencil[(a * w1 + b) * w2 + lo + r2 - i2..];
                            let vrow = &v[(j0 * n1 + j1) * n2 + lo..(j0 * n1 + j1) * n2 + hi];
                            acc += vrow.iter().zip(srow).map(|(x, y)| x * y).sum::<f64>();
                        }
                    }
                    out[(i0 * n1 + i1) * n2 + i2] = acc;
                }
            }
        }
    }

    /// One application of `M_ε`.
    pub fn apply(&self, phi: &[f64]) -> Result<Vec<f64>> {
        if phi.len() != self.len() {
            return Err(Error::LengthMismatch { expected: self.len(), got: phi.len() });
        }
        let vol = self.cell_volume();
        let g: Vec<f64> = phi
            .iter()
            .zip(self.rho.iter().zip(&self.rho_hat))
            .map(|(p, (r, rh))| if *rh > 0.0 { p * r / rh * vol } else { 0.0 })
            .collect();
        let mut out = vec![0.0; self.len()];
        self.convolve(&g, &mut out);
        Ok(out)
    }

    /// Cell averages of `η_ε(|· - x0|)`.
    pub fn kernel_column(&self, x0: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                let c = self.center(i);
                let o: Vec<f64> = c.iter().zip(x0).map(|(c, x)| c - x).collect();
                self.cell_average(&o)
            })
            .collect()
    }

    /// `Σ ρ φ h^d`.
    pub fn mass(&self, phi: &[f64]) -> f64 {
        phi.iter().zip(&self.rho).map(|(p, r)| p * r).sum::<f64>() * self.cell_volume()
    }

    pub fn field(&self, values: Vec<f64>) -> AveragedField {
        AveragedField { lower: self.lower.clone(), h: self.h, shape: self.shape(), values }
    }
}

/// Cell-centred field on a box grid with multilinear interpolation.
#[derive(Clone, Debug)]
pub struct AveragedField {
    lower: Vec<f64>,
    h: f64,
    shape: Vec<usize>,
    values: Vec<f64>,
}

impl AveragedField {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Multilinear interpolation between cell centres, clamped at the boundary cells.
    pub fn eval(&self, x: &[f64]) -> f64 {
        crate::continuum::multilinear(&self.lower, self.h, &self.shape, &self.values, x)
    }
}

/// `M_ε^k η_ε^{x0}` discretised on a grid of spacing `h`.
pub fn repeated_average(
    density: &Density,
    domain: &Domain,
    kernel: &KernelProfile,
    eps: f64,
    x0: &[f64],
    k: usize,
    h: f64,
) -> Result<AveragedField> {
    if x0.len() != domain.dim() {
        return Err(Error::LengthMismatch { expected: domain.dim(), got: x0.len() });
    }
    if domain.boundary_distance(x0) < eps {
        return Err(invalid("B(x0, eps) must lie inside the domain"));
    }
    let op = AveragingOperator::new(density, domain, kernel, eps, h)?;
    let mut phi = op.kernel_column(x0);
    for _ in 0..k {
        phi = op.apply(&phi)?;
    }
    Ok(op.field(phi))
}
