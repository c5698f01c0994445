//! Radial tables of `ψ_{k,ε}`, the k-fold self convolution of `η_ε`.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{invalid, Error, Result};
use crate::geometry::KernelProfile;
use crate::quad::{sphere_area, Rule};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PsiMethod {
    /// Discrete convolution powers of the cell-averaged kernel on a periodic grid.
    GridConvolution,
    /// Inverse radial Fourier transform of `η̂^k`.
    RadialFourier,
}

/// Samples of a radial function at `r = i * spacing`.
#[derive(Clone, Debug)]
pub struct RadialKernelTable {
    pub dim: usize,
    pub k: usize,
    pub eps: f64,
    pub spacing: f64,
    pub values: Vec<f64>,
    pub method: PsiMethod,
    /// For the Fourier route, `|η̂|^k` at the truncation frequency.
    pub truncation: f64,
}

impl RadialKernelTable {
    /// Linear interpolation, zero beyond the last sample.
    pub fn eval(&self, r: f64) -> f64 {
        let t = r.abs() / self.spacing;
        let i = t.floor() as usize;
        if i + 1 >= self.values.len() {
            return if i + 1 == self.values.len() && t == i as f64 { self.values[i] } else { 0.0 };
        }
        let f = t - i as f64;
        (1.0 - f) * self.values[i] + f * self.values[i + 1]
    }

    pub fn radius(&self) -> f64 {
        self.spacing * (self.values.len() - 1) as f64
    }

    /// `∫_{|x| > t} ψ` in R^d by composite quadrature over the table.
    pub fn tail_mass(&self, t: f64) -> f64 {
        let r_max = self.radius();
        if t >= r_max {
            return 0.0;
        }
        let rule = Rule::new(4);
        let d = self.dim as i32;
        let mut breaks = vec![t.max(0.0)];
        let first = (t.max(0.0) / self.spacing).floor() as usize + 1;
        for i in first..self.values.len() {
            breaks.push(i as f64 * self.spacing);
        }
        sphere_area(self.dim) * rule.integrate_pieces(&breaks, 1, |r| self.eval(r) * r.powi(d - 1))
    }

    pub fn mass(&self) -> f64 {
        self.tail_mass(0.0)
    }
}

/// `ψ_{k,ε}` with the default method for the kernel's dimension.
pub fn psi_table(kernel: &KernelProfile, k: usize, eps: f64) -> Result<RadialKernelTable> {
    let method = if kernel.dim() <= 2 { PsiMethod::GridConvolution } else { PsiMethod::RadialFourier };
    psi_table_with(kernel, k, eps, method)
}

pub fn psi_table_with(kernel: &KernelProfile, k: usize, eps: f64, method: PsiMethod) -> Result<RadialKernelTable> {
    let d = kernel.dim();
    if !(1..=3).contains(&d) {
        return Err(Error::UnsupportedDimension(d));
    }
    if k == 0 {
        return Err(invalid("k must be at least 1"));
    }
    if !(eps > 0.0) {
        return Err(invalid("eps must be positive"));
    }
    let unit = if k == 1 {
        let spacing = 1.0 / 256.0;
        let values = (0..=256).map(|i| kernel.eval(i as f64 * spacing)).collect();
        RadialKernelTable { dim: d, k, eps: 1.0, spacing, values, method, truncation: 0.0 }
    } else {
        match method {
            PsiMethod::GridConvolution => grid_convolution(kernel, k)?,
            PsiMethod::RadialFourier => radial_fourier(kernel, k)?,
        }
    };
    let scale = eps.powi(-(d as i32));
    Ok(RadialKernelTable {
        spacing: unit.spacing * eps,
        values: unit.values.iter().map(|v| v * scale).collect(),
        eps,
        ..unit
    })
}

/// Radius beyond which the mass of `ψ_k` (unit ε) is below 1e-16.
fn effective_radius(d: usize, k: usize) -> f64 {
    let d = d as f64;
    let t = (2.0 * d * k as f64 * (2.0 * d / 1e-16f64).ln()).sqrt();
    t.min(k as f64)
}

fn grid_convolution(kernel: &KernelProfile, k: usize) -> Result<RadialKernelTable> {
    let d = kernel.dim();
    if d > 2 {
        return Err(Error::UnsupportedDimension(d));
    }
    let per_unit: usize = if d == 1 { 64 } else { 16 };
    let h = 1.0 / per_unit as f64;
    let radius = effective_radius(d, k) + 1.0;
    let half = (radius / h).ceil() as usize + 1;
    let n = fft_size(2 * half + 1);
    let sub = 8usize;
    let cell = |x: f64, y: f64| -> f64 {
        let mut acc = 0.0;
        for a in 0..sub {
            let px = x + h * (-0.5 + (a as f64 + 0.5) / sub as f64);
            if d == 1 {
                acc += kernel.eval(px.abs());
                continue;
            }
            for b in 0..sub {
                let py = y + h * (-0.5 + (b as f64 + 0.5) / sub as f64);
                acc += kernel.eval((px * px + py * py).sqrt());
            }
        }
        acc / (sub.pow(d as u32)) as f64
    };
    let wrap = |i: usize| -> f64 {
        if i <= n / 2 {
            i as f64 * h
        } else {
            (i as f64 - n as f64) * h
        }
    };
    let reach = per_unit + 2;
    let near = |i: usize| i <= reach || i >= n - reach;
    let vol = h.powi(d as i32);
    let total = n.pow(d as u32);
    let mut buf = vec![Complex::new(0.0, 0.0); total];
    if d == 1 {
        for i in 0..n {
            if near(i) {
                buf[i].re = cell(wrap(i), 0.0);
            }
        }
    } else {
        for i in 0..n {
            for j in 0..n {
                if near(i) && near(j) {
                    buf[i * n + j].re = cell(wrap(i), wrap(j));
                }
            }
        }
    }
    let mass: f64 = buf.iter().map(|c| c.re).sum::<f64>() * vol;
    buf.iter_mut().for_each(|c| c.re *= vol / mass);
    let mut planner = FftPlanner::<f64>::new();
    fft_nd(&mut planner, &mut buf, n, d, false);
    buf.iter_mut().for_each(|c| *c = c.powu(k as u32));
    fft_nd(&mut planner, &mut buf, n, d, true);
    let norm = 1.0 / (total as f64 * vol);
    let at = |i: isize, j: isize| -> f64 {
        let w = |i: isize| i.rem_euclid(n as isize) as usize;
        if d == 1 {
            buf[w(i)].re * norm
        } else {
            buf[w(i) * n + w(j)].re * norm
        }
    };
    let samples = ((radius - 1.0) / h).floor() as usize;
    let mut values = Vec::with_capacity(samples + 1);
    for s in 0..=samples {
        let r = s as f64 * h;
        let v = if d == 1 {
            0.5 * (at(s as isize, 0) + at(-(s as isize), 0))
        } else {
            let angles = 64;
            let mut acc = 0.0;
            for a in 0..angles {
                let t = 2.0 * std::f64::consts::PI * a as f64 / angles as f64;
                let (x, y) = (r * t.cos() / h, r * t.sin() / h);
                let (i, j) = (x.floor(), y.floor());
                let (fx, fy) = (x - i, y - j);
                let (i, j) = (i as isize, j as isize);
                acc += (1.0 - fx) * (1.0 - fy) * at(i, j)
                    + fx * (1.0 - fy) * at(i + 1, j)
                    + (1.0 - fx) * fy * at(i, j + 1)
                    + fx * fy * at(i + 1, j + 1);
            }
            acc / angles as f64
        };
        values.push(v.max(0.0));
    }
    Ok(RadialKernelTable { dim: d, k, eps: 1.0, spacing: h, values, method: PsiMethod::GridConvolution, truncation: 0.0 })
}

/// Smallest size ≥ m of the form 2^a 3^b.
fn fft_size(m: usize) -> usize {
    let mut best = usize::MAX;
    let mut p3 = 1usize;
    while p3 < 2 * m {
        let mut v = p3;
        while v < m {
            v *= 2;
        }
        best = best.min(v);
        p3 *= 3;
    }
    best
}

fn fft_nd(planner: &mut FftPlanner<f64>, buf: &mut [Complex<f64>], n: usize, d: usize, inverse: bool) {
    let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    if d == 1 {
        fft.process(buf);
        return;
    }
    fft.process(buf);
    let mut col = vec![Complex::new(0.0, 0.0); n];
    for j in 0..n {
        for i in 0..n {
            col[i] = buf[i * n + j];
        }
        fft.process(&mut col);
        for i in 0..n {
            buf[i * n + j] = col[i];
        }
    }
}

/// Radial Fourier transform `η̂(ξ) = ∫ η(|x|) e^{-2πi x·ξ} dx` of a radial profile.
fn radial_transform(rule: &Rule, d: usize, xi: f64, f: impl Fn(f64) -> f64, r_max: f64) -> f64 {
    let w = 2.0 * std::f64::consts::PI * xi;
    let panels = 8 + (4.0 * xi * r_max).ceil() as usize;
    match d {
        1 => 2.0 * rule.integrate(0.0, r_max, panels, |t| f(t) * (w * t).cos()),
        2 => 2.0 * std::f64::consts::PI * rule.integrate(0.0, r_max, panels, |t| f(t) * libm::j0(w * t) * t),
        _ => 4.0 * std::f64::consts::PI * rule.integrate(0.0, r_max, panels, |t| f(t) * sinc(w * t) * t * t),
    }
}

fn sinc(z: f64) -> f64 {
    if z.abs() < 1e-8 {
        1.0 - z * z / 6.0
    } else {
        z.sin() / z
    }
}

fn radial_fourier(kernel: &KernelProfile, k: usize) -> Result<RadialKernelTable> {
    let d = kernel.dim();
    let rule = Rule::new(8);
    let eta_hat = |xi: f64| radial_transform(&rule, d, xi, |t| kernel.eval(t), 1.0);
    let cap = 400.0;
    let dxi = 1.0 / 64.0;
    let mut xi_max = cap;
    let mut window = 0.0f64;
    let mut start = 0.0;
    let mut xi = 0.0;
    let mut cache = Vec::new();
    while xi <= cap {
        let v = eta_hat(xi).abs().powi(k as i32) * xi.max(1.0).powi(d as i32 - 1);
        cache.push(v);
        window = window.max(v);
        if xi - start >= 2.0 {
            if window < 1e-14 {
                xi_max = xi;
                break;
            }
            window = 0.0;
            start = xi;
        }
        xi += dxi;
    }
    let truncation = eta_hat(xi_max).abs().powi(k as i32);
    let r_max = effective_radius(d, k);
    let spacing = 1.0 / 32.0;
    let samples = (r_max / spacing).ceil() as usize;
    let panel = (1.0 / (8.0 * r_max.max(1.0))).min(0.05);
    let panels = (xi_max / panel).ceil() as usize;
    let (nodes, weights) = crate::quad::gauss_legendre(8);
    let hp = xi_max / panels as f64;
    let mut xs = Vec::with_capacity(panels * 8);
    let mut ws = Vec::with_capacity(panels * 8);
    for p in 0..panels {
        let mid = (p as f64 + 0.5) * hp;
        for (x, w) in nodes.iter().zip(&weights) {
            let z = mid + 0.5 * hp * x;
            xs.push(z);
            ws.push(0.5 * hp * w * eta_hat(z).powi(k as i32) * sphere_area(d) * z.powi(d as i32 - 1));
        }
    }
    let values = (0..=samples)
        .map(|s| {
            let r = s as f64 * spacing;
            let w = 2.0 * std::f64::consts::PI * r;
            xs.iter()
                .zip(&ws)
                .map(|(z, c)| {
                    c * match d {
                        1 => (w * z).cos(),
                        2 => libm::j0(w * z),
                        _ => sinc(w * z),
                    }
                })
                .sum::<f64>()
        })
        .collect();
    Ok(RadialKernelTable { dim: d, k, eps: 1.0, spacing, values, method: PsiMethod::RadialFourier, truncation })
}
