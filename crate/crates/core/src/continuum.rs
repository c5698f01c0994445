//! Finite volume reference solver for `-div(ρ² ∇u) = f` on a box with
//! zero-flux boundary conditions and the gauge `∫ ρ² u = 0`.

use crate::clock::Instant;

use crate::cg::{conjugate_gradient, remove_mean};
use crate::error::{invalid, Error, Result};
use crate::geometry::{Density, Domain, KernelKind, KernelProfile, PointSet};
use crate::graph::dot;
use crate::solver::{SolveReport, SourceSpec};

/// Cell-centred grid with face coefficients `κ = ρ²` (harmonic means).
#[derive(Clone, Debug)]
pub struct ReferenceGrid {
    lower: Vec<f64>,
    h: f64,
    dim: usize,
    shape: [usize; 3],
    kappa: Vec<f64>,
    /// `faces[a][i]`: coefficient on the face between cell `i` and its `+a` neighbour.
    faces: [Vec<f64>; 3],
    diag: Vec<f64>,
}

pub fn build_grid(domain: &Domain, h: f64, density: &Density) -> Result<ReferenceGrid> {
    let Domain::Box { lower, upper } = domain else {
        return Err(invalid("the reference grid needs a box domain"));
    };
    domain.validate()?;
    if !(h > 0.0) {
        return Err(invalid("h must be positive"));
    }
    let dim = lower.len();
    let mut shape = [1usize; 3];
    for a in 0..dim {
        let m = (upper[a] - lower[a]) / h;
        if (m - m.round()).abs() > 1e-6 * m.max(1.0) || m.round() < 2.0 {
            return Err(invalid("h must divide every side of the box"));
        }
        shape[3 - dim + a] = m.round() as usize;
    }
    let mut grid = ReferenceGrid {
        lower: lower.clone(),
        h,
        dim,
        shape,
        kappa: Vec::new(),
        faces: [Vec::new(), Vec::new(), Vec::new()],
        diag: Vec::new(),
    };
    let n = grid.len();
    grid.kappa = (0..n)
        .map(|i| {
            let r = density.eval(&grid.cell_center(i));
            r * r
        })
        .collect();
    let strides = grid.strides();
    let mut diag = vec![0.0; n];
    for a in 0..3 {
        let mut f = vec![0.0; n];
        if shape[a] > 1 {
            for i in 0..n {
                if (i / strides[a]) % shape[a] + 1 < shape[a] {
                    let j = i + strides[a];
                    let (ki, kj) = (grid.kappa[i], grid.kappa[j]);
                    f[i] = 2.0 * ki * kj / (ki + kj);
                    diag[i] += f[i];
                    diag[j] += f[i];
                }
            }
        }
        grid.faces[a] = f;
    }
    let h2 = h * h;
    grid.diag = diag.into_iter().map(|v| v / h2).collect();
    Ok(grid)
}

impl ReferenceGrid {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn shape(&self) -> Vec<usize> {
        self.shape[3 - self.dim..].to_vec()
    }

    fn lattice(&self) -> (Vec<f64>, Vec<usize>) {
        (self.lower.clone(), self.shape())
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }

    fn strides(&self) -> [usize; 3] {
        [self.shape[1] * self.shape[2], self.shape[2], 1]
    }

    pub fn cell_center(&self, i: usize) -> Vec<f64> {
        let s = self.strides();
        (0..self.dim)
            .map(|a| {
                let ax = 3 - self.dim + a;
                self.lower[a] + (((i / s[ax]) % self.shape[ax]) as f64 + 0.5) * self.h
            })
            .collect()
    }

    /// Index of the cell containing `x`; points on the closed boundary are accepted.
    pub fn locate(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.dim {
            return Err(Error::LengthMismatch { expected: self.dim, got: x.len() });
        }
        let s = self.strides();
        let mut idx = 0;
        for a in 0..self.dim {
            let ax = 3 - self.dim + a;
            let t = (x[a] - self.lower[a]) / self.h;
            if !(t >= 0.0 && t <= self.shape[ax] as f64) {
                return Err(Error::OutsideDomain);
            }
            idx += (t.floor() as usize).min(self.shape[ax] - 1) * s[ax];
        }
        Ok(idx)
    }

    /// `out = A u` with `A u_i = h⁻² Σ_faces κ_f (u_i - u_j)`.
    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        let s = self.strides();
        let h2 = self.h * self.h;
        out.iter_mut().zip(u.iter().zip(&self.diag)).for_each(|(o, (u, d))| *o = d * u);
        for a in 0..3 {
            if self.shape[a] == 1 {
                continue;
            }
            let f = &self.faces[a];
            let st = s[a];
            for i in 0..u.len() - st {
                let c = f[i];
                if c != 0.0 {
                    let c = c / h2;
                    out[i] -= c * u[i + st];
                    out[i + st] -= c * u[i];
                }
            }
        }
    }

    pub fn function(&self, values: Vec<f64>) -> Result<GridFunction> {
        if values.len() != self.len() {
            return Err(Error::LengthMismatch { expected: self.len(), got: values.len() });
        }
        Ok(GridFunction { lower: self.lower.clone(), h: self.h, shape: self.shape(), values })
    }

    /// Samples `f` at the cell centres.
    pub fn sample(&self, f: impl Fn(&[f64]) -> f64) -> GridFunction {
        let values = (0..self.len()).map(|i| f(&self.cell_center(i))).collect();
        GridFunction { lower: self.lower.clone(), h: self.h, shape: self.shape(), values }
    }

    /// `∫ ρ² u` by the midpoint rule.
    pub fn weighted_integral(&self, u: &GridFunction) -> f64 {
        dot(&self.kappa, &u.values) * self.cell_volume()
    }
}

/// Cell-centred values on a box grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    lower: Vec<f64>,
    h: f64,
    shape: Vec<usize>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        multilinear(&self.lower, self.h, &self.shape, &self.values, x)
    }

    /// `∫ |u - v|` by the midpoint rule on a shared grid.
    pub fn l1_distance(&self, other: &GridFunction) -> Result<f64> {
        if self.shape != other.shape || self.h != other.h {
            return Err(invalid("grid functions live on different grids"));
        }
        let vol = self.h.powi(self.shape.len() as i32);
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).sum::<f64>() * vol)
    }

    pub fn scaled(&self, a: f64) -> GridFunction {
        GridFunction { values: self.values.iter().map(|v| a * v).collect(), ..self.clone() }
    }

    /// Cell centre `i`.
    pub fn center(&self, i: usize) -> Vec<f64> {
        let d = self.shape.len();
        let mut rest = i;
        let mut c = vec![0.0; d];
        for a in (0..d).rev() {
            c[a] = self.lower[a] + ((rest % self.shape[a]) as f64 + 0.5) * self.h;
            rest /= self.shape[a];
        }
        c
    }
}

/// Multilinear interpolation between cell centres; coordinates outside the
/// centre lattice are clamped to the boundary cells.
pub(crate) fn multilinear(lower: &[f64], h: f64, shape: &[usize], values: &[f64], x: &[f64]) -> f64 {
    let mut acc = 0.0;
    multilinear_weights(lower, h, shape, x, |idx, w| acc += w * values[idx]);
    acc
}

/// Visits the `2^d` cell centres around `x` with their multilinear weights.
pub(crate) fn multilinear_weights(lower: &[f64], h: f64, shape: &[usize], x: &[f64], mut visit: impl FnMut(usize, f64)) {
    let d = shape.len();
    let mut base = vec![0usize; d];
    let mut frac = vec![0.0; d];
    for a in 0..d {
        let t = ((x[a] - lower[a]) / h - 0.5).clamp(0.0, (shape[a] - 1) as f64);
        let i = (t.floor() as usize).min(shape[a].saturating_sub(2));
        base[a] = i;
        frac[a] = if shape[a] > 1 { t - i as f64 } else { 0.0 };
    }
    for corner in 0..(1usize << d) {
        let mut w = 1.0;
        let mut idx = 0;
        for a in 0..d {
            let bit = (corner >> a) & 1;
            let i = (base[a] + bit).min(shape[a] - 1);
            w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
            idx = idx * shape[a] + i;
        }
        if w != 0.0 {
            visit(idx, w);
        }
    }
}

/// Right-hand side: a density per unit volume plus point atoms.
///
/// Atoms are spread over the surrounding cell centres with multilinear weights.
#[derive(Clone, Debug, Default)]
pub struct GridSource {
    pub field: Option<Vec<f64>>,
    pub atoms: Vec<(Vec<f64>, f64)>,
}

impl GridSource {
    pub fn atoms(s: &SourceSpec) -> Self {
        GridSource { field: None, atoms: s.anchors().iter().cloned().zip(s.coefficients().iter().cloned()).collect() }
    }

    pub fn field(values: Vec<f64>) -> Self {
        GridSource { field: Some(values), atoms: Vec::new() }
    }

    /// Each atom replaced by `a φ_r(· - x)` with `φ_r` the normalised smooth
    /// bump of radius `r`, discretised at cell centres to unit discrete mass.
    pub fn mollified(grid: &ReferenceGrid, s: &SourceSpec, r: f64) -> Result<Self> {
        if !(r > 0.0) {
            return Err(invalid("mollifier radius must be positive"));
        }
        let bump = crate::geometry::make_kernel(KernelKind::Bump, grid.dim())?;
        let mut field = vec![0.0; grid.len()];
        let vol = grid.cell_volume();
        for (x, a) in s.anchors().iter().zip(s.coefficients()) {
            let phi: Vec<f64> = (0..grid.len())
                .map(|i| bump.eval_eps(crate::geometry::dist(&grid.cell_center(i), x), r))
                .collect();
            let mass: f64 = phi.iter().sum::<f64>() * vol;
            if !(mass > 0.0) {
                return Err(invalid("mollifier radius is below the grid resolution"));
            }
            field.iter_mut().zip(&phi).for_each(|(f, p)| *f += a * p / mass);
        }
        Ok(GridSource::field(field))
    }

    /// Adds `a φ_r(· - x)` for an arbitrary normalised radial profile.
    pub fn add_radial(&mut self, grid: &ReferenceGrid, profile: &KernelProfile, x: &[f64], a: f64, r: f64) {
        let vol = grid.cell_volume();
        let phi: Vec<f64> = (0..grid.len()).map(|i| profile.eval_eps(crate::geometry::dist(&grid.cell_center(i), x), r)).collect();
        let mass: f64 = phi.iter().sum::<f64>() * vol;
        let field = self.field.get_or_insert_with(|| vec![0.0; grid.len()]);
        if mass > 0.0 {
            field.iter_mut().zip(&phi).for_each(|(f, p)| *f += a * p / mass);
        }
    }
}

/// Solves `-div(ρ² ∇u) = f` with zero flux and `∫ ρ² u = 0`.
pub fn solve_weighted_poisson(grid: &ReferenceGrid, src: &GridSource, tol: f64) -> Result<(GridFunction, SolveReport)> {
    let start = Instant::now();
    let n = grid.len();
    let vol = grid.cell_volume();
    let mut b = match &src.field {
        Some(f) if f.len() == n => f.clone(),
        Some(f) => return Err(Error::LengthMismatch { expected: n, got: f.len() }),
        None => vec![0.0; n],
    };
    for (x, a) in &src.atoms {
        grid.locate(x)?;
        let (lower, shape) = grid.lattice();
        multilinear_weights(&lower, grid.h, &shape, x, |i, w| b[i] += w * a / vol);
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("grid source"));
    }
    let total: f64 = b.iter().sum::<f64>() * vol;
    let scale: f64 = b.iter().map(|v| v.abs()).sum::<f64>() * vol;
    if total.abs() > 1e-10 * scale.max(1.0) {
        return Err(Error::Incompatible(total));
    }
    if scale == 0.0 {
        return Ok((grid.function(vec![0.0; n])?, SolveReport { runtime_s: start.elapsed().as_secs_f64(), ..Default::default() }));
    }
    remove_mean(&mut b);
    let bnorm = dot(&b, &b).sqrt();
    let inv: Vec<f64> = grid.diag.iter().map(|d| 1.0 / d).collect();
    let mut u = vec![0.0; n];
    let out = conjugate_gradient(
        |v, y| grid.apply(v, y),
        &b,
        &mut u,
        Some(&inv),
        remove_mean,
        |_, r| r <= tol * bnorm,
        (50 * n).max(1000),
    );
    if !out.converged {
        return Err(Error::NonConvergence { iterations: out.iterations, residual: out.residual });
    }
    let mean = dot(&grid.kappa, &u) / grid.kappa.iter().sum::<f64>();
    u.iter_mut().for_each(|v| *v -= mean);
    let mut au = vec![0.0; n];
    grid.apply(&u, &mut au);
    let residual = au.iter().zip(&b).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let report = SolveReport {
        iterations: out.iterations,
        residual,
        relative_residual: residual / bnorm,
        runtime_s: start.elapsed().as_secs_f64(),
    };
    Ok((grid.function(u)?, report))
}

/// Green's function with source `δ_y - ρ²/∫ρ²`.
pub fn greens_function(grid: &ReferenceGrid, y: &[f64], tol: f64) -> Result<GridFunction> {
    let total: f64 = grid.kappa.iter().sum::<f64>() * grid.cell_volume();
    let field = grid.kappa.iter().map(|k| -k / total).collect();
    let src = GridSource { field: Some(field), atoms: vec![(y.to_vec(), 1.0)] };
    Ok(solve_weighted_poisson(grid, &src, tol)?.0)
}

/// Values of `u` at arbitrary points of the closed box.
pub fn interpolate_at(u: &GridFunction, pts: &PointSet) -> Result<Vec<f64>> {
    if pts.dim() != u.shape.len() {
        return Err(Error::LengthMismatch { expected: u.shape.len(), got: pts.dim() });
    }
    let mut out = Vec::with_capacity(pts.len());
    for p in pts.iter() {
        for a in 0..p.len() {
            let hi = u.lower[a] + u.shape[a] as f64 * u.h;
            if !(p[a] >= u.lower[a] - 1e-12 && p[a] <= hi + 1e-12) {
                return Err(Error::OutsideDomain);
            }
        }
        out.push(u.eval(p));
    }
    Ok(out)
}

/// `‖u - u_r‖_{L¹}` between the atomic solution and the solutions with each
/// atom replaced by a smooth bump of radius `r`, for every `r` in `radii`.
pub fn mollification_gaps(grid: &ReferenceGrid, s: &SourceSpec, radii: &[f64], tol: f64) -> Result<Vec<f64>> {
    let (atomic, _) = solve_weighted_poisson(grid, &GridSource::atoms(s), tol)?;
    radii
        .iter()
        .map(|&r| {
            let (ur, _) = solve_weighted_poisson(grid, &GridSource::mollified(grid, s, r)?, tol)?;
            atomic.l1_distance(&ur)
        })
        .collect()
}
