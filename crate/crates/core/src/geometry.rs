//! Domains, densities, kernels, sampling and ε-graph construction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::graph::Graph;
use crate::quad::{sphere_area, Rule};

/// A set of points in R^d stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::UnsupportedDimension(0));
        }
        if coords.len() % dim != 0 {
            return Err(Error::LengthMismatch { expected: coords.len() / dim * dim, got: coords.len() });
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("point coordinates"));
        }
        Ok(PointSet { dim, coords })
    }

    pub fn from_rows(dim: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            if r.len() != dim {
                return Err(Error::LengthMismatch { expected: dim, got: r.len() });
            }
            coords.extend_from_slice(r);
        }
        PointSet::new(dim, coords)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Bounded open domain Ω with Lipschitz boundary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Domain {
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Disk { center: [f64; 2], radius: f64 },
}

impl Domain {
    pub fn unit_box(d: usize) -> Self {
        Domain::Box { lower: vec![0.0; d], upper: vec![1.0; d] }
    }

    pub fn unit_disk() -> Self {
        Domain::Disk { center: [0.5, 0.5], radius: 0.5 }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Domain::Box { lower, upper } => {
                if lower.is_empty() || lower.len() != upper.len() {
                    return Err(invalid("box bounds must be non-empty and of equal length"));
                }
                if lower.iter().zip(upper).any(|(a, b)| !(a < b)) {
                    return Err(invalid("box must have positive side lengths"));
                }
                if lower.len() > 3 {
                    return Err(Error::UnsupportedDimension(lower.len()));
                }
            }
            Domain::Disk { radius, .. } => {
                if !(*radius > 0.0) {
                    return Err(invalid("disk radius must be positive"));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Box { lower, .. } => lower.len(),
            Domain::Disk { .. } => 2,
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            Domain::Box { lower, upper } => lower.iter().zip(upper).map(|(a, b)| b - a).product(),
            Domain::Disk { radius, .. } => PI * radius * radius,
        }
    }

    pub fn center(&self) -> Vec<f64> {
        match self {
            Domain::Box { lower, upper } => lower.iter().zip(upper).map(|(a, b)| 0.5 * (a + b)).collect(),
            Domain::Disk { center, .. } => center.to_vec(),
        }
    }

    /// Strict interior membership.
    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        match self {
            Domain::Box { lower, upper } => x.iter().zip(lower.iter().zip(upper)).all(|(x, (a, b))| *a < *x && *x < *b),
            Domain::Disk { center, radius } => dist(x, center) < *radius,
        }
    }

    /// Membership in the closure of Ω.
    pub fn contains_closed(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        match self {
            Domain::Box { lower, upper } => x.iter().zip(lower.iter().zip(upper)).all(|(x, (a, b))| *a <= *x && *x <= *b),
            Domain::Disk { center, radius } => dist(x, center) <= *radius,
        }
    }

    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Domain::Box { lower, upper } => (lower.clone(), upper.clone()),
            Domain::Disk { center, radius } => (
                vec![center[0] - radius, center[1] - radius],
                vec![center[0] + radius, center[1] + radius],
            ),
        }
    }

    /// Distance from an interior point to ∂Ω (zero outside).
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        if !self.contains(x) {
            return 0.0;
        }
        match self {
            Domain::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(x, (a, b))| (x - a).min(b - x))
                .fold(f64::INFINITY, f64::min),
            Domain::Disk { center, radius } => radius - dist(x, center),
        }
    }

    /// Largest distance from `c` to a point of the closure of Ω.
    fn farthest_distance(&self, c: &[f64]) -> f64 {
        match self {
            Domain::Box { lower, upper } => c
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(c, (a, b))| {
                    let m = (c - a).abs().max((b - c).abs());
                    m * m
                })
                .sum::<f64>()
                .sqrt(),
            Domain::Disk { center, radius } => dist(c, center) + radius,
        }
    }

    fn nearest_distance(&self, c: &[f64]) -> f64 {
        if self.contains(c) {
            return 0.0;
        }
        match self {
            Domain::Box { lower, upper } => c
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(c, (a, b))| {
                    let m = (a - c).max(c - b).max(0.0);
                    m * m
                })
                .sum::<f64>()
                .sqrt(),
            Domain::Disk { center, radius } => (dist(c, center) - radius).max(0.0),
        }
    }
}

/// Closed-form density shapes before normalisation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DensityKind {
    Constant,
    /// `1 + slope·(x - c)` with `c` the centre of the domain.
    Affine { slope: Vec<f64> },
    /// `1 + amplitude·exp(-|x - center|² / (2 width²))`.
    Bump { center: Option<Vec<f64>>, amplitude: f64, width: f64 },
}

/// A probability density on a domain, bounded above and below.
#[derive(Clone, Debug)]
pub struct Density {
    kind: DensityKind,
    origin: Vec<f64>,
    norm: f64,
    min: f64,
    max: f64,
    lipschitz: f64,
}

impl Density {
    pub fn new(kind: DensityKind, domain: &Domain) -> Result<Self> {
        domain.validate()?;
        let d = domain.dim();
        let center = domain.center();
        let (origin, raw_integral, raw_min, raw_max, raw_lip) = match &kind {
            DensityKind::Constant => (center, domain.volume(), 1.0, 1.0, 0.0),
            DensityKind::Affine { slope } => {
                if slope.len() != d {
                    return Err(Error::LengthMismatch { expected: d, got: slope.len() });
                }
                let s = slope.iter().map(|v| v * v).sum::<f64>().sqrt();
                let (lo, hi) = match domain {
                    Domain::Box { lower, upper } => {
                        let spread: f64 =
                            slope.iter().zip(lower.iter().zip(upper)).map(|(s, (a, b))| s.abs() * 0.5 * (b - a)).sum();
                        (1.0 - spread, 1.0 + spread)
                    }
                    Domain::Disk { radius, .. } => (1.0 - s * radius, 1.0 + s * radius),
                };
                if !(lo > 0.0) {
                    return Err(invalid("affine density must stay positive on the domain"));
                }
                (center, domain.volume(), lo, hi, s)
            }
            DensityKind::Bump { center: c, amplitude, width } => {
                if !(*amplitude >= 0.0) || !(*width > 0.0) {
                    return Err(invalid("bump needs amplitude >= 0 and width > 0"));
                }
                let c = c.clone().unwrap_or(center);
                if c.len() != d {
                    return Err(Error::LengthMismatch { expected: d, got: c.len() });
                }
                let g = |r: f64| (-r * r / (2.0 * width * width)).exp();
                let integral = domain.volume() + amplitude * gaussian_integral(domain, &c, *width);
                let hi = 1.0 + amplitude * g(domain.nearest_distance(&c));
                let lo = 1.0 + amplitude * g(domain.farthest_distance(&c));
                let lip = amplitude * (-0.5f64).exp() / width;
                (c, integral, lo, hi, lip)
            }
        };
        let norm = 1.0 / raw_integral;
        Ok(Density { kind, origin, norm, min: raw_min * norm, max: raw_max * norm, lipschitz: raw_lip * norm })
    }

    pub fn constant(domain: &Domain) -> Result<Self> {
        Density::new(DensityKind::Constant, domain)
    }

    pub fn kind(&self) -> &DensityKind {
        &self.kind
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let raw = match &self.kind {
            DensityKind::Constant => 1.0,
            DensityKind::Affine { slope } => {
                1.0 + slope.iter().zip(x.iter().zip(&self.origin)).map(|(s, (x, c))| s * (x - c)).sum::<f64>()
            }
            DensityKind::Bump { amplitude, width, .. } => {
                let r2: f64 = x.iter().zip(&self.origin).map(|(x, c)| (x - c) * (x - c)).sum();
                1.0 + amplitude * (-r2 / (2.0 * width * width)).exp()
            }
        };
        raw * self.norm
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    /// Upper bound on the Lipschitz constant of ρ.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, DensityKind::Constant)
    }
}

/// ∫_Ω exp(-|x-c|²/(2w²)) dx.
fn gaussian_integral(domain: &Domain, c: &[f64], w: f64) -> f64 {
    match domain {
        Domain::Box { lower, upper } => {
            let s = w * std::f64::consts::SQRT_2;
            c.iter()
                .zip(lower.iter().zip(upper))
                .map(|(c, (a, b))| w * (PI / 2.0).sqrt() * (libm::erf((b - c) / s) - libm::erf((a - c) / s)))
                .product()
        }
        Domain::Disk { center, radius } => {
            let rule = Rule::new(8);
            rule.integrate(0.0, *radius, 64, |r| {
                r * rule.integrate(0.0, 2.0 * PI, 64, |t| {
                    let x = center[0] + r * t.cos() - c[0];
                    let y = center[1] + r * t.sin() - c[1];
                    (-(x * x + y * y) / (2.0 * w * w)).exp()
                })
            })
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Indicator,
    Cone,
    /// `exp(1 - 1/(1 - t²))` on [0, 1).
    Bump,
}

impl KernelKind {
    fn base(self, t: f64) -> f64 {
        if !(t >= 0.0) || t > 1.0 {
            return 0.0;
        }
        match self {
            KernelKind::Indicator => 1.0,
            KernelKind::Cone => 1.0 - t,
            KernelKind::Bump => {
                if t >= 1.0 {
                    0.0
                } else {
                    (1.0 - 1.0 / (1.0 - t * t)).exp()
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Indicator => "indicator",
            KernelKind::Cone => "cone",
            KernelKind::Bump => "bump",
        }
    }
}

impl std::str::FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "indicator" => Ok(KernelKind::Indicator),
            "cone" => Ok(KernelKind::Cone),
            "bump" => Ok(KernelKind::Bump),
            other => Err(invalid(format!("unknown kernel '{other}'"))),
        }
    }
}

/// Radial kernel η normalised to unit mass over the unit ball of R^d.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelProfile {
    kind: KernelKind,
    dim: usize,
    scale: f64,
    sigma: f64,
}

impl KernelProfile {
    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// σ_η = ∫ z₁² η(|z|) dz.
    pub fn sigma_eta(&self) -> f64 {
        self.sigma
    }

    /// Value at zero, i.e. the maximum of the profile.
    pub fn peak(&self) -> f64 {
        self.scale * self.kind.base(0.0)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.scale * self.kind.base(t)
    }

    /// η_ε(r) = ε^{-d} η(r/ε).
    pub fn eval_eps(&self, r: f64, eps: f64) -> f64 {
        self.eval(r / eps) / eps.powi(self.dim as i32)
    }
}

/// Normalises a kernel shape in dimension `d` and computes σ_η.
pub fn make_kernel(kind: KernelKind, d: usize) -> Result<KernelProfile> {
    if !(1..=3).contains(&d) {
        return Err(Error::UnsupportedDimension(d));
    }
    let rule = Rule::new(4);
    let panels = 10_000;
    let s = sphere_area(d);
    let mass = s * rule.integrate(0.0, 1.0, panels, |t| kind.base(t) * t.powi(d as i32 - 1));
    let scale = 1.0 / mass;
    let second = s * rule.integrate(0.0, 1.0, panels, |t| kind.base(t) * t.powi(d as i32 + 1));
    let sigma = scale * second / d as f64;
    Ok(KernelProfile { kind, dim: d, scale, sigma })
}

/// Draws `n` i.i.d. points from ρ on Ω by rejection from the bounding box.
pub fn sample_points(domain: &Domain, density: &Density, n: usize, seed: u64) -> Result<PointSet> {
    domain.validate()?;
    let d = domain.dim();
    let (lo, hi) = domain.bounding_box();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coords = Vec::with_capacity(n * d);
    let mut x = vec![0.0; d];
    let mut proposed: u64 = 0;
    let mut accepted = 0usize;
    let bound = density.max();
    while accepted < n {
        proposed += 1;
        for i in 0..d {
            x[i] = lo[i] + (hi[i] - lo[i]) * rng.gen::<f64>();
        }
        let u: f64 = rng.gen();
        if domain.contains(&x) && u * bound < density.eval(&x) {
            coords.extend_from_slice(&x);
            accepted += 1;
        }
        if proposed >= 10_000 && (accepted as f64) < 1e-3 * proposed as f64 {
            return Err(Error::LowAcceptance(accepted as f64 / proposed as f64));
        }
    }
    PointSet::new(d, coords)
}

/// Builds the ε-graph with weights `w_xy = η_ε(|x - y|)`, self-loops included.
pub fn build_graph(points: &PointSet, eps: f64, kernel: &KernelProfile) -> Result<Graph> {
    let n = points.len();
    let d = points.dim();
    if n < 2 {
        return Err(invalid("a graph needs at least two points"));
    }
    if d != kernel.dim() {
        return Err(Error::LengthMismatch { expected: kernel.dim(), got: d });
    }
    if !(eps > 0.0) {
        return Err(invalid("eps must be positive"));
    }
    if (n as f64) * eps.powi(d as i32) < 1.0 {
        return Err(Error::Assumption(format!("n·eps^d = {:.3e} < 1", n as f64 * eps.powi(d as i32))));
    }
    let cells = CellIndex::new(points, eps);
    let self_weight = kernel.eval_eps(0.0, eps);
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut cols: Vec<u32> = Vec::new();
    let mut weights = Vec::new();
    row_ptr.push(0usize);
    let mut row: Vec<(u32, f64)> = Vec::new();
    for i in 0..n {
        let p = points.point(i);
        row.clear();
        cells.for_each_candidate(p, |j| {
            if j > i {
                let r = dist(p, points.point(j));
                if r <= eps {
                    let w = kernel.eval_eps(r, eps);
                    if w > 0.0 {
                        row.push((j as u32, w));
                    }
                }
            }
        });
        row.sort_unstable_by_key(|e| e.0);
        for &(j, w) in &row {
            cols.push(j);
            weights.push(w);
        }
        row_ptr.push(cols.len());
    }
    Graph::from_upper(
        vec![self_weight; n],
        row_ptr,
        cols,
        weights,
        Some(points.clone()),
        Some(crate::graph::Scale { eps, sigma_eta: kernel.sigma_eta(), kernel: Some(*kernel) }),
    )
}

/// Uniform bucket grid with cell side ε for neighbour queries.
pub(crate) struct CellIndex {
    dim: usize,
    origin: Vec<f64>,
    side: f64,
    shape: Vec<usize>,
    start: Vec<usize>,
    items: Vec<usize>,
}

impl CellIndex {
    pub(crate) fn new(points: &PointSet, side: f64) -> Self {
        let d = points.dim();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for p in points.iter() {
            for k in 0..d {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let shape: Vec<usize> = (0..d).map(|k| ((hi[k] - lo[k]) / side).floor() as usize + 1).collect();
        let total: usize = shape.iter().product();
        let mut counts = vec![0usize; total + 1];
        let mut idx = CellIndex { dim: d, origin: lo, side, shape, start: Vec::new(), items: Vec::new() };
        let keys: Vec<usize> = points.iter().map(|p| idx.key(&idx.cell_of(p))).collect();
        for &k in &keys {
            counts[k + 1] += 1;
        }
        for c in 0..total {
            counts[c + 1] += counts[c];
        }
        let mut fill = counts.clone();
        let mut items = vec![0usize; points.len()];
        for (i, &k) in keys.iter().enumerate() {
            items[fill[k]] = i;
            fill[k] += 1;
        }
        idx.start = counts;
        idx.items = items;
        idx
    }

    fn cell_of(&self, p: &[f64]) -> Vec<i64> {
        (0..self.dim).map(|k| ((p[k] - self.origin[k]) / self.side).floor() as i64).collect()
    }

    fn key(&self, c: &[i64]) -> usize {
        let mut k = 0usize;
        for a in 0..self.dim {
            k = k * self.shape[a] + c[a].clamp(0, self.shape[a] as i64 - 1) as usize;
        }
        k
    }

    /// Calls `f` on every point whose cell is adjacent to the cell of `p`.
    pub(crate) fn for_each_candidate(&self, p: &[f64], mut f: impl FnMut(usize)) {
        let c = self.cell_of(p);
        let mut offset = vec![-1i64; self.dim];
        loop {
            let nb: Vec<i64> = c.iter().zip(&offset).map(|(a, b)| a + b).collect();
            if nb.iter().zip(&self.shape).all(|(v, s)| *v >= 0 && *v < *s as i64) {
                let k = self.key(&nb);
                for &j in &self.items[self.start[k]..self.start[k + 1]] {
                    f(j);
                }
            }
            let mut a = 0;
            loop {
                if a == self.dim {
                    return;
                }
                offset[a] += 1;
                if offset[a] <= 1 {
                    break;
                }
                offset[a] = -1;
                a += 1;
            }
        }
    }
}

/// Nearest node to `x`; ties go to the smallest index.
pub fn closest_point(x: &[f64], g: &Graph) -> Result<usize> {
    let pts = g.points().ok_or_else(|| invalid("graph carries no coordinates"))?;
    if x.len() != pts.dim() {
        return Err(Error::LengthMismatch { expected: pts.dim(), got: x.len() });
    }
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, p) in pts.iter().enumerate() {
        let r: f64 = p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
        if r < best_d {
            best_d = r;
            best = i;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indicator_and_cone_constants() {
        let k = make_kernel(KernelKind::Indicator, 1).unwrap();
        assert!((k.peak() - 0.5).abs() < 1e-12);
        assert!((k.sigma_eta() - 1.0 / 3.0).abs() < 1e-10);
        let k = make_kernel(KernelKind::Indicator, 2).unwrap();
        assert!((k.peak() - 1.0 / PI).abs() < 1e-12);
        assert!((k.sigma_eta() - 0.25).abs() < 1e-10);
        let k = make_kernel(KernelKind::Cone, 2).unwrap();
        assert!((k.peak() - 3.0 / PI).abs() < 1e-10);
        assert!((k.sigma_eta() - 3.0 / 20.0).abs() < 1e-10);
        let k = make_kernel(KernelKind::Indicator, 3).unwrap();
        assert!((k.peak() - 3.0 / (4.0 * PI)).abs() < 1e-12);
        assert!((k.sigma_eta() - 0.2).abs() < 1e-10);
    }

    #[test]
    fn unsupported_kernel_dimension() {
        assert!(matches!(make_kernel(KernelKind::Cone, 4), Err(Error::UnsupportedDimension(4))));
    }

    #[test]
    fn densities_are_normalised() {
        let dom = Domain::unit_box(2);
        let rule = Rule::new(8);
        for kind in [
            DensityKind::Constant,
            DensityKind::Affine { slope: vec![0.5, -0.3] },
            DensityKind::Bump { center: Some(vec![0.3, 0.6]), amplitude: 2.0, width: 0.15 },
        ] {
            let rho = Density::new(kind, &dom).unwrap();
            let total = rule.integrate(0.0, 1.0, 40, |x| rule.integrate(0.0, 1.0, 40, |y| rho.eval(&[x, y])));
            assert!((total - 1.0).abs() < 1e-8, "{total}");
            assert!(rho.min() > 0.0 && rho.min() <= rho.max());
        }
        let disk = Domain::unit_disk();
        let rho = Density::new(DensityKind::Bump { center: None, amplitude: 1.0, width: 0.2 }, &disk).unwrap();
        let total = rule.integrate(0.0, 0.5, 40, |r| {
            r * rule.integrate(0.0, 2.0 * PI, 40, |t| rho.eval(&[0.5 + r * t.cos(), 0.5 + r * t.sin()]))
        });
        assert!((total - 1.0).abs() < 1e-8);
    }

    #[test]
    fn affine_density_must_be_positive() {
        let dom = Domain::unit_box(1);
        assert!(Density::new(DensityKind::Affine { slope: vec![3.0] }, &dom).is_err());
    }

    #[test]
    fn sampler_is_deterministic_and_inside() {
        let dom = Domain::unit_disk();
        let rho = Density::constant(&dom).unwrap();
        let a = sample_points(&dom, &rho, 500, 11).unwrap();
        let b = sample_points(&dom, &rho, 500, 11).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|p| dom.contains(p)));
        let c = sample_points(&dom, &rho, 500, 12).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn cell_index_finds_all_close_pairs() {
        let dom = Domain::unit_box(3);
        let rho = Density::constant(&dom).unwrap();
        let pts = sample_points(&dom, &rho, 300, 3).unwrap();
        let idx = CellIndex::new(&pts, 0.2);
        for i in 0..pts.len() {
            let mut seen = Vec::new();
            idx.for_each_candidate(pts.point(i), |j| seen.push(j));
            for j in 0..pts.len() {
                if dist(pts.point(i), pts.point(j)) <= 0.2 {
                    assert!(seen.contains(&j));
                }
            }
        }
    }

    #[test]
    fn closest_point_prefers_smallest_index_on_ties() {
        let pts = PointSet::from_rows(1, &[vec![0.25], vec![0.5], vec![0.75]]).unwrap();
        let k = make_kernel(KernelKind::Indicator, 1).unwrap();
        let g = build_graph(&pts, 0.5, &k).unwrap();
        assert_eq!(closest_point(&[0.625], &g).unwrap(), 1);
        assert_eq!(closest_point(&[0.375], &g).unwrap(), 0);
        assert_eq!(closest_point(&[0.9], &g).unwrap(), 2);
    }
}
