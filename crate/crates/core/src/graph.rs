//! Weighted graphs, graph functions and the graph calculus built on them.
//!
//! Inner products and norms are normalised by `1/n`. The graph delta
//! `δ_x` takes the value `n` at `x`, so `⟨u, δ_x⟩ = u(x)`.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{invalid, Error, Result};
use crate::geometry::{KernelProfile, PointSet};

static NEXT_GRAPH_ID: AtomicU64 = AtomicU64::new(1);

/// Length scale data used by the geometric normalisation of `L`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scale {
    pub eps: f64,
    pub sigma_eta: f64,
    pub kernel: Option<KernelProfile>,
}

/// Undirected weighted graph on `n` nodes.
///
/// Each undirected edge `{i, j}` with `i < j` is stored once in a
/// compressed row layout; self weights `w_ii` live in their own vector and
/// count towards the degree.
#[derive(Clone, Debug)]
pub struct Graph {
    id: u64,
    self_weights: Vec<f64>,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    weights: Vec<f64>,
    degrees: Vec<f64>,
    points: Option<PointSet>,
    scale: Option<Scale>,
    connected: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LaplacianKind {
    /// `L u(x) = Σ_y w_xy (u(x) - u(y))`.
    Unnormalized,
    /// `deg⁻¹ L`.
    RandomWalk,
    /// Adjoint of the random walk Laplacian in the unweighted inner product.
    RandomWalkAdjoint,
    /// `L / (σ_η ε² (n - 1))`.
    GeometricScaled,
}

/// Real-valued function on the nodes of one particular graph.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphFunction {
    graph: u64,
    values: Vec<f64>,
}

impl GraphFunction {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn graph_id(&self) -> u64 {
        self.graph
    }

    fn check(&self, other: &GraphFunction) -> Result<()> {
        if self.graph != other.graph {
            return Err(Error::GraphMismatch);
        }
        Ok(())
    }

    pub fn sub(&self, other: &GraphFunction) -> Result<GraphFunction> {
        self.check(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(GraphFunction { graph: self.graph, values })
    }

    pub fn add(&self, other: &GraphFunction) -> Result<GraphFunction> {
        self.check(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(GraphFunction { graph: self.graph, values })
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &GraphFunction) -> Result<()> {
        self.check(other)?;
        for (s, o) in self.values.iter_mut().zip(&other.values) {
            *s += a * o;
        }
        Ok(())
    }

    pub fn scaled(&self, a: f64) -> GraphFunction {
        GraphFunction { graph: self.graph, values: self.values.iter().map(|v| a * v).collect() }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GraphFunction {
        GraphFunction { graph: self.graph, values: self.values.iter().map(|&v| f(v)).collect() }
    }
}

impl Graph {
    pub(crate) fn from_upper(
        self_weights: Vec<f64>,
        row_ptr: Vec<usize>,
        cols: Vec<u32>,
        weights: Vec<f64>,
        points: Option<PointSet>,
        scale: Option<Scale>,
    ) -> Result<Graph> {
        let n = self_weights.len();
        if row_ptr.len() != n + 1 || cols.len() != weights.len() || row_ptr[n] != cols.len() {
            return Err(invalid("inconsistent sparse layout"));
        }
        if let Some(p) = &points {
            if p.len() != n {
                return Err(Error::LengthMismatch { expected: n, got: p.len() });
            }
        }
        if self_weights.iter().chain(&weights).any(|w| !w.is_finite() || *w < 0.0) {
            return Err(invalid("weights must be finite and non-negative"));
        }
        let mut degrees = self_weights.clone();
        let mut uf = UnionFind::new(n);
        for i in 0..n {
            for e in row_ptr[i]..row_ptr[i + 1] {
                let j = cols[e] as usize;
                if j <= i || j >= n {
                    return Err(invalid("upper layout requires i < j < n"));
                }
                degrees[i] += weights[e];
                degrees[j] += weights[e];
                if weights[e] > 0.0 {
                    uf.union(i, j);
                }
            }
        }
        let connected = n > 0 && uf.components() == 1;
        let id = NEXT_GRAPH_ID.fetch_add(1, Ordering::Relaxed);
        Ok(Graph { id, self_weights, row_ptr, cols, weights, degrees, points, scale, connected })
    }

    /// Abstract graph from `(i, j, w)` triples; each unordered pair at most once.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Graph> {
        let mut self_weights = vec![0.0; n];
        let mut seen_self = vec![false; n];
        let mut upper: Vec<(usize, usize, f64)> = Vec::with_capacity(edges.len());
        for &(i, j, w) in edges {
            for idx in [i, j] {
                if idx >= n {
                    return Err(Error::IndexOutOfRange { index: idx, n });
                }
            }
            if i == j {
                if seen_self[i] {
                    return Err(invalid(format!("duplicate self loop at {i}")));
                }
                seen_self[i] = true;
                self_weights[i] = w;
            } else {
                upper.push((i.min(j), i.max(j), w));
            }
        }
        upper.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        if upper.windows(2).any(|p| p[0].0 == p[1].0 && p[0].1 == p[1].1) {
            return Err(invalid("duplicate edge"));
        }
        let mut row_ptr = vec![0usize; n + 1];
        for e in &upper {
            row_ptr[e.0 + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let cols = upper.iter().map(|e| e.1 as u32).collect();
        let weights = upper.iter().map(|e| e.2).collect();
        Graph::from_upper(self_weights, row_ptr, cols, weights, None, None)
    }

    /// Attaches the length scale used by [`LaplacianKind::GeometricScaled`].
    pub fn with_scale(mut self, eps: f64, sigma_eta: f64) -> Result<Graph> {
        if !(eps > 0.0) || !(sigma_eta > 0.0) {
            return Err(invalid("eps and sigma_eta must be positive"));
        }
        let kernel = self.scale.and_then(|s| s.kernel);
        self.scale = Some(Scale { eps, sigma_eta, kernel });
        Ok(self)
    }

    /// Attaches `ε` together with the kernel that generated the weights.
    pub fn with_kernel(mut self, eps: f64, kernel: KernelProfile) -> Result<Graph> {
        if !(eps > 0.0) {
            return Err(invalid("eps must be positive"));
        }
        self.scale = Some(Scale { eps, sigma_eta: kernel.sigma_eta(), kernel: Some(kernel) });
        Ok(self)
    }

    pub fn with_points(mut self, points: PointSet) -> Result<Graph> {
        if points.len() != self.len() {
            return Err(Error::LengthMismatch { expected: self.len(), got: points.len() });
        }
        self.points = Some(points);
        Ok(self)
    }

    /// New graph with every weight replaced by `f(i, j, w_ij)` (also for `i == j`).
    pub fn reweighted(&self, f: impl Fn(usize, usize, f64) -> f64) -> Result<Graph> {
        let self_weights = self.self_weights.iter().enumerate().map(|(i, &w)| f(i, i, w)).collect();
        let mut weights = Vec::with_capacity(self.weights.len());
        for i in 0..self.len() {
            for e in self.row_ptr[i]..self.row_ptr[i + 1] {
                weights.push(f(i, self.cols[e] as usize, self.weights[e]));
            }
        }
        Graph::from_upper(self_weights, self.row_ptr.clone(), self.cols.clone(), weights, self.points.clone(), self.scale)
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn len(&self) -> usize {
        self.self_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.self_weights.is_empty()
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn self_weights(&self) -> &[f64] {
        &self.self_weights
    }

    pub fn points(&self) -> Option<&PointSet> {
        self.points.as_ref()
    }

    pub fn scale(&self) -> Option<Scale> {
        self.scale
    }

    pub fn eps(&self) -> Option<f64> {
        self.scale.map(|s| s.eps)
    }

    pub fn is_connected(&self) -> bool {
        self.connected
    }

    /// Number of stored edges with `i < j`.
    pub fn edge_count(&self) -> usize {
        self.cols.len()
    }

    /// Edges `(i, j, w)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.len()).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |e| (i, self.cols[e] as usize, self.weights[e]))
        })
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return self.self_weights[i];
        }
        let (a, b) = (i.min(j), i.max(j));
        let row = &self.cols[self.row_ptr[a]..self.row_ptr[a + 1]];
        match row.binary_search(&(b as u32)) {
            Ok(k) => self.weights[self.row_ptr[a] + k],
            Err(_) => 0.0,
        }
    }

    pub fn function(&self, values: Vec<f64>) -> Result<GraphFunction> {
        if values.len() != self.len() {
            return Err(Error::LengthMismatch { expected: self.len(), got: values.len() });
        }
        Ok(GraphFunction { graph: self.id, values })
    }

    pub fn zeros(&self) -> GraphFunction {
        GraphFunction { graph: self.id, values: vec![0.0; self.len()] }
    }

    pub fn constant(&self, c: f64) -> GraphFunction {
        GraphFunction { graph: self.id, values: vec![c; self.len()] }
    }

    pub fn owns(&self, u: &GraphFunction) -> Result<()> {
        if u.graph != self.id {
            return Err(Error::GraphMismatch);
        }
        Ok(())
    }

    /// Graph delta at node `x`: `n` at `x`, zero elsewhere.
    pub fn delta(&self, x: usize) -> Result<GraphFunction> {
        let n = self.len();
        if x >= n {
            return Err(Error::IndexOutOfRange { index: x, n });
        }
        let mut u = self.zeros();
        u.values[x] = n as f64;
        Ok(u)
    }

    /// `⟨u, v⟩ = (1/n) Σ u(x) v(x)`.
    pub fn inner(&self, u: &GraphFunction, v: &GraphFunction) -> Result<f64> {
        self.owns(u)?;
        self.owns(v)?;
        Ok(dot(&u.values, &v.values) / self.len() as f64)
    }

    /// `‖u‖_p = ((1/n) Σ |u|^p)^{1/p}`, with `p = ∞` giving the maximum.
    pub fn pnorm(&self, u: &GraphFunction, p: f64) -> Result<f64> {
        self.owns(u)?;
        if !(p >= 1.0) {
            return Err(invalid("p must be at least 1"));
        }
        if p.is_infinite() {
            return Ok(u.values.iter().fold(0.0, |m, v| m.max(v.abs())));
        }
        let s: f64 = u.values.iter().map(|v| v.abs().powf(p)).sum::<f64>() / self.len() as f64;
        Ok(s.powf(1.0 / p))
    }

    /// Degree weighted mean `Σ deg·u / Σ deg`.
    pub fn weighted_mean(&self, u: &GraphFunction) -> Result<f64> {
        self.owns(u)?;
        weighted_mean_raw(&self.degrees, &u.values)
    }

    /// `y = W x` including self weights.
    pub fn adjacency_apply(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.len() {
            let xi = x[i];
            let mut acc = self.self_weights[i] * xi;
            for e in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[e] as usize;
                let w = self.weights[e];
                acc += w * x[j];
                y[j] += w * xi;
            }
            y[i] += acc;
        }
    }

    /// `y = L x` for the unnormalised Laplacian.
    pub(crate) fn laplacian_raw(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().zip(x.iter().zip(&self.degrees)).for_each(|(y, (x, d))| *y = d * x);
        for i in 0..self.len() {
            let xi = x[i];
            let mut acc = self.self_weights[i] * xi;
            for e in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[e] as usize;
                let w = self.weights[e];
                acc += w * x[j];
                y[j] -= w * xi;
            }
            y[i] -= acc;
        }
    }

    pub(crate) fn check_degrees(&self) -> Result<()> {
        match self.degrees.iter().position(|d| !(*d > 0.0)) {
            Some(i) => Err(Error::ZeroDegree(i)),
            None => Ok(()),
        }
    }

    /// `σ_η ε² (n - 1)`.
    pub fn geometric_factor(&self) -> Result<f64> {
        let s = self.scale.ok_or_else(|| invalid("graph has no length scale"))?;
        if self.len() < 2 {
            return Err(invalid("geometric scaling needs n >= 2"));
        }
        Ok(s.sigma_eta * s.eps * s.eps * (self.len() - 1) as f64)
    }

    pub fn laplacian_apply(&self, kind: LaplacianKind, u: &GraphFunction) -> Result<GraphFunction> {
        self.owns(u)?;
        let n = self.len();
        let mut out = vec![0.0; n];
        match kind {
            LaplacianKind::Unnormalized => self.laplacian_raw(&u.values, &mut out),
            LaplacianKind::GeometricScaled => {
                let f = self.geometric_factor()?;
                self.laplacian_raw(&u.values, &mut out);
                out.iter_mut().for_each(|v| *v /= f);
            }
            LaplacianKind::RandomWalk => {
                self.check_degrees()?;
                self.laplacian_raw(&u.values, &mut out);
                out.iter_mut().zip(&self.degrees).for_each(|(v, d)| *v /= d);
            }
            LaplacianKind::RandomWalkAdjoint => {
                self.check_degrees()?;
                let scaled: Vec<f64> = u.values.iter().zip(&self.degrees).map(|(u, d)| u / d).collect();
                self.adjacency_apply(&scaled, &mut out);
                out.iter_mut().zip(&u.values).for_each(|(o, u)| *o = u - *o);
            }
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("laplacian"));
        }
        Ok(GraphFunction { graph: self.id, values: out })
    }

    /// `‖∇u‖²` normalised so that it equals `⟨u, L_{n,ε} u⟩`.
    pub fn dirichlet_energy(&self, u: &GraphFunction) -> Result<f64> {
        self.owns(u)?;
        let f = self.geometric_factor()?;
        let mut s = 0.0;
        for (i, j, w) in self.edges() {
            let d = u.values[i] - u.values[j];
            s += w * d * d;
        }
        Ok(s / (f * self.len() as f64))
    }

    /// `E(u; f) = ½‖∇u‖² - ⟨u, f⟩`.
    pub fn energy(&self, u: &GraphFunction, f: &GraphFunction) -> Result<f64> {
        Ok(0.5 * self.dirichlet_energy(u)? - self.inner(u, f)?)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn weighted_mean_raw(deg: &[f64], u: &[f64]) -> Result<f64> {
    let total: f64 = deg.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroTotalDegree);
    }
    Ok(dot(deg, u) / total)
}

struct UnionFind {
    parent: Vec<usize>,
    roots: usize,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), roots: n }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
            self.roots -= 1;
        }
    }

    fn components(&self) -> usize {
        self.roots
    }
}
