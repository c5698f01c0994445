//! Graph Poisson problems with point sources, Laplace learning and
//! properly weighted Laplace learning.

use crate::clock::Instant;

use crate::cg::{conjugate_gradient, remove_mean};
use crate::error::{invalid, Error, Result};
use crate::geometry::{closest_point, Domain};
use crate::graph::{dot, weighted_mean_raw, Graph, GraphFunction};

/// Point sources `Σ a_x δ_x` with `Σ a_x = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceSpec {
    anchors: Vec<Vec<f64>>,
    coefficients: Vec<f64>,
}

impl SourceSpec {
    pub fn new(anchors: Vec<Vec<f64>>, coefficients: Vec<f64>) -> Result<Self> {
        if anchors.is_empty() {
            return Err(invalid("at least one source is required"));
        }
        if anchors.len() != coefficients.len() {
            return Err(Error::LengthMismatch { expected: anchors.len(), got: coefficients.len() });
        }
        let d = anchors[0].len();
        if d == 0 || anchors.iter().any(|a| a.len() != d) {
            return Err(invalid("anchors must share one positive dimension"));
        }
        if coefficients.iter().chain(anchors.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("source"));
        }
        let sum: f64 = coefficients.iter().sum();
        let scale: f64 = coefficients.iter().map(|a| a.abs()).sum::<f64>().max(1.0);
        if sum.abs() > 1e-14 * scale {
            return Err(Error::Incompatible(sum));
        }
        Ok(SourceSpec { anchors, coefficients })
    }

    pub fn anchors(&self) -> &[Vec<f64>] {
        &self.anchors
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn dim(&self) -> usize {
        self.anchors[0].len()
    }

    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    pub fn check_inside(&self, domain: &Domain) -> Result<()> {
        if self.anchors.iter().all(|a| domain.contains(a)) {
            Ok(())
        } else {
            Err(Error::OutsideDomain)
        }
    }

    /// Anchors mapped to their closest nodes; coefficients of shared nodes are summed.
    pub fn node_sources(&self, g: &Graph) -> Result<Vec<(usize, f64)>> {
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(self.len());
        for (x, a) in self.anchors.iter().zip(&self.coefficients) {
            let t = closest_point(x, g)?;
            match out.iter_mut().find(|(k, _)| *k == t) {
                Some(e) => e.1 += a,
                None => out.push((t, *a)),
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    /// Relative ℓ² residual target.
    pub tol: f64,
    pub max_iter: Option<usize>,
    pub jacobi: bool,
    pub initial: Option<Vec<f64>>,
}

impl SolveOptions {
    pub fn new(tol: f64) -> Self {
        SolveOptions { tol, max_iter: None, jacobi: true, initial: None }
    }
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions::new(1e-10)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// ℓ² norm of `L_{n,ε} u - f`, recomputed after the solve.
    pub residual: f64,
    pub relative_residual: f64,
    pub runtime_s: f64,
}

/// `f = Σ a δ_{τ(x)}` on the graph.
pub fn assemble_source(g: &Graph, sources: &[(usize, f64)]) -> Result<GraphFunction> {
    let n = g.len();
    let mut f = g.zeros();
    for &(x, a) in sources {
        if x >= n {
            return Err(Error::IndexOutOfRange { index: x, n });
        }
        f.values_mut()[x] += n as f64 * a;
    }
    Ok(f)
}

/// Solves `L_{n,ε} u = Σ a_x δ_{τ(x)}` with `(u)_deg = 0`.
pub fn solve_graph_poisson(g: &Graph, s: &SourceSpec, opts: &SolveOptions) -> Result<(GraphFunction, SolveReport)> {
    let nodes = s.node_sources(g)?;
    solve_poisson_nodes(g, &nodes, opts)
}

/// As [`solve_graph_poisson`] with sources already attached to nodes.
pub fn solve_poisson_nodes(g: &Graph, sources: &[(usize, f64)], opts: &SolveOptions) -> Result<(GraphFunction, SolveReport)> {
    let sum: f64 = sources.iter().map(|s| s.1).sum();
    let scale: f64 = sources.iter().map(|s| s.1.abs()).sum::<f64>().max(1.0);
    if sum.abs() > 1e-14 * scale {
        return Err(Error::Incompatible(sum));
    }
    let f = assemble_source(g, sources)?;
    solve_poisson_rhs(g, &f, opts)
}

/// Solves `L_{n,ε} u = f` for a general right-hand side with `⟨f, 1⟩ = 0`.
pub fn solve_poisson_rhs(g: &Graph, f: &GraphFunction, opts: &SolveOptions) -> Result<(GraphFunction, SolveReport)> {
    g.owns(f)?;
    let start = Instant::now();
    let factor = g.geometric_factor()?;
    let fsum: f64 = f.values().iter().sum();
    let fabs: f64 = f.values().iter().map(|v| v.abs()).sum();
    if fsum.abs() > 1e-12 * fabs.max(f64::MIN_POSITIVE) {
        return Err(Error::Incompatible(fsum / g.len() as f64));
    }
    if fabs == 0.0 {
        return Ok((g.zeros(), SolveReport { runtime_s: start.elapsed().as_secs_f64(), ..Default::default() }));
    }
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let b: Vec<f64> = f.values().iter().map(|v| v * factor).collect();
    let (x, iterations) = solve_singular(g, &b, opts)?;
    let u = g.function(x)?;
    let report = poisson_report(g, &u, f, iterations, start)?;
    if !(report.relative_residual <= opts.tol * 10.0) {
        return Err(Error::NonConvergence { iterations, residual: report.residual });
    }
    Ok((u, report))
}

fn poisson_report(g: &Graph, u: &GraphFunction, f: &GraphFunction, iterations: usize, start: Instant) -> Result<SolveReport> {
    let lu = g.laplacian_apply(crate::graph::LaplacianKind::GeometricScaled, u)?;
    let r = lu.sub(f)?;
    let residual = dot(r.values(), r.values()).sqrt();
    let fnorm = dot(f.values(), f.values()).sqrt();
    Ok(SolveReport { iterations, residual, relative_residual: residual / fnorm, runtime_s: start.elapsed().as_secs_f64() })
}

/// CG for the singular system `L x = b`, `Σ b = 0`, returning the solution with zero degree mean.
fn solve_singular(g: &Graph, b: &[f64], opts: &SolveOptions) -> Result<(Vec<f64>, usize)> {
    let n = g.len();
    let mut b = b.to_vec();
    remove_mean(&mut b);
    let bnorm = dot(&b, &b).sqrt();
    let mut x = match &opts.initial {
        Some(x0) if x0.len() == n => x0.clone(),
        Some(x0) => return Err(Error::LengthMismatch { expected: n, got: x0.len() }),
        None => vec![0.0; n],
    };
    let inv_diag: Option<Vec<f64>> = opts.jacobi.then(|| {
        g.degrees().iter().zip(g.self_weights()).map(|(d, w)| if d - w > 0.0 { 1.0 / (d - w) } else { 0.0 }).collect()
    });
    let max_iter = opts.max_iter.unwrap_or((10 * n).max(1000));
    let target = opts.tol * bnorm;
    let out = conjugate_gradient(
        |v, y| g.laplacian_raw(v, y),
        &b,
        &mut x,
        inv_diag.as_deref(),
        remove_mean,
        |_, r| r <= target,
        max_iter,
    );
    if !out.converged {
        return Err(Error::NonConvergence { iterations: out.iterations, residual: out.residual });
    }
    let m = weighted_mean_raw(g.degrees(), &x)?;
    x.iter_mut().for_each(|v| *v -= m);
    Ok((x, out.iterations))
}

fn check_labels(g: &Graph, labels: &[(usize, f64)]) -> Result<Vec<Option<f64>>> {
    let n = g.len();
    if labels.is_empty() {
        return Err(invalid("at least one label is required"));
    }
    let mut value: Vec<Option<f64>> = vec![None; n];
    for &(x, v) in labels {
        if x >= n {
            return Err(Error::IndexOutOfRange { index: x, n });
        }
        if !v.is_finite() {
            return Err(Error::NonFinite("label"));
        }
        match value[x] {
            Some(old) if old != v => return Err(Error::ConflictingLabels(x)),
            _ => value[x] = Some(v),
        }
    }
    // every unlabeled node must reach a label
    let mut comp: Vec<usize> = (0..n).collect();
    fn find(c: &mut [usize], mut x: usize) -> usize {
        while c[x] != x {
            c[x] = c[c[x]];
            x = c[x];
        }
        x
    }
    for (i, j, w) in g.edges() {
        if w > 0.0 {
            let (a, b) = (find(&mut comp, i), find(&mut comp, j));
            if a != b {
                comp[a] = b;
            }
        }
    }
    let mut has_label = vec![false; n];
    for (x, v) in value.iter().enumerate() {
        if v.is_some() {
            let r = find(&mut comp, x);
            has_label[r] = true;
        }
    }
    for x in 0..n {
        let r = find(&mut comp, x);
        if !has_label[r] {
            return Err(Error::Disconnected);
        }
    }
    Ok(value)
}

/// Harmonic extension of the labels: `L u = 0` off the labeled set.
///
/// Iterates until the mean value residual `|u(x) - Σ w u / Σ w|` is at most
/// `tol` at every unlabeled node.
pub fn solve_laplace_learning(g: &Graph, labels: &[(usize, f64)], tol: f64) -> Result<GraphFunction> {
    let value = check_labels(g, labels)?;
    let n = g.len();
    let boundary: Vec<f64> = value.iter().map(|v| v.unwrap_or(0.0)).collect();
    if value.iter().all(|v| v.is_some()) {
        return g.function(boundary);
    }
    let free: Vec<bool> = value.iter().map(|v| v.is_none()).collect();
    let mut lb = vec![0.0; n];
    g.laplacian_raw(&boundary, &mut lb);
    let b: Vec<f64> = (0..n).map(|i| if free[i] { -lb[i] } else { 0.0 }).collect();
    let inv_diag: Vec<f64> = (0..n)
        .map(|i| {
            let d = g.degrees()[i] - g.self_weights()[i];
            if free[i] && d > 0.0 {
                1.0 / d
            } else {
                0.0
            }
        })
        .collect();
    let mask = |v: &mut [f64]| v.iter_mut().zip(&free).for_each(|(v, f)| if !f { *v = 0.0 });
    let deg = g.degrees();
    let mut x = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let out = conjugate_gradient(
        |v, y| {
            tmp.copy_from_slice(v);
            mask(&mut tmp);
            g.laplacian_raw(&tmp, y);
            mask(y);
        },
        &b,
        &mut x,
        Some(&inv_diag),
        mask,
        |r, _| r.iter().zip(deg).all(|(r, d)| r.abs() <= 0.5 * tol * d),
        (20 * n).max(1000),
    );
    if !out.converged {
        return Err(Error::NonConvergence { iterations: out.iterations, residual: out.residual });
    }
    let u: Vec<f64> = (0..n).map(|i| if free[i] { x[i] } else { boundary[i] }).collect();
    g.function(u)
}

/// Weights `γ` of properly weighted Laplace learning.
///
/// `γ` solves `L γ = Σ_z (e_z - 1/n)` over the labeled nodes `z` (with
/// `e_z` the indicator of `z`), is normalised to zero degree mean and then
/// shifted so that `min γ = 1`.
pub fn pwll_weights(g: &Graph, labeled: &[usize], tol: f64) -> Result<GraphFunction> {
    let n = g.len();
    if labeled.is_empty() {
        return Err(invalid("at least one label is required"));
    }
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let mut b = vec![0.0; n];
    let mut seen = vec![false; n];
    for &z in labeled {
        if z >= n {
            return Err(Error::IndexOutOfRange { index: z, n });
        }
        if seen[z] {
            continue;
        }
        seen[z] = true;
        b[z] += 1.0;
        b.iter_mut().for_each(|v| *v -= 1.0 / n as f64);
    }
    let (mut gamma, _) = solve_singular(g, &b, &SolveOptions::new(tol.min(1e-10)))?;
    let min = gamma.iter().cloned().fold(f64::INFINITY, f64::min);
    gamma.iter_mut().for_each(|v| *v += 1.0 - min);
    g.function(gamma)
}

/// Laplace learning on the reweighted graph `γ(x) γ(y) w_xy`.
pub fn solve_pwll(g: &Graph, labels: &[(usize, f64)], tol: f64) -> Result<GraphFunction> {
    check_labels(g, labels)?;
    let nodes: Vec<usize> = labels.iter().map(|l| l.0).collect();
    let gamma = pwll_weights(g, &nodes, tol)?;
    let gv = gamma.values();
    let h = g.reweighted(|i, j, w| gv[i] * gv[j] * w)?;
    let u = solve_laplace_learning(&h, labels, tol)?;
    g.function(u.into_values())
}
