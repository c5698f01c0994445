//! Random walk heat kernels on graphs and their continuum surrogates.
//!
//! The heat kernel centred at `x` is `H_0 = δ_x`, `H_{k+1} = H_k - L_rw^T H_k`,
//! which in weight form reads `H_{k+1}(y) = Σ_z w_yz H_k(z) / deg(z)`.
//! Convolution against the kernel is `H_k * u = (I - L_rw)^k u`.

mod averaging;
mod psi;
mod scales;

pub use averaging::{repeated_average, rho_hat, AveragedField, AveragingOperator};
pub use psi::{psi_table, psi_table_with, PsiMethod, RadialKernelTable};
pub use scales::{scale_constants, theta, ScaleConstants};

use crate::error::{invalid, Error, Result};
use crate::geometry::dist;
use crate::graph::{Graph, GraphFunction, LaplacianKind};
use crate::solver::{assemble_source, SourceSpec};

/// Hard cap on the number of heat steps.
pub const MAX_STEPS: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq)]
pub enum HeatCenter {
    Node(usize),
    /// A point of the domain, not necessarily a node.
    Point(Vec<f64>),
}

#[derive(Clone, Debug)]
pub struct HeatColumn {
    pub center: HeatCenter,
    pub k: usize,
    pub values: GraphFunction,
}

/// `h <- W D⁻¹ h`, one step of the adjoint walk.
fn adjoint_step(g: &Graph, h: &mut [f64], scratch: &mut [f64]) {
    for (s, (h, d)) in scratch.iter_mut().zip(h.iter().zip(g.degrees())) {
        *s = h / d;
    }
    h.iter_mut().for_each(|v| *v = 0.0);
    g.adjacency_apply(scratch, h);
}

/// `u <- D⁻¹ W u`, one step of `I - L_rw`.
fn forward_step(g: &Graph, u: &mut [f64], scratch: &mut [f64]) {
    scratch.iter_mut().for_each(|v| *v = 0.0);
    g.adjacency_apply(u, scratch);
    for (u, (s, d)) in u.iter_mut().zip(scratch.iter().zip(g.degrees())) {
        *u = s / d;
    }
}

fn check_steps(g: &Graph, k: usize) -> Result<()> {
    if k > MAX_STEPS {
        return Err(invalid(format!("k = {k} exceeds the cap {MAX_STEPS}")));
    }
    g.check_degrees()
}

fn finite(v: &[f64], what: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Applies `k` adjoint walk steps to an arbitrary initial vector.
pub fn propagate_adjoint(g: &Graph, init: &GraphFunction, k: usize) -> Result<GraphFunction> {
    g.owns(init)?;
    check_steps(g, k)?;
    let mut h = init.values().to_vec();
    let mut scratch = vec![0.0; g.len()];
    for _ in 0..k {
        adjoint_step(g, &mut h, &mut scratch);
    }
    finite(&h, "heat kernel")?;
    g.function(h)
}

/// The heat kernel `H_k^x` as a function on the graph.
///
/// For an off-graph point `x` the first step uses
/// `H_1^x(x_i) = n η_ε(|x_i - x|) / deg(x)` with `deg(x) = Σ_j η_ε(|x - x_j|)`.
pub fn heat_column(g: &Graph, center: HeatCenter, k: usize) -> Result<HeatColumn> {
    check_steps(g, k)?;
    let n = g.len();
    let (init, steps) = match &center {
        HeatCenter::Node(x) => (g.delta(*x)?, k),
        HeatCenter::Point(x) => {
            if k == 0 {
                return Err(invalid("H_0 is only defined at graph nodes"));
            }
            (off_graph_first_step(g, x)?, k - 1)
        }
    };
    let values = propagate_adjoint(g, &init, steps)?;
    debug_assert_eq!(values.len(), n);
    Ok(HeatColumn { center, k, values })
}

fn off_graph_first_step(g: &Graph, x: &[f64]) -> Result<GraphFunction> {
    let pts = g.points().ok_or_else(|| invalid("graph carries no coordinates"))?;
    let scale = g.scale().ok_or_else(|| invalid("graph has no length scale"))?;
    let kernel = scale.kernel.ok_or_else(|| invalid("graph has no kernel"))?;
    if x.len() != pts.dim() {
        return Err(Error::LengthMismatch { expected: pts.dim(), got: x.len() });
    }
    let eta: Vec<f64> = pts.iter().map(|p| kernel.eval_eps(dist(p, x), scale.eps)).collect();
    let deg: f64 = eta.iter().sum();
    if !(deg > 0.0) {
        return Err(invalid("no node lies within eps of the centre"));
    }
    let n = g.len() as f64;
    g.function(eta.into_iter().map(|e| n * e / deg).collect())
}

/// `H_k * u = (I - L_rw)^k u`.
pub fn heat_convolve(g: &Graph, k: usize, u: &GraphFunction) -> Result<GraphFunction> {
    g.owns(u)?;
    check_steps(g, k)?;
    let mut v = u.values().to_vec();
    let mut scratch = vec![0.0; g.len()];
    for _ in 0..k {
        forward_step(g, &mut v, &mut scratch);
    }
    finite(&v, "heat convolution")?;
    g.function(v)
}

/// Runs `H_j * u` for `j = 0..=k_max` and hands every iterate to `visit`.
pub fn heat_convolve_each(
    g: &Graph,
    k_max: usize,
    u: &GraphFunction,
    mut visit: impl FnMut(usize, &[f64]) -> Result<()>,
) -> Result<()> {
    g.owns(u)?;
    check_steps(g, k_max)?;
    let mut v = u.values().to_vec();
    let mut scratch = vec![0.0; g.len()];
    visit(0, &v)?;
    for j in 1..=k_max {
        forward_step(g, &mut v, &mut scratch);
        visit(j, &v)?;
    }
    finite(&v, "heat convolution")
}

/// Mollified graph Poisson solution and its smoothed source.
#[derive(Clone, Debug)]
pub struct SmoothedPoisson {
    /// `u_k = H_k * u`.
    pub u_k: GraphFunction,
    /// `f_k = Σ a_x H_k^{τ(x)}`, so that `L_{n,ε} u_k = f_k`.
    pub f_k: GraphFunction,
}

/// Smooths a solution of `L_{n,ε} u = Σ a_x δ_{τ(x)}` with `k` heat steps.
pub fn smooth_poisson(g: &Graph, u: &GraphFunction, s: &SourceSpec, k: usize) -> Result<SmoothedPoisson> {
    let nodes = s.node_sources(g)?;
    smooth_poisson_nodes(g, u, &nodes, k)
}

pub fn smooth_poisson_nodes(g: &Graph, u: &GraphFunction, sources: &[(usize, f64)], k: usize) -> Result<SmoothedPoisson> {
    let f = assemble_source(g, sources)?;
    let lu = g.laplacian_apply(LaplacianKind::GeometricScaled, u)?;
    let r = lu.sub(&f)?;
    let fnorm = g.pnorm(&f, 2.0)?;
    if g.pnorm(&r, 2.0)? > 1e-8 * fnorm.max(f64::MIN_POSITIVE) {
        return Err(invalid("u does not solve the graph Poisson problem for these sources"));
    }
    let f_k = propagate_adjoint(g, &f, k)?;
    let u_k = heat_convolve(g, k, u)?;
    Ok(SmoothedPoisson { u_k, f_k })
}

/// `deg⁻¹ σ_η (n-1) ε² Σ_x a_x Σ_{j<k} H_j^{τ(x)}`, the exact value of `u - H_k * u`.
pub fn mollification_defect(g: &Graph, sources: &[(usize, f64)], k: usize) -> Result<GraphFunction> {
    let factor = g.geometric_factor()?;
    check_steps(g, k)?;
    let f = assemble_source(g, sources)?;
    let mut h = f.values().to_vec();
    let mut acc = vec![0.0; g.len()];
    let mut scratch = vec![0.0; g.len()];
    for j in 0..k {
        if j > 0 {
            adjoint_step(g, &mut h, &mut scratch);
        }
        acc.iter_mut().zip(&h).for_each(|(a, h)| *a += h);
    }
    let out: Vec<f64> = acc.iter().zip(g.degrees()).map(|(a, d)| factor * a / d).collect();
    finite(&out, "mollification defect")?;
    g.function(out)
}
