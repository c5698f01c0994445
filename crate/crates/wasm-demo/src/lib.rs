//! Browser bindings for three interactive views: the two-label comparison of
//! Laplace, Poisson and reweighted Laplace learning, graph heat diffusion
//! from a point, and radial profiles of repeated kernel convolutions.
//!
//! The `*_impl` functions are plain Rust and carry the logic; the exported
//! wrappers only convert errors for JavaScript.

use wasm_bindgen::prelude::*;

use graph_poisson::experiments::demo_on_graph;
use graph_poisson::geometry::{build_graph, make_kernel, sample_points};
use graph_poisson::heat::{heat_column, psi_table, HeatCenter};
use graph_poisson::{Density, Domain, Graph, KernelKind};

/// Fields of the two-label comparison on one sampled graph in the unit square.
#[wasm_bindgen]
pub struct TwoPoint {
    points: Vec<f64>,
    labeled: Vec<u32>,
    laplace: Vec<f64>,
    poisson: Vec<f64>,
    pwll: Vec<f64>,
    spike: f64,
    poisson_iqr: f64,
}

#[wasm_bindgen]
impl TwoPoint {
    /// Interleaved coordinates `x0, y0, x1, y1, ...`.
    pub fn points(&self) -> Vec<f64> {
        self.points.clone()
    }
    pub fn labeled(&self) -> Vec<u32> {
        self.labeled.clone()
    }
    pub fn laplace(&self) -> Vec<f64> {
        self.laplace.clone()
    }
    pub fn poisson(&self) -> Vec<f64> {
        self.poisson.clone()
    }
    pub fn pwll(&self) -> Vec<f64> {
        self.pwll.clone()
    }
    pub fn spike(&self) -> f64 {
        self.spike
    }
    pub fn poisson_iqr(&self) -> f64 {
        self.poisson_iqr
    }
}

/// Heat kernel values `H_k^x` at the nodes of one sampled graph.
#[wasm_bindgen]
pub struct Diffusion {
    points: Vec<f64>,
    values: Vec<f64>,
    mass: f64,
}

#[wasm_bindgen]
impl Diffusion {
    pub fn points(&self) -> Vec<f64> {
        self.points.clone()
    }
    pub fn values(&self) -> Vec<f64> {
        self.values.clone()
    }
    pub fn mass(&self) -> f64 {
        self.mass
    }
}

fn kernel_kind(name: &str) -> Result<KernelKind, String> {
    name.parse().map_err(|e: graph_poisson::Error| e.to_string())
}

fn square_graph(n: usize, eps: f64, seed: u64) -> Result<Graph, String> {
    let dom = Domain::unit_box(2);
    let rho = Density::constant(&dom).map_err(|e| e.to_string())?;
    let pts = sample_points(&dom, &rho, n, seed).map_err(|e| e.to_string())?;
    let kernel = make_kernel(KernelKind::Indicator, 2).map_err(|e| e.to_string())?;
    build_graph(&pts, eps, &kernel).map_err(|e| e.to_string())
}

pub fn two_point_impl(n: usize, eps: f64, seed: u64, a: [f64; 2], b: [f64; 2]) -> Result<TwoPoint, String> {
    let g = square_graph(n, eps, seed)?;
    let out = demo_on_graph(&g, &[a.to_vec(), b.to_vec()], 1e-10).map_err(|e| e.to_string())?;
    Ok(TwoPoint {
        points: out.points.coords().to_vec(),
        labeled: out.labeled.iter().map(|&i| i as u32).collect(),
        laplace: out.laplace,
        poisson: out.poisson,
        pwll: out.pwll,
        spike: out.summary.spike,
        poisson_iqr: out.summary.poisson_iqr,
    })
}

pub fn heat_impl(n: usize, eps: f64, seed: u64, center: [f64; 2], k: usize) -> Result<Diffusion, String> {
    let g = square_graph(n, eps, seed)?;
    let col = heat_column(&g, HeatCenter::Point(center.to_vec()), k).map_err(|e| e.to_string())?;
    let mass = g.inner(&col.values, &g.constant(1.0)).map_err(|e| e.to_string())?;
    Ok(Diffusion { points: g.points().map(|p| p.coords().to_vec()).unwrap_or_default(), values: col.values.into_values(), mass })
}

/// Pairs `r0, ψ(r0), r1, ψ(r1), ...` for `r` up to `r_max`.
pub fn psi_impl(d: usize, k: usize, eps: f64, kernel: &str, r_max: f64, samples: usize) -> Result<Vec<f64>, String> {
    let kernel = make_kernel(kernel_kind(kernel)?, d).map_err(|e| e.to_string())?;
    let table = psi_table(&kernel, k, eps).map_err(|e| e.to_string())?;
    let m = samples.max(2);
    Ok((0..m)
        .flat_map(|i| {
            let r = r_max * i as f64 / (m - 1) as f64;
            [r, table.eval(r)]
        })
        .collect())
}

/// Two labels, `+1` at `(ax, ay)` and `-1` at `(bx, by)`.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn two_point_demo(n: usize, eps: f64, seed: u32, ax: f64, ay: f64, bx: f64, by: f64) -> Result<TwoPoint, JsError> {
    two_point_impl(n, eps, seed as u64, [ax, ay], [bx, by]).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn heat_diffusion(n: usize, eps: f64, seed: u32, cx: f64, cy: f64, k: usize) -> Result<Diffusion, JsError> {
    heat_impl(n, eps, seed as u64, [cx, cy], k).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn psi_profile(d: usize, k: usize, eps: f64, kernel: &str, r_max: f64, samples: usize) -> Result<Vec<f64>, JsError> {
    psi_impl(d, k, eps, kernel, r_max, samples).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_fields() {
        let t = two_point_impl(2000, 0.12, 1, [0.25, 0.5], [0.75, 0.5]).unwrap();
        assert_eq!(t.points().len(), 4000);
        assert_eq!(t.laplace()[t.labeled()[0] as usize], 1.0);
        assert_eq!(t.laplace()[t.labeled()[1] as usize], -1.0);
        assert!(t.spike() > 0.9);
        assert!(t.poisson_iqr() > 0.1);
        assert!(two_point_impl(2000, 0.12, 1, [0.25, 0.5], [0.25, 0.5]).is_err());
    }

    #[test]
    fn diffusion_keeps_mass() {
        let h = heat_impl(3000, 0.08, 2, [0.5, 0.5], 10).unwrap();
        assert!((h.mass() - 1.0).abs() < 1e-12);
        assert_eq!(h.values().len(), 3000);
        assert!(heat_impl(3000, 0.08, 2, [0.5, 0.5], 0).is_err());
    }

    #[test]
    fn psi_pairs() {
        let v = psi_impl(1, 2, 1.0, "indicator", 2.0, 5).unwrap();
        assert_eq!(v.len(), 10);
        assert!((v[1] - 0.5).abs() < 1e-2);
        assert!(psi_impl(2, 4, 0.1, "nope", 1.0, 10).is_err());
    }
}
