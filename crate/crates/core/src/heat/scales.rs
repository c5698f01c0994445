use crate::error::{invalid, Error, Result};

/// Length scales and constants attached to `k` heat steps at scale `ε`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaleConstants {
    pub d: usize,
    pub k: usize,
    pub eps: f64,
    /// `ε_k = ε √k`.
    pub eps_k: f64,
    /// `R_k = 5ε + ε_k √(8d ln(k ε^{-(d+2)}))`.
    pub r_k: f64,
    pub theta: f64,
}

impl ScaleConstants {
    /// `φ(z) = min{Θ, k exp(-((|z| - ε)_+)² / (8d ε_k²))}`.
    pub fn phi(&self, r: f64) -> f64 {
        let t = (r - self.eps).max(0.0);
        let tail = self.k as f64 * (-t * t / (8.0 * self.d as f64 * self.eps_k * self.eps_k)).exp();
        self.theta.min(tail)
    }

    /// Hoeffding type bound `2d exp(-t²/(2d ε_k²))` on the mass of ψ_{k,ε} beyond `t`.
    pub fn tail_bound(&self, t: f64) -> f64 {
        let d = self.d as f64;
        2.0 * d * (-t * t / (2.0 * d * self.eps_k * self.eps_k)).exp()
    }
}

/// `Θ_{d,k}`: `√k` for `d = 1`, `ln(k + 1)` for `d = 2`, `d/(d-2)` otherwise.
pub fn theta(d: usize, k: usize) -> f64 {
    match d {
        1 => (k as f64).sqrt(),
        2 => (k as f64 + 1.0).ln(),
        _ => d as f64 / (d as f64 - 2.0),
    }
}

pub fn scale_constants(d: usize, k: usize, eps: f64) -> Result<ScaleConstants> {
    if d == 0 {
        return Err(Error::UnsupportedDimension(0));
    }
    if k == 0 {
        return Err(invalid("k must be at least 1"));
    }
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::Assumption(format!("eps = {eps} outside (0, 1/2]")));
    }
    let eps_k = eps * (k as f64).sqrt();
    if eps_k > 1.0 {
        return Err(Error::Assumption(format!("eps_k = {eps_k} exceeds 1")));
    }
    let arg = (k as f64).ln() - (d as f64 + 2.0) * eps.ln();
    let r_k = 5.0 * eps + eps_k * (8.0 * d as f64 * arg).sqrt();
    Ok(ScaleConstants { d, k, eps, eps_k, r_k, theta: theta(d, k) })
}
