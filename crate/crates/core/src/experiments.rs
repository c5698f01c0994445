//! Parameter sweeps comparing graph solutions with continuum references.
//!
//! Each experiment reads an [`ExperimentConfig`], runs one job per
//! (ladder point, seed) and returns [`RateRecord`]s together with log-log
//! slope fits. Output goes to `results.csv` with a fixed column order and a
//! `meta.txt` holding the resolved configuration.

use std::fmt::Write as _;
use std::path::Path;
use crate::clock::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::continuum::{build_grid, solve_weighted_poisson, GridFunction, GridSource};
use crate::error::{invalid, Error, Result};
use crate::geometry::{build_graph, closest_point, make_kernel, sample_points, Density, DensityKind, Domain, KernelKind};
use crate::graph::{Graph, GraphFunction};
use crate::heat::{self, HeatCenter};
use crate::solver::{self, SolveOptions, SourceSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_experiment")]
    pub experiment: String,
    pub d: usize,
    #[serde(default = "default_kernel")]
    pub kernel: KernelKind,
    pub domain: Domain,
    #[serde(default = "default_density")]
    pub density: DensityKind,
    pub sources: Option<SourcesConfig>,
    pub ladder: Option<LadderConfig>,
    pub n_rule: Option<NRule>,
    #[serde(default)]
    pub k_rule: KRule,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Number of largest-ε points left out of the slope fit.
    #[serde(default)]
    pub drop_largest: usize,
    #[serde(default)]
    pub reference: ReferenceConfig,
    pub mollify: Option<MollifyConfig>,
    pub heat: Option<HeatConfig>,
    pub demo: Option<DemoConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_experiment() -> String {
    "converge".into()
}
fn default_kernel() -> KernelKind {
    KernelKind::Indicator
}
fn default_density() -> DensityKind {
    DensityKind::Constant
}
fn default_seeds() -> Vec<u64> {
    vec![1, 2, 3, 4, 5]
}
fn default_tol() -> f64 {
    1e-10
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourcesConfig {
    pub anchors: Vec<Vec<f64>>,
    pub coefficients: Vec<f64>,
}

impl SourcesConfig {
    pub fn source_spec(&self) -> Result<SourceSpec> {
        SourceSpec::new(self.anchors.clone(), self.coefficients.clone())
    }
}

/// Decreasing ε values, either listed or geometric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderConfig {
    pub eps: Option<Vec<f64>>,
    pub eps_max: Option<f64>,
    pub ratio: Option<f64>,
    pub steps: Option<usize>,
}

impl LadderConfig {
    pub fn values(&self) -> Result<Vec<f64>> {
        let eps = match (&self.eps, self.eps_max, self.ratio, self.steps) {
            (Some(e), _, _, _) => e.clone(),
            (None, Some(m), Some(r), Some(s)) => (0..s).map(|i| m * r.powi(i as i32)).collect(),
            _ => return Err(invalid("ladder needs `eps` or `eps_max`, `ratio` and `steps`")),
        };
        if eps.is_empty() || eps.iter().any(|e| !(*e > 0.0)) {
            return Err(invalid("ladder values must be positive"));
        }
        if eps.windows(2).any(|w| w[1] >= w[0]) {
            return Err(invalid("ladder must be strictly decreasing"));
        }
        Ok(eps)
    }
}

/// How many points to sample at each ε.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum NRule {
    Fixed { n: usize },
    Explicit { n: Vec<usize> },
    /// Smallest `n` with `ε ≥ c (log n / n)^q`, clamped to `[n_min, n_max]`.
    Probability { c: f64, q: f64, n_min: Option<usize>, n_max: Option<usize> },
}

impl NRule {
    pub fn n_for(&self, index: usize, eps: f64) -> Result<usize> {
        match self {
            NRule::Fixed { n } => Ok(*n),
            NRule::Explicit { n } => n.get(index).copied().ok_or_else(|| invalid("explicit n list is shorter than the ladder")),
            NRule::Probability { c, q, n_min, n_max } => {
                if !(*c > 0.0 && *q > 0.0) {
                    return Err(invalid("probability rule needs c > 0 and q > 0"));
                }
                let target = (eps / c).powf(1.0 / q);
                let ok = |n: usize| (n as f64).ln() / n as f64 <= target;
                let (mut lo, mut hi) = (3usize, 3usize);
                while !ok(hi) {
                    lo = hi;
                    hi = hi.checked_mul(2).ok_or_else(|| invalid("probability rule overflows"))?;
                    if hi > 1 << 40 {
                        return Err(invalid("probability rule asks for more than 2^40 points"));
                    }
                }
                while lo + 1 < hi {
                    let mid = (lo + hi) / 2;
                    if ok(mid) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                let n = hi.max(n_min.unwrap_or(2));
                Ok(n_max.map_or(n, |m| n.min(m)))
            }
        }
    }
}

/// Number of heat steps attached to each ε.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum KRule {
    #[default]
    None,
    /// `k = ε^{-2(d+1)/(d+2)}`.
    Nonconstant,
    /// `k = ε^{-2(d+3)/(d+4)}`.
    Constant,
    Explicit { k: Vec<usize> },
}

impl KRule {
    pub fn k_for(&self, index: usize, d: usize, eps: f64) -> Result<usize> {
        let d = d as f64;
        let k = match self {
            KRule::None => 0.0,
            KRule::Nonconstant => eps.powf(-2.0 * (d + 1.0) / (d + 2.0)),
            KRule::Constant => eps.powf(-2.0 * (d + 3.0) / (d + 4.0)),
            KRule::Explicit { k } => *k.get(index).ok_or_else(|| invalid("explicit k list is shorter than the ladder"))? as f64,
        };
        Ok(k.round() as usize)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceConfig {
    /// Grid spacing; defaults to the largest `1/m` not above `ε_min / 10`.
    pub h: Option<f64>,
    /// Bump radii for the atomic vs mollified continuum comparison.
    #[serde(default)]
    pub radii: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MollifyConfig {
    pub n: usize,
    pub eps: f64,
    pub k: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CenterMargin {
    /// `B(x, R_k) ⊂ Ω`.
    Rk,
    /// The ball outside which the tail bound `2d exp(-t²/(2dε_k²))` drops below 1e-6.
    Tail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatConfig {
    pub center: Vec<f64>,
    pub eps: f64,
    pub k: usize,
    pub n: Vec<usize>,
    /// Grid spacing for `M_ε`; defaults to `ε/16` rounded to divide the box.
    pub grid_h: Option<f64>,
    #[serde(default = "default_margin")]
    pub margin: CenterMargin,
}

fn default_margin() -> CenterMargin {
    CenterMargin::Rk
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemoConfig {
    pub n: usize,
    pub eps: f64,
    pub labels: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: String,
    /// When false the `runtime_s` column is written as 0 so that outputs are byte-reproducible.
    #[serde(default = "default_true")]
    pub record_runtime: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: default_dir(), record_runtime: true }
    }
}

fn default_dir() -> String {
    "out".into()
}
fn default_true() -> bool {
    true
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Self::from_toml_with_overrides(text, &[])
    }

    /// Parses the file and applies `key = value` overrides on dotted paths.
    pub fn from_toml_with_overrides(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        for (key, value) in overrides {
            apply_override(&mut table, key, value)?;
        }
        let cfg: ExperimentConfig =
            toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }

    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        if self.domain.dim() != self.d {
            return Err(invalid(format!("domain dimension {} differs from d = {}", self.domain.dim(), self.d)));
        }
        if self.seeds.is_empty() {
            return Err(invalid("at least one seed is required"));
        }
        if !(self.tol > 0.0) {
            return Err(invalid("tol must be positive"));
        }
        if let Some(l) = &self.ladder {
            l.values()?;
        }
        if let Some(s) = &self.sources {
            let point_sources = s.source_spec()?;
            if point_sources.dim() != self.d {
                return Err(invalid("source anchors have the wrong dimension"));
            }
            point_sources.check_inside(&self.domain)?;
        }
        Ok(())
    }

    fn density(&self) -> Result<Density> {
        Density::new(self.density.clone(), &self.domain)
    }
}

fn apply_override(table: &mut toml::Table, key: &str, value: &str) -> Result<()> {
    let parsed: toml::Value = match format!("v = {value}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or(toml::Value::String(value.into())),
        Err(_) => toml::Value::String(value.into()),
    };
    let parts: Vec<&str> = key.split('.').collect();
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| invalid(format!("override path {key} crosses a non-table")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), parsed);
    Ok(())
}

/// Booleans for the standing assumptions at one ladder point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct AssumptionChecks {
    /// `n ≥ 2`, `0 < ε ≤ 1`, `n ε^d ≥ 1`.
    pub n_eps: bool,
    /// `0 < ε ≤ 1/2` and `ε_k ≤ 1`.
    pub eps_k: bool,
    /// `ε_k √log(1/ε) ≤ dist(Γ, ∂Ω) / (24(d+2))`.
    pub source_margin: bool,
    pub connected: bool,
}

fn assumption_checks(d: usize, n: usize, eps: f64, k: usize, gamma_dist: f64) -> AssumptionChecks {
    let eps_k = eps * (k.max(1) as f64).sqrt();
    AssumptionChecks {
        n_eps: n >= 2 && eps > 0.0 && eps <= 1.0 && n as f64 * eps.powi(d as i32) >= 1.0,
        eps_k: eps > 0.0 && eps <= 0.5 && eps_k <= 1.0,
        source_margin: eps_k * (1.0 / eps).ln().max(0.0).sqrt() <= gamma_dist / (24.0 * (d as f64 + 2.0)),
        connected: false,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateRecord {
    pub experiment: String,
    pub d: usize,
    pub n: usize,
    pub eps: f64,
    pub k: usize,
    pub seed: u64,
    pub l1_error: f64,
    pub moll_error: f64,
    pub slope: f64,
    pub runtime_s: f64,
    pub iterations: usize,
    pub residual: f64,
    pub checks: AssumptionChecks,
    pub failure: Option<String>,
}

/// Least squares slope of `log y` against `log x` with a 95% band.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub half_width: f64,
    pub points: usize,
}

pub fn fit_loglog(x: &[f64], y: &[f64]) -> Result<SlopeFit> {
    let pts: Vec<(f64, f64)> =
        x.iter().zip(y).filter(|(a, b)| **a > 0.0 && **b > 0.0 && b.is_finite()).map(|(a, b)| (a.ln(), b.ln())).collect();
    let m = pts.len();
    if m < 2 {
        return Err(invalid("a slope fit needs at least two positive points"));
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m as f64;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m as f64;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(invalid("slope fit needs distinct abscissae"));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let half_width = if m > 2 {
        let sse: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
        1.96 * (sse / (m as f64 - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    Ok(SlopeFit { slope, intercept, half_width, points: m })
}

pub fn median(v: &[f64]) -> f64 {
    let mut s: Vec<f64> = v.iter().cloned().filter(|x| !x.is_nan()).collect();
    if s.is_empty() {
        return f64::NAN;
    }
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = s.len();
    if m % 2 == 1 {
        s[m / 2]
    } else {
        0.5 * (s[m / 2 - 1] + s[m / 2])
    }
}

/// Empirical quantile by linear interpolation between order statistics.
pub fn quantile(v: &[f64], p: f64) -> f64 {
    let mut s: Vec<f64> = v.iter().cloned().filter(|x| !x.is_nan()).collect();
    if s.is_empty() {
        return f64::NAN;
    }
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let t = p.clamp(0.0, 1.0) * (s.len() - 1) as f64;
    let i = t.floor() as usize;
    let j = (i + 1).min(s.len() - 1);
    s[i] + (t - i as f64) * (s[j] - s[i])
}

pub fn iqr(v: &[f64]) -> f64 {
    quantile(v, 0.75) - quantile(v, 0.25)
}

/// SplitMix64 mix of a seed and a job index.
pub fn job_seed(seed: u64, job: u64) -> u64 {
    let mut z = seed ^ job.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x632B_E59B_D9B4_E019);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Result of a sweep: per-job records plus one fit per group of medians.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub records: Vec<RateRecord>,
    pub fits: Vec<(String, SlopeFit)>,
    pub notes: Vec<String>,
}

impl RunOutput {
    pub fn fit(&self, name: &str) -> Option<SlopeFit> {
        self.fits.iter().find(|f| f.0 == name).map(|f| f.1)
    }
}

/// Median of a field over seeds, grouped by `(n, eps, k)` in first-seen order.
pub fn medians_by_point(records: &[RateRecord], field: impl Fn(&RateRecord) -> f64) -> Vec<(usize, f64, usize, f64)> {
    let mut keys: Vec<(usize, f64, usize)> = Vec::new();
    for r in records {
        if !keys.iter().any(|k| k.0 == r.n && k.1 == r.eps && k.2 == r.k) {
            keys.push((r.n, r.eps, r.k));
        }
    }
    keys.into_iter()
        .map(|(n, eps, k)| {
            let v: Vec<f64> = records.iter().filter(|r| r.n == n && r.eps == eps && r.k == k).map(&field).collect();
            (n, eps, k, median(&v))
        })
        .collect()
}

fn reference_h(cfg: &ExperimentConfig, eps_min: f64) -> Result<f64> {
    if let Some(h) = cfg.reference.h {
        return Ok(h);
    }
    let Domain::Box { lower, upper } = &cfg.domain else {
        return Err(invalid("continuum references need a box domain"));
    };
    let side = upper[0] - lower[0];
    if lower.iter().zip(upper).any(|(a, b)| ((b - a) - side).abs() > 1e-12) {
        return Err(invalid("default reference spacing needs a cube; set reference.h"));
    }
    let m = (10.0 * side / eps_min).ceil();
    Ok(side / m)
}

fn gauge_aligned_l1(g: &Graph, u: &[f64], v: &[f64]) -> Result<f64> {
    let gu = g.function(u.to_vec())?;
    let gv = g.function(v.to_vec())?;
    let mu = g.weighted_mean(&gu)?;
    let mv = g.weighted_mean(&gv)?;
    Ok(u.iter().zip(v).map(|(a, b)| ((a - mu) - (b - mv)).abs()).sum::<f64>() / u.len() as f64)
}

/// Continuum reference for the graph problem.
///
/// `L_{n,ε}` is consistent with `-(2ρ)⁻¹ div(ρ² ∇·)`, so the graph solution
/// tracks `2 Σ a_x G^x`, the solution of `-div(ρ² ∇u) = 2 Σ a_x δ_x`.
pub fn continuum_reference(cfg: &ExperimentConfig, h: f64) -> Result<GridFunction> {
    let point_sources = cfg.sources.as_ref().ok_or_else(|| invalid("sources are required"))?.source_spec()?;
    let rho = cfg.density()?;
    let grid = build_grid(&cfg.domain, h, &rho)?;
    let mut src = GridSource::atoms(&point_sources);
    src.atoms.iter_mut().for_each(|a| a.1 *= 2.0);
    Ok(solve_weighted_poisson(&grid, &src, 1e-11)?.0)
}

fn source_boundary_distance(cfg: &ExperimentConfig) -> f64 {
    cfg.sources
        .as_ref()
        .map(|s| s.anchors.iter().map(|a| cfg.domain.boundary_distance(a)).fold(f64::INFINITY, f64::min))
        .unwrap_or(0.0)
}

struct Job {
    index: usize,
    eps: f64,
    n: usize,
    k: usize,
    seed: u64,
}

fn ladder_jobs(cfg: &ExperimentConfig) -> Result<Vec<Job>> {
    let ladder = cfg.ladder.as_ref().ok_or_else(|| invalid("a ladder is required"))?.values()?;
    let rule = cfg.n_rule.as_ref().ok_or_else(|| invalid("an n_rule is required"))?;
    let mut jobs = Vec::new();
    for (i, &eps) in ladder.iter().enumerate() {
        let n = rule.n_for(i, eps)?;
        let k = cfg.k_rule.k_for(i, cfg.d, eps)?;
        for &seed in &cfg.seeds {
            jobs.push(Job { index: i, eps, n, k, seed });
        }
    }
    Ok(jobs)
}

fn failed(cfg: &ExperimentConfig, name: &str, job: &Job, checks: AssumptionChecks, e: Error, start: Instant) -> RateRecord {
    RateRecord {
        experiment: name.into(),
        d: cfg.d,
        n: job.n,
        eps: job.eps,
        k: job.k,
        seed: job.seed,
        l1_error: f64::NAN,
        moll_error: f64::NAN,
        slope: f64::NAN,
        runtime_s: start.elapsed().as_secs_f64(),
        iterations: 0,
        residual: f64::NAN,
        checks,
        failure: Some(e.to_string()),
    }
}

/// Graph vs continuum ℓ¹ errors along the ε ladder.
pub fn run_convergence(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let point_sources = cfg.sources.as_ref().ok_or_else(|| invalid("sources are required"))?.source_spec()?;
    let jobs = ladder_jobs(cfg)?;
    let eps_min = jobs.iter().map(|j| j.eps).fold(f64::INFINITY, f64::min);
    let h = reference_h(cfg, eps_min)?;
    let reference = if point_sources.coefficients().iter().all(|a| *a == 0.0) { None } else { Some(continuum_reference(cfg, h)?) };
    let rho = cfg.density()?;
    let kernel = make_kernel(cfg.kernel, cfg.d)?;
    let margin = source_boundary_distance(cfg);
    let records: Vec<RateRecord> = jobs
        .par_iter()
        .map(|job| {
            let start = Instant::now();
            let mut checks = assumption_checks(cfg.d, job.n, job.eps, job.k, margin);
            let mut run = || -> Result<RateRecord> {
                let pts = sample_points(&cfg.domain, &rho, job.n, job_seed(job.seed, job.index as u64))?;
                let g = build_graph(&pts, job.eps, &kernel)?;
                checks.connected = g.is_connected();
                let (u, report) = solver::solve_graph_poisson(&g, &point_sources, &SolveOptions::new(cfg.tol))?;
                let reference_values = match &reference {
                    Some(r) => crate::continuum::interpolate_at(r, &pts)?,
                    None => vec![0.0; job.n],
                };
                let l1_error = gauge_aligned_l1(&g, u.values(), &reference_values)?;
                let moll_error = if job.k > 0 { mollification_error(&g, &u, job.k)? } else { 0.0 };
                Ok(RateRecord {
                    experiment: "converge".into(),
                    d: cfg.d,
                    n: job.n,
                    eps: job.eps,
                    k: job.k,
                    seed: job.seed,
                    l1_error,
                    moll_error,
                    slope: f64::NAN,
                    runtime_s: start.elapsed().as_secs_f64(),
                    iterations: report.iterations,
                    residual: report.relative_residual,
                    checks,
                    failure: None,
                })
            };
            run().unwrap_or_else(|e| failed(cfg, "converge", job, checks, e, start))
        })
        .collect();
    let mut out = finish(records, "converge", |r| r.l1_error, |r| r.eps, cfg.drop_largest);
    out.notes.push(format!("reference grid spacing h = {h}"));
    Ok(out)
}

/// `‖u - H_k * u‖_{ℓ¹}`.
pub fn mollification_error(g: &Graph, u: &GraphFunction, k: usize) -> Result<f64> {
    let uk = heat::heat_convolve(g, k, u)?;
    g.pnorm(&u.sub(&uk)?, 1.0)
}

/// Fills in the slope column from medians over seeds and returns the fit.
fn finish(
    mut records: Vec<RateRecord>,
    name: &str,
    field: impl Fn(&RateRecord) -> f64 + Copy,
    abscissa: impl Fn(&RateRecord) -> f64 + Copy,
    drop_largest: usize,
) -> RunOutput {
    let mut xs: Vec<f64> = Vec::new();
    let mut groups: Vec<Vec<f64>> = Vec::new();
    for r in &records {
        let x = abscissa(r);
        match xs.iter().position(|v| *v == x) {
            Some(i) => groups[i].push(field(r)),
            None => {
                xs.push(x);
                groups.push(vec![field(r)]);
            }
        }
    }
    let ys: Vec<f64> = groups.iter().map(|g| median(g)).collect();
    let mut fits = Vec::new();
    let mut notes = Vec::new();
    for ((x, y), g) in xs.iter().zip(&ys).zip(&groups) {
        notes.push(format!("x={x} median={y} iqr={} runs={}", iqr(g), g.len()));
    }
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|a, b| xs[*b].partial_cmp(&xs[*a]).unwrap());
    let kept: Vec<usize> = order.into_iter().skip(drop_largest).collect();
    let fx: Vec<f64> = kept.iter().map(|&i| xs[i]).collect();
    let fy: Vec<f64> = kept.iter().map(|&i| ys[i]).collect();
    match fit_loglog(&fx, &fy) {
        Ok(fit) => {
            records.iter_mut().for_each(|r| r.slope = fit.slope);
            fits.push((name.to_string(), fit));
        }
        Err(e) => notes.push(format!("no slope fit: {e}")),
    }
    RunOutput { records, fits, notes }
}

/// `‖u - H_k * u‖_{ℓ¹}` on one graph per seed across a k ladder.
pub fn run_mollification_rate(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let m = cfg.mollify.as_ref().ok_or_else(|| invalid("a [mollify] section is required"))?;
    if m.k.is_empty() {
        return Err(invalid("mollify.k must not be empty"));
    }
    for &k in &m.k {
        if m.eps * (k as f64).sqrt() > 1.0 {
            return Err(Error::Assumption(format!("eps_k > 1 for k = {k}")));
        }
    }
    let point_sources = cfg.sources.as_ref().ok_or_else(|| invalid("sources are required"))?.source_spec()?;
    let rho = cfg.density()?;
    let kernel = make_kernel(cfg.kernel, cfg.d)?;
    let margin = source_boundary_distance(cfg);
    let k_max = *m.k.iter().max().unwrap();
    let per_seed: Vec<Vec<RateRecord>> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let start = Instant::now();
            let run = || -> Result<Vec<RateRecord>> {
                let pts = sample_points(&cfg.domain, &rho, m.n, job_seed(seed, 0))?;
                let g = build_graph(&pts, m.eps, &kernel)?;
                let (u, report) = solver::solve_graph_poisson(&g, &point_sources, &SolveOptions::new(cfg.tol))?;
                let mut out = Vec::new();
                heat::heat_convolve_each(&g, k_max, &u, |j, v| {
                    if m.k.contains(&j) {
                        let diff: f64 = u.values().iter().zip(v).map(|(a, b)| (a - b).abs()).sum::<f64>() / m.n as f64;
                        let mut checks = assumption_checks(cfg.d, m.n, m.eps, j, margin);
                        checks.connected = g.is_connected();
                        out.push(RateRecord {
                            experiment: "mollify".into(),
                            d: cfg.d,
                            n: m.n,
                            eps: m.eps,
                            k: j,
                            seed,
                            l1_error: f64::NAN,
                            moll_error: diff,
                            slope: f64::NAN,
                            runtime_s: start.elapsed().as_secs_f64(),
                            iterations: report.iterations,
                            residual: report.relative_residual,
                            checks,
                            failure: None,
                        });
                    }
                    Ok(())
                })?;
                Ok(out)
            };
            run().unwrap_or_else(|e| {
                let job = Job { index: 0, eps: m.eps, n: m.n, k: 0, seed };
                vec![failed(cfg, "mollify", &job, AssumptionChecks::default(), e, start)]
            })
        })
        .collect();
    let mut records: Vec<RateRecord> = per_seed.into_iter().flatten().collect();
    records.sort_by_key(|r| (m.k.iter().position(|k| *k == r.k).unwrap_or(usize::MAX), r.seed));
    let eps = m.eps;
    let out = finish(records, "mollify", |r| r.moll_error, move |r| eps * (r.k as f64).sqrt(), cfg.drop_largest);
    Ok(out)
}

/// `‖u - u_r‖_{L¹}` between the atomic continuum solution and bump sources of radius `r`.
pub fn run_mollified_continuum(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let point_sources = cfg.sources.as_ref().ok_or_else(|| invalid("sources are required"))?.source_spec()?;
    let radii = &cfg.reference.radii;
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0)) {
        return Err(invalid("reference.radii must be a non-empty list of positive radii"));
    }
    let h = cfg.reference.h.ok_or_else(|| invalid("reference.h is required"))?;
    let start = Instant::now();
    let grid = build_grid(&cfg.domain, h, &cfg.density()?)?;
    let gaps = crate::continuum::mollification_gaps(&grid, &point_sources, radii, cfg.tol)?;
    let runtime_s = start.elapsed().as_secs_f64();
    let margin = source_boundary_distance(cfg);
    let records = radii
        .iter()
        .zip(gaps)
        .map(|(&r, gap)| RateRecord {
            experiment: "continuum".into(),
            d: cfg.d,
            n: grid.len(),
            eps: r,
            k: 0,
            seed: 0,
            l1_error: gap,
            moll_error: f64::NAN,
            slope: f64::NAN,
            runtime_s,
            iterations: 0,
            residual: 0.0,
            checks: AssumptionChecks { source_margin: margin > r, ..Default::default() },
            failure: None,
        })
        .collect();
    let mut out = finish(records, "continuum", |r| r.l1_error, |r| r.eps, cfg.drop_largest);
    out.notes.push(format!("grid spacing h = {h}"));
    Ok(out)
}

/// One record of the heat kernel comparison.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HeatRecord {
    pub n: usize,
    pub seed: u64,
    /// `‖H_k^x - ρ̂_ε(x)⁻¹ M_ε^{k-1} η_ε^x‖_{ℓ¹}`.
    pub averaged: f64,
    /// `‖H_k^x - ρ(x)⁻¹ ψ_{k,ε}(· - x)‖_{ℓ¹}`.
    pub psi: f64,
    pub mass: f64,
    pub runtime_s: f64,
}

/// Distance from the centre that the heat kernel mass must be able to reach.
pub fn center_margin(margin: &CenterMargin, d: usize, k: usize, eps: f64) -> Result<f64> {
    Ok(match margin {
        CenterMargin::Rk => heat::scale_constants(d, k, eps)?.r_k,
        CenterMargin::Tail => {
            let eps_k = eps * (k as f64).sqrt();
            let d = d as f64;
            eps_k * (2.0 * d * (2.0 * d / 1e-6f64).ln()).sqrt()
        }
    })
}

/// Graph heat kernels against `M_ε` iterates and `ψ_{k,ε}` as n grows.
pub fn run_heat_asymptotics(cfg: &ExperimentConfig) -> Result<(Vec<HeatRecord>, Vec<RateRecord>)> {
    cfg.validate()?;
    let hc = cfg.heat.as_ref().ok_or_else(|| invalid("a [heat] section is required"))?;
    if hc.k == 0 {
        return Err(invalid("heat.k must be at least 1"));
    }
    let x0 = &hc.center;
    let reach = center_margin(&hc.margin, cfg.d, hc.k, hc.eps)?;
    if cfg.domain.boundary_distance(x0) < reach {
        return Err(Error::Assumption(format!(
            "centre is within {reach:.4} of the boundary; B(x, R) must lie inside the domain"
        )));
    }
    let rho = cfg.density()?;
    let kernel = make_kernel(cfg.kernel, cfg.d)?;
    let grid_h = match hc.grid_h {
        Some(h) => h,
        None => {
            let Domain::Box { lower, upper } = &cfg.domain else {
                return Err(invalid("the averaging grid needs a box domain"));
            };
            let side = upper[0] - lower[0];
            side / (16.0 * side / hc.eps).ceil()
        }
    };
    let averaged = heat::repeated_average(&rho, &cfg.domain, &kernel, hc.eps, x0, hc.k - 1, grid_h)?;
    let rho_hat_x = heat::rho_hat(&rho, &cfg.domain, &kernel, hc.eps, x0)?;
    let psi = heat::psi_table(&kernel, hc.k, hc.eps)?;
    let rho_x = rho.eval(x0);
    let mut jobs = Vec::new();
    for (i, &n) in hc.n.iter().enumerate() {
        for &seed in &cfg.seeds {
            jobs.push((i, n, seed));
        }
    }
    let results: Vec<Result<HeatRecord>> = jobs
        .par_iter()
        .map(|&(i, n, seed)| {
            let start = Instant::now();
            let pts = sample_points(&cfg.domain, &rho, n, job_seed(seed, i as u64))?;
            let g = build_graph(&pts, hc.eps, &kernel)?;
            let col = heat::heat_column(&g, HeatCenter::Point(x0.clone()), hc.k)?;
            let h = col.values.values();
            let mut a = 0.0;
            let mut b = 0.0;
            for (p, v) in pts.iter().zip(h) {
                a += (v - averaged.eval(p) / rho_hat_x).abs();
                b += (v - psi.eval(crate::geometry::dist(p, x0)) / rho_x).abs();
            }
            let mass = g.inner(&col.values, &g.constant(1.0))?;
            Ok(HeatRecord { n, seed, averaged: a / n as f64, psi: b / n as f64, mass, runtime_s: start.elapsed().as_secs_f64() })
        })
        .collect();
    let records: Vec<HeatRecord> = results.into_iter().collect::<Result<_>>()?;
    let rate: Vec<RateRecord> = records
        .iter()
        .map(|r| RateRecord {
            experiment: "heat-asymptotics".into(),
            d: cfg.d,
            n: r.n,
            eps: hc.eps,
            k: hc.k,
            seed: r.seed,
            l1_error: r.psi,
            moll_error: r.averaged,
            slope: f64::NAN,
            runtime_s: r.runtime_s,
            iterations: 0,
            residual: (r.mass - 1.0).abs(),
            checks: AssumptionChecks::default(),
            failure: None,
        })
        .collect();
    Ok((records, rate))
}

/// Fields and summary statistics of the two-label comparison.
#[derive(Clone, Debug)]
pub struct DemoOutput {
    pub points: crate::geometry::PointSet,
    pub labeled: Vec<usize>,
    pub laplace: Vec<f64>,
    pub poisson: Vec<f64>,
    pub pwll: Vec<f64>,
    pub summary: DemoSummary,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DemoSummary {
    /// Fraction of unlabeled Laplace values within `0.05·gap` of their median.
    pub spike: f64,
    /// Interquartile range of the unlabeled Poisson values.
    ///
    /// The sources carry the label values as coefficients and `L_{n,ε}` is the
    /// consistently scaled Laplacian, so these values live in label units.
    pub poisson_iqr: f64,
    /// Width `2 · 0.05 · gap` of the band used by the spike statistic.
    pub laplace_band: f64,
    /// Interquartile range of the unlabeled Laplace values.
    pub laplace_iqr: f64,
    pub poisson_mean: f64,
}

/// Laplace, Poisson and properly weighted Laplace learning with labels `+1` and `-1`.
pub fn demo_two_point(cfg: &ExperimentConfig, seed: u64) -> Result<DemoOutput> {
    cfg.validate()?;
    let dc = cfg.demo.as_ref().ok_or_else(|| invalid("a [demo] section is required"))?;
    if dc.labels.len() != 2 {
        return Err(invalid("the demo uses exactly two labels"));
    }
    let rho = cfg.density()?;
    let kernel = make_kernel(cfg.kernel, cfg.d)?;
    let pts = sample_points(&cfg.domain, &rho, dc.n, seed)?;
    let g = build_graph(&pts, dc.eps, &kernel)?;
    demo_on_graph(&g, &dc.labels, cfg.tol)
}

pub fn demo_on_graph(g: &Graph, labels: &[Vec<f64>], tol: f64) -> Result<DemoOutput> {
    let points = g.points().ok_or_else(|| invalid("graph carries no coordinates"))?.clone();
    let z1 = closest_point(&labels[0], g)?;
    let z2 = closest_point(&labels[1], g)?;
    if z1 == z2 {
        return Err(invalid("both labels map to the same node"));
    }
    let pairs = [(z1, 1.0), (z2, -1.0)];
    let laplace = solver::solve_laplace_learning(g, &pairs, tol.max(1e-12))?;
    let (poisson, _) = solver::solve_poisson_nodes(g, &pairs, &SolveOptions::new(tol))?;
    let pwll = solver::solve_pwll(g, &pairs, tol.max(1e-12))?;
    let unlabeled = |v: &[f64]| -> Vec<f64> { v.iter().enumerate().filter(|(i, _)| *i != z1 && *i != z2).map(|(_, x)| *x).collect() };
    let lap = unlabeled(laplace.values());
    let gap = 2.0;
    let med = median(&lap);
    let band = 0.05 * gap;
    let spike = lap.iter().filter(|v| (*v - med).abs() <= band).count() as f64 / lap.len() as f64;
    let poisson_iqr = iqr(&unlabeled(poisson.values()));
    let summary = DemoSummary {
        spike,
        poisson_iqr,
        laplace_band: 2.0 * band,
        laplace_iqr: iqr(&lap),
        poisson_mean: g.weighted_mean(&poisson)?,
    };
    Ok(DemoOutput {
        points,
        labeled: vec![z1, z2],
        laplace: laplace.into_values(),
        poisson: poisson.into_values(),
        pwll: pwll.into_values(),
        summary,
    })
}

/// Writes `results.csv` with the fixed column order.
pub fn write_results(dir: &Path, records: &[RateRecord], record_runtime: bool) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("results.csv"))?;
    w.write_record(["experiment", "d", "n", "eps", "k", "seed", "l1_error", "moll_error", "slope", "runtime_s"])?;
    for r in records {
        let runtime = if record_runtime { r.runtime_s } else { 0.0 };
        w.write_record([
            r.experiment.clone(),
            r.d.to_string(),
            r.n.to_string(),
            r.eps.to_string(),
            r.k.to_string(),
            r.seed.to_string(),
            r.l1_error.to_string(),
            r.moll_error.to_string(),
            r.slope.to_string(),
            runtime.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `meta.txt`: the resolved configuration followed by per-point checks and fits.
pub fn write_meta(dir: &Path, cfg: &ExperimentConfig, out: &RunOutput) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut s = String::new();
    s.push_str("# resolved configuration\n");
    s.push_str(&cfg.to_toml());
    s.push_str("\n# assumption checks per job\n");
    for r in &out.records {
        let _ = writeln!(
            s,
            "n={} eps={} k={} seed={} n_eps={} eps_k={} source_margin={} connected={} failure={}",
            r.n,
            r.eps,
            r.k,
            r.seed,
            r.checks.n_eps,
            r.checks.eps_k,
            r.checks.source_margin,
            r.checks.connected,
            r.failure.as_deref().unwrap_or("none")
        );
    }
    s.push_str("\n# fits\n");
    for (name, f) in &out.fits {
        let _ = writeln!(s, "{name}: slope={} ±{} intercept={} points={}", f.slope, f.half_width, f.intercept, f.points);
    }
    for n in &out.notes {
        let _ = writeln!(s, "note: {n}");
    }
    std::fs::write(dir.join("meta.txt"), s)?;
    Ok(())
}

/// Writes per-job solver statistics and assumption booleans.
pub fn write_details(dir: &Path, records: &[RateRecord]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("details.csv"))?;
    w.write_record(["experiment", "n", "eps", "k", "seed", "iterations", "residual", "n_eps", "eps_k", "source_margin", "connected", "failure"])?;
    for r in records {
        w.write_record([
            r.experiment.clone(),
            r.n.to_string(),
            r.eps.to_string(),
            r.k.to_string(),
            r.seed.to_string(),
            r.iterations.to_string(),
            r.residual.to_string(),
            r.checks.n_eps.to_string(),
            r.checks.eps_k.to_string(),
            r.checks.source_margin.to_string(),
            r.checks.connected.to_string(),
            r.failure.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the three demo fields, one row per node.
pub fn write_demo(dir: &Path, demo: &DemoOutput) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("fields.csv"))?;
    let d = demo.points.dim();
    let mut header: Vec<String> = vec!["node".into()];
    header.extend((0..d).map(|a| format!("x{a}")));
    header.extend(["labeled", "laplace", "poisson", "pwll"].iter().map(|s| s.to_string()));
    w.write_record(&header)?;
    for (i, p) in demo.points.iter().enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(p.iter().map(|v| v.to_string()));
        row.push((demo.labeled.contains(&i) as u8).to_string());
        row.push(demo.laplace[i].to_string());
        row.push(demo.poisson[i].to_string());
        row.push(demo.pwll[i].to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    let s = &demo.summary;
    std::fs::write(
        dir.join("summary.txt"),
        format!(
            "spike={}\npoisson_iqr={}\nlaplace_band={}\nlaplace_iqr={}\npoisson_mean={}\n",
            s.spike, s.poisson_iqr, s.laplace_band, s.laplace_iqr, s.poisson_mean
        ),
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_a_power_law() {
        let x = [0.2, 0.1, 0.05, 0.025];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(1.7)).collect();
        let f = fit_loglog(&x, &y).unwrap();
        assert!((f.slope - 1.7).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn median_and_iqr() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!((iqr(&[1.0, 2.0, 3.0, 4.0, 5.0]) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn probability_rule_is_the_smallest_admissible_n() {
        let rule = NRule::Probability { c: 0.5, q: 0.25, n_min: None, n_max: None };
        let n = rule.n_for(0, 0.2).unwrap();
        let target = (0.2f64 / 0.5).powf(4.0);
        assert!((n as f64).ln() / n as f64 <= target);
        assert!(((n - 1) as f64).ln() / (n - 1) as f64 > target);
    }

    #[test]
    fn k_rules() {
        assert_eq!(KRule::Nonconstant.k_for(0, 2, 0.01).unwrap(), 1000);
        assert_eq!(KRule::Constant.k_for(0, 1, 0.05).unwrap(), 121);
        assert_eq!(KRule::None.k_for(0, 2, 0.1).unwrap(), 0);
    }

    #[test]
    fn overrides_replace_nested_keys() {
        let text = r#"
            d = 1
            domain = { kind = "box", lower = [0.0], upper = [1.0] }
            [ladder]
            eps = [0.2, 0.1]
            [n_rule]
            kind = "fixed"
            n = 100
        "#;
        let cfg = ExperimentConfig::from_toml_with_overrides(
            text,
            &[("n_rule.n".into(), "250".into()), ("kernel".into(), "cone".into())],
        )
        .unwrap();
        assert_eq!(cfg.n_rule, Some(NRule::Fixed { n: 250 }));
        assert_eq!(cfg.kernel, KernelKind::Cone);
        assert!(ExperimentConfig::from_toml_with_overrides(text, &[("ladder.eps".into(), "[0.1, 0.2]".into())]).is_err());
    }

    #[test]
    fn job_seeds_differ() {
        assert_ne!(job_seed(1, 0), job_seed(1, 1));
        assert_ne!(job_seed(1, 0), job_seed(2, 0));
        assert_eq!(job_seed(7, 3), job_seed(7, 3));
    }
}
