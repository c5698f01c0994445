use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use graph_poisson::continuum::{build_grid, solve_weighted_poisson, GridSource};
use graph_poisson::experiments::{
    demo_two_point, run_convergence, run_heat_asymptotics, run_mollification_rate, run_mollified_continuum,
    write_demo, write_details, write_meta, write_results, ExperimentConfig, RunOutput,
};
use graph_poisson::geometry::{build_graph, make_kernel, sample_points, DensityKind};
use graph_poisson::heat::{heat_column, psi_table, HeatCenter};
use graph_poisson::solver::{solve_graph_poisson, SolveOptions};
use graph_poisson::{io, Density, Domain, KernelKind};

#[derive(Parser)]
#[command(name = "graph-poisson", version, about = "Poisson learning on random geometric graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample points and build the ε-graph.
    Graph {
        #[command(flatten)]
        sample: SampleArgs,
        #[arg(long, value_enum, default_value_t = Kernel::Indicator)]
        kernel: Kernel,
        #[arg(long)]
        eps: f64,
        /// Edge list path; `.meta` and `.points.csv` sidecars are written next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample points only.
    Points {
        #[command(flatten)]
        sample: SampleArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve the graph Poisson problem with point sources.
    Solve {
        #[arg(long)]
        graph: PathBuf,
        /// CSV `x0,...,x{d-1},a`.
        #[arg(long)]
        sources: PathBuf,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Graph heat kernel column `H_k^x`.
    Heat {
        #[arg(long)]
        graph: PathBuf,
        /// Node index, or a point such as `0.5,0.5`.
        #[arg(long)]
        center: String,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Radial table of the k-fold self convolution of η_ε.
    Psi {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long, value_enum, default_value_t = Kernel::Indicator)]
        kernel: Kernel,
        #[arg(long)]
        out: PathBuf,
    },
    /// Finite volume solution of `-div(ρ² ∇u) = Σ a δ_x` on the unit box.
    Continuum {
        #[arg(long, value_enum, default_value_t = DomainArg::Box)]
        domain: DomainArg,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long)]
        h: f64,
        #[command(flatten)]
        density: DensityArgs,
        #[arg(long)]
        sources: PathBuf,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Graph vs continuum ℓ¹ errors along an ε ladder.
    Converge(ExperimentArgs),
    /// `‖u - H_k * u‖` across a k ladder.
    Mollify(ExperimentArgs),
    /// Graph heat kernels against their continuum surrogates.
    HeatAsymptotics(ExperimentArgs),
    /// Laplace, Poisson and reweighted Laplace learning with two labels.
    Demo(ExperimentArgs),
    /// Atomic vs mollified continuum sources across bump radii.
    ContinuumRate(ExperimentArgs),
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, value_enum, default_value_t = DomainArg::Box)]
    domain: DomainArg,
    #[command(flatten)]
    density: DensityArgs,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct DensityArgs {
    #[arg(long, value_enum, default_value_t = DensityArg::Constant)]
    density: DensityArg,
    #[arg(long, default_value_t = 1.0)]
    bump_amplitude: f64,
    #[arg(long, default_value_t = 0.2)]
    bump_width: f64,
}

#[derive(Args)]
struct ExperimentArgs {
    /// TOML configuration file.
    config: PathBuf,
    /// Overrides as `--key value` pairs, with dotted keys for nested fields.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
    overrides: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kernel {
    Indicator,
    Cone,
    Bump,
}

#[derive(Clone, Copy, ValueEnum)]
enum DomainArg {
    Box,
    Disk,
}

#[derive(Clone, Copy, ValueEnum)]
enum DensityArg {
    Constant,
    Bump,
}

impl From<Kernel> for KernelKind {
    fn from(k: Kernel) -> Self {
        match k {
            Kernel::Indicator => KernelKind::Indicator,
            Kernel::Cone => KernelKind::Cone,
            Kernel::Bump => KernelKind::Bump,
        }
    }
}

fn domain(arg: DomainArg, d: usize) -> Result<Domain> {
    match arg {
        DomainArg::Box => Ok(Domain::unit_box(d)),
        DomainArg::Disk if d == 2 => Ok(Domain::unit_disk()),
        DomainArg::Disk => bail!("the disk domain needs d = 2"),
    }
}

fn density(args: &DensityArgs, dom: &Domain) -> Result<Density> {
    let kind = match args.density {
        DensityArg::Constant => DensityKind::Constant,
        DensityArg::Bump => DensityKind::Bump { center: None, amplitude: args.bump_amplitude, width: args.bump_width },
    };
    Ok(Density::new(kind, dom)?)
}

fn parse_overrides(raw: &[String]) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut it = raw.iter();
    while let Some(flag) = it.next() {
        let Some(key) = flag.strip_prefix("--") else {
            bail!("expected `--key value`, found `{flag}`");
        };
        match key.split_once('=') {
            Some((k, v)) => out.push((k.to_string(), v.to_string())),
            None => {
                let value = it.next().with_context(|| format!("missing value for --{key}"))?;
                out.push((key.to_string(), value.clone()));
            }
        }
    }
    Ok(out)
}

fn load(args: &ExperimentArgs) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(&args.config).with_context(|| format!("reading {}", args.config.display()))?;
    Ok(ExperimentConfig::from_toml_with_overrides(&text, &parse_overrides(&args.overrides)?)?)
}

fn finish(cfg: &ExperimentConfig, out: &RunOutput) -> Result<()> {
    let dir = Path::new(&cfg.output.dir);
    write_results(dir, &out.records, cfg.output.record_runtime)?;
    write_details(dir, &out.records)?;
    write_meta(dir, cfg, out)?;
    for (name, fit) in &out.fits {
        println!("{name}: slope {:.4} ± {:.4} over {} points", fit.slope, fit.half_width, fit.points);
    }
    for note in &out.notes {
        println!("{note}");
    }
    let failed = out.records.iter().filter(|r| r.failure.is_some()).count();
    if failed > 0 {
        eprintln!("{failed} runs failed; see details.csv");
    }
    println!("wrote {}", dir.display());
    Ok(())
}

fn parse_center(s: &str) -> Result<HeatCenter> {
    if let Ok(i) = s.parse::<usize>() {
        return Ok(HeatCenter::Node(i));
    }
    let x: Vec<f64> = s.split(',').map(|v| v.trim().parse::<f64>()).collect::<std::result::Result<_, _>>().context("bad --center")?;
    Ok(HeatCenter::Point(x))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Graph { sample, kernel, eps, out } => {
            let dom = domain(sample.domain, sample.d)?;
            let rho = density(&sample.density, &dom)?;
            let pts = sample_points(&dom, &rho, sample.n, sample.seed)?;
            let g = build_graph(&pts, eps, &make_kernel(kernel.into(), sample.d)?)?;
            io::write_graph(&out, &g, Some(sample.seed))?;
            println!("n={} edges={} connected={}", g.len(), g.edge_count(), g.is_connected());
        }
        Command::Points { sample, out } => {
            let dom = domain(sample.domain, sample.d)?;
            let rho = density(&sample.density, &dom)?;
            io::write_points(&out, &sample_points(&dom, &rho, sample.n, sample.seed)?)?;
        }
        Command::Solve { graph, sources, tol, out } => {
            let (g, _) = io::read_graph(&graph)?;
            let s = io::read_sources(&sources)?;
            let (u, rep) = solve_graph_poisson(&g, &s, &SolveOptions::new(tol))?;
            io::write_node_values(&out, u.values())?;
            println!("iterations={} relative_residual={:e}", rep.iterations, rep.relative_residual);
        }
        Command::Heat { graph, center, k, out } => {
            let (g, _) = io::read_graph(&graph)?;
            let col = heat_column(&g, parse_center(&center)?, k)?;
            io::write_node_values(&out, col.values.values())?;
        }
        Command::Psi { d, k, eps, kernel, out } => {
            let t = psi_table(&make_kernel(kernel.into(), d)?, k, eps)?;
            let r: Vec<f64> = (0..t.values.len()).map(|i| i as f64 * t.spacing).collect();
            io::write_radial(&out, &r, &t.values)?;
            println!("mass={:.6}", t.mass());
        }
        Command::Continuum { domain: arg, d, h, density: dens, sources, tol, out } => {
            let dom = domain(arg, d)?;
            let rho = density(&dens, &dom)?;
            let grid = build_grid(&dom, h, &rho)?;
            let s = io::read_sources(&sources)?;
            s.check_inside(&dom)?;
            let (u, rep) = solve_weighted_poisson(&grid, &GridSource::atoms(&s), tol)?;
            io::write_grid(&out, &u)?;
            println!("cells={} iterations={}", grid.len(), rep.iterations);
        }
        Command::Converge(args) => {
            let cfg = load(&args)?;
            finish(&cfg, &run_convergence(&cfg)?)?;
        }
        Command::Mollify(args) => {
            let cfg = load(&args)?;
            finish(&cfg, &run_mollification_rate(&cfg)?)?;
        }
        Command::ContinuumRate(args) => {
            let cfg = load(&args)?;
            finish(&cfg, &run_mollified_continuum(&cfg)?)?;
        }
        Command::HeatAsymptotics(args) => {
            let cfg = load(&args)?;
            let (heat, records) = run_heat_asymptotics(&cfg)?;
            for r in &heat {
                println!("n={} seed={} averaged={:.5} psi={:.5} mass={:.3e}", r.n, r.seed, r.averaged, r.psi, r.mass);
            }
            finish(&cfg, &RunOutput { records, fits: Vec::new(), notes: Vec::new() })?;
        }
        Command::Demo(args) => {
            let cfg = load(&args)?;
            let seed = cfg.seeds[0];
            let demo = demo_two_point(&cfg, seed)?;
            let dir = Path::new(&cfg.output.dir);
            write_demo(dir, &demo)?;
            let s = demo.summary;
            let notes = vec![format!(
                "seed={seed} spike={} poisson_iqr={} laplace_band={} laplace_iqr={}",
                s.spike, s.poisson_iqr, s.laplace_band, s.laplace_iqr
            )];
            write_meta(dir, &cfg, &RunOutput { records: Vec::new(), fits: Vec::new(), notes })?;
            println!("spike={:.4} poisson_iqr={:.4} laplace_band={:.4}", s.spike, s.poisson_iqr, s.laplace_band);
            println!("wrote {}", dir.display());
        }
    }
    Ok(())
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
