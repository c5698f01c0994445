//! Graph Poisson equations on random geometric graphs.
//!
//! The crate builds ε-neighbourhood graphs on samples of a density, solves
//! graph Poisson problems with point sources, runs the random walk heat
//! semigroup on those graphs and compares graph solutions against finite
//! difference solutions of the weighted continuum problem
//! `-div(ρ² ∇u) = Σ a_x δ_x` with Neumann boundary conditions.

pub mod continuum;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod graph;
pub mod heat;
pub mod io;
pub mod solver;

mod cg;
mod clock;
mod quad;

pub use error::{Error, Result};
pub use geometry::{Density, Domain, KernelKind, KernelProfile, PointSet};
pub use graph::{Graph, GraphFunction, LaplacianKind};
