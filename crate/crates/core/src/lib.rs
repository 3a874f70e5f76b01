//! Numerical core for optimal control of the Penrose-Fife phase-field system
//! with a sharp-interface constraint.
//!
//! * [`convex`]: the interface potential `j(r) = |r − θ_c|`, its conjugate,
//!   Moreau-Yosida envelope and the heat-flux law `β`.
//! * [`discretization`]: grids, fields, Robin/Neumann Laplacians, quadrature.
//! * [`state`]: semi-implicit forward solver.
//! * [`adjoint`]: tangent and adjoint solvers (exact discrete transposes).
//! * [`optimizer`]: costs, projections, projected gradient, continuation and
//!   bang-bang verification.
//! * [`cli`]: configuration, artifact output and the `pfsc` subcommands.

pub mod adjoint;
pub mod benchmark;
pub mod cli;
pub mod convex;
pub mod discretization;
pub mod error;
pub mod linalg;
pub mod optimizer;
pub mod state;

pub use error::{Error, Result};
