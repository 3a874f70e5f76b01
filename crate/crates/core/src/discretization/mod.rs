//! Tensor-product grids on an interval or rectangle, nodal fields, the Robin
//! and Neumann Laplacians, and trapezoid quadrature on Ω and Γ.

mod field;
mod grid;
mod operators;

pub use field::{BoundaryField, ScalarField};
pub(crate) use field::check_series;
pub use grid::{Grid, GridSpec};
pub use operators::{
    apply_laplacian_neumann, apply_laplacian_robin, integrate_gamma, integrate_omega,
    norm_equivalent, RobinOperator,
};
pub(crate) use operators::dot;
