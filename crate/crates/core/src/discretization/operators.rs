use super::{BoundaryField, Grid, ScalarField};
use crate::error::{Error, Result};

/// Robin coefficient `α` sampled on Γ, checked against `0 < α_m ≤ α ≤ α_M`.
#[derive(Debug, Clone, PartialEq)]
pub struct RobinOperator {
    alpha: BoundaryField,
    alpha_min: f64,
    alpha_max: f64,
    // b_j α_j: boundary quadrature weight times coefficient
    weighted: Vec<f64>,
}

impl RobinOperator {
    pub fn new(grid: &Grid, alpha: BoundaryField, alpha_min: f64, alpha_max: f64) -> Result<Self> {
        alpha.check(grid)?;
        if !(alpha_min > 0.0) || !(alpha_min <= alpha_max) {
            return Err(Error::InvalidParameter(format!(
                "alpha bounds must satisfy 0 < alpha_m <= alpha_M, got [{alpha_min}, {alpha_max}]"
            )));
        }
        if let Some(bad) = alpha.iter().find(|&&a| !(alpha_min..=alpha_max).contains(&a)) {
            return Err(Error::InvalidParameter(format!(
                "alpha sample {bad} outside [{alpha_min}, {alpha_max}]"
            )));
        }
        let weighted = alpha
            .iter()
            .zip(grid.boundary_weight())
            .map(|(a, b)| a * b)
            .collect();
        Ok(Self {
            alpha,
            alpha_min,
            alpha_max,
            weighted,
        })
    }

    pub fn constant(grid: &Grid, alpha: f64) -> Result<Self> {
        Self::new(grid, BoundaryField::constant(grid, alpha), alpha, alpha)
    }

    pub fn alpha(&self) -> &BoundaryField {
        &self.alpha
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.alpha_min, self.alpha_max)
    }

    /// `b_j α_j` per boundary node.
    pub fn weighted_alpha(&self) -> &[f64] {
        &self.weighted
    }

    pub fn check(&self, grid: &Grid) -> Result<()> {
        self.alpha.check(grid)
    }
}

/// Centered Laplacian with Robin data: ghost values outside Γ are eliminated
/// through `-∂_ν w = α (w - g)`.
///
/// In weighted form this is `M Δw = -K w - B α (w - g)`, with `M` the nodal
/// trapezoid weights, `K` the stiffness matrix and `B` the boundary weights.
pub fn apply_laplacian_robin(
    grid: &Grid,
    op: &RobinOperator,
    w: &ScalarField,
    g: &BoundaryField,
) -> Result<ScalarField> {
    w.check(grid)?;
    g.check(grid)?;
    op.check(grid)?;
    let mut out = vec![0.0; grid.node_count()];
    grid.add_stiffness(w, &mut out);
    for (slot, &node) in grid.boundary_index().iter().enumerate() {
        out[node] += op.weighted[slot] * (w[node] - g[slot]);
    }
    Ok(ScalarField(
        out.iter().zip(grid.mass()).map(|(v, m)| -v / m).collect(),
    ))
}

/// Centered Laplacian with reflecting ghost nodes (zero normal derivative).
pub fn apply_laplacian_neumann(grid: &Grid, w: &ScalarField) -> Result<ScalarField> {
    w.check(grid)?;
    let mut out = vec![0.0; grid.node_count()];
    grid.add_stiffness(w, &mut out);
    Ok(ScalarField(
        out.iter().zip(grid.mass()).map(|(v, m)| -v / m).collect(),
    ))
}

/// Trapezoid approximation of `∫_Ω w dx`.
pub fn integrate_omega(grid: &Grid, w: &ScalarField) -> Result<f64> {
    w.check(grid)?;
    Ok(dot(grid.mass(), w))
}

/// Trapezoid approximation of `∫_Γ b ds` (the two-endpoint sum in 1D).
pub fn integrate_gamma(grid: &Grid, b: &BoundaryField) -> Result<f64> {
    b.check(grid)?;
    Ok(dot(grid.boundary_weight(), b))
}

/// Discrete `∫_Ω |∇w|² dx + ∫_Γ α w² ds`.
pub fn norm_equivalent(grid: &Grid, alpha: &BoundaryField, w: &ScalarField) -> Result<f64> {
    w.check(grid)?;
    alpha.check(grid)?;
    let mut kw = vec![0.0; grid.node_count()];
    grid.add_stiffness(w, &mut kw);
    let grad = dot(&kw, w);
    let bdry: f64 = grid
        .boundary_index()
        .iter()
        .zip(grid.boundary_weight())
        .zip(alpha.iter())
        .map(|((&n, b), a)| b * a * w[n] * w[n])
        .sum();
    Ok(grad + bdry)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
