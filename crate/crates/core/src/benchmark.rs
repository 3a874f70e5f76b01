//! The standard 1D test problem.
//!
//! Unit interval, `θ_c = 1`, `α = 1`, `T = 1`, `λ₁ = λ₂ = 1`. The bar starts
//! solid and uniformly at `θ₀ = 0.93`, `φ₀ = −1`; the target
//! `θ_f = θ_c + 0.1·sign(x − 1/2)` asks to cool the left half and heat the
//! right one. The boxes `|u| ≤ 0.01`, `v ∈ [−0.165, −0.125]` keep the target
//! out of reach and keep `θ` below `θ_c − 0.05`, so optimal controls saturate
//! and `j_σ` differs from `j` by a constant along the optimal trajectory for
//! `σ ≤ 0.05`.

use crate::discretization::{Grid, RobinOperator, ScalarField};
use crate::error::Result;
use crate::state::{ControlSet, InitialData, ModelParams, Problem};

pub const EPS: f64 = 0.1;
pub const SIGMA: f64 = 0.05;

pub fn standard_1d(nodes: usize, nt: usize) -> Result<Problem> {
    let grid = Grid::uniform_1d(1.0, nodes)?;
    let robin = RobinOperator::constant(&grid, 1.0)?;
    let target = ScalarField::from_fn(&grid, |x, _| 1.0 + 0.1 * sign(x - 0.5));
    let params = ModelParams {
        theta_c: 1.0,
        lambda1: 1.0,
        lambda2: 1.0,
        theta_f: vec![target; nt + 1],
        u_bounds: (-0.01, 0.01),
        v_bounds: (-0.165, -0.125),
        t_final: 1.0,
        nt,
    };
    let init = InitialData::new(&grid, ScalarField::constant(&grid, 0.93), ScalarField::constant(&grid, -1.0))?;
    Problem::new(grid, robin, params, init)
}

/// Box midpoints for `u`, `v` and `η ≡ 0`.
pub fn initial_controls(problem: &Problem) -> ControlSet {
    let p = &problem.params;
    let mid = |(a, b): (f64, f64)| 0.5 * (a + b);
    ControlSet::constant(&problem.grid, p.nt, mid(p.u_bounds), mid(p.v_bounds), 0.0)
}

// sign with sign(0) = 0
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}
