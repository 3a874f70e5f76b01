#![allow(dead_code)]

use pfsc::discretization::{BoundaryField, Grid, RobinOperator, ScalarField};
use pfsc::state::{ControlSet, InitialData, ModelParams, Problem};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// 1D problem with nonuniform Robin coefficient and initial data crossing θ_c.
pub fn small_problem(n: usize, nt: usize, lambda2: f64) -> Problem {
    let grid = Grid::uniform_1d(1.0, n).unwrap();
    let alpha = BoundaryField(vec![1.5, 0.7]);
    let robin = RobinOperator::new(&grid, alpha, 0.5, 2.0).unwrap();
    let params = ModelParams {
        theta_c: 1.0,
        lambda1: 1.0,
        lambda2,
        theta_f: (0..=nt)
            .map(|k| ScalarField::from_fn(&grid, |x, _| 1.0 + 0.1 * (x - 0.5).signum() + 0.01 * k as f64))
            .collect(),
        u_bounds: (-1.0, 1.0),
        v_bounds: (-0.5, 0.5),
        t_final: 0.5,
        nt,
    };
    let init = InitialData::new(
        &grid,
        ScalarField::from_fn(&grid, |x, _| 0.83 + 0.37 * x),
        ScalarField::from_fn(&grid, |x, _| 0.6 * (3.0 * x).cos()),
    )
    .unwrap();
    Problem::new(grid, robin, params, init).unwrap()
}

pub fn random_field(grid: &Grid, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> ScalarField {
    ScalarField((0..grid.node_count()).map(|_| rng.gen_range(lo..hi)).collect())
}

pub fn random_boundary(grid: &Grid, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> BoundaryField {
    BoundaryField((0..grid.boundary_count()).map(|_| rng.gen_range(lo..hi)).collect())
}

/// Controls drawn uniformly inside the boxes (η strictly inside `[−1, 1]`).
pub fn random_controls(pb: &Problem, rng: &mut ChaCha8Rng) -> ControlSet {
    let (p, g) = (&pb.params, &pb.grid);
    ControlSet {
        u: (0..p.nt).map(|_| random_field(g, rng, p.u_bounds.0, p.u_bounds.1)).collect(),
        v: (0..p.nt).map(|_| random_boundary(g, rng, p.v_bounds.0, p.v_bounds.1)).collect(),
        eta: (0..=p.nt).map(|_| random_field(g, rng, -0.9, 0.9)).collect(),
    }
}

/// Direction with unit-size entries, optionally restricted to some slots.
pub fn random_direction(pb: &Problem, rng: &mut ChaCha8Rng, slots: [bool; 3]) -> ControlSet {
    let (p, g) = (&pb.params, &pb.grid);
    let mut d = ControlSet::zeros(g, p.nt);
    if slots[0] {
        d.u = (0..p.nt).map(|_| random_field(g, rng, -1.0, 1.0)).collect();
    }
    if slots[1] {
        d.v = (0..p.nt).map(|_| random_boundary(g, rng, -1.0, 1.0)).collect();
    }
    if slots[2] {
        d.eta = (0..=p.nt).map(|_| random_field(g, rng, -1.0, 1.0)).collect();
    }
    d
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}
