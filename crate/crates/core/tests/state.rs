mod common;

use pfsc::convex::beta;
use pfsc::discretization::{BoundaryField, Grid, RobinOperator, ScalarField};
use pfsc::state::{continuous_dependence_ratio, ControlSet, InitialData, LinfCaps, ModelParams, Problem};
use proptest::prelude::*;
use rand::Rng;

fn stationary(grid: Grid, phi0: f64, nt: usize) -> (Problem, ControlSet) {
    let robin = RobinOperator::constant(&grid, 1.3).unwrap();
    let params = ModelParams {
        theta_c: 1.0,
        lambda1: 1.0,
        lambda2: 1.0,
        theta_f: vec![ScalarField::constant(&grid, 1.0); nt + 1],
        u_bounds: (-1.0, 1.0),
        v_bounds: (-1.0, 1.0),
        t_final: 1.0,
        nt,
    };
    let init = InitialData::new(&grid, ScalarField::constant(&grid, 1.0), ScalarField::constant(&grid, phi0)).unwrap();
    let c = ControlSet::constant(&grid, nt, 0.0, beta(1.0).unwrap(), 0.0);
    (Problem::new(grid, robin, params, init).unwrap(), c)
}

#[test]
fn stationary_states_stay_constant() {
    for grid in [Grid::uniform_1d(1.0, 17).unwrap(), Grid::uniform_2d(1.0, 1.0, 6, 5).unwrap()] {
        for phi0 in [0.0, 1.0, -1.0] {
            let (pb, c) = stationary(grid.clone(), phi0, 64);
            let st = pb.solve_state(&c).unwrap();
            for (th, ph) in st.theta.iter().zip(&st.phi) {
                assert!(th.iter().all(|t| (t - 1.0).abs() <= 1e-10));
                assert!(ph.iter().all(|p| (p - phi0).abs() <= 1e-10));
            }
        }
    }
}

fn corner_controls(pb: &Problem, rng: &mut impl Rng) -> ControlSet {
    let (p, g) = (&pb.params, &pb.grid);
    let pick = |rng: &mut dyn rand::RngCore, (a, b): (f64, f64)| if rng.gen::<bool>() { a } else { b };
    ControlSet {
        u: (0..p.nt).map(|_| ScalarField((0..g.node_count()).map(|_| pick(rng, p.u_bounds)).collect())).collect(),
        v: (0..p.nt).map(|_| BoundaryField((0..g.boundary_count()).map(|_| pick(rng, p.v_bounds)).collect())).collect(),
        eta: vec![ScalarField::zeros(g); p.nt + 1],
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn positivity_and_balance_at_box_corners(seed: u64) {
        let mut pb = common::small_problem(12, 10, 1.0);
        pb.params.u_bounds = (-5.0, 5.0);
        pb.params.v_bounds = (-20.0, 20.0);
        let mut rng = common::rng(seed);
        let c = corner_controls(&pb, &mut rng);
        let st = pb.solve_state(&c).unwrap();
        prop_assert!(st.diagnostics.iter().all(|d| d.min_theta > 0.0));
        prop_assert!(st.max_balance_residual() <= 1e-9);
    }
}

#[test]
fn continuous_dependence_ratio_stays_bounded() {
    let pb = common::small_problem(16, 12, 1.0);
    let mut rng = common::rng(7);
    let base = common::random_controls(&pb, &mut rng);
    let dir = common::random_direction(&pb, &mut rng, [true, false, false]);
    let sa = pb.solve_state(&base).unwrap();
    let mut ratios = vec![];
    let mut diffs = vec![];
    for delta in [1e-2, 5e-3, 2.5e-3] {
        let c = base.axpy(delta, &dir);
        let sb = pb.solve_state(&c).unwrap();
        ratios.push(continuous_dependence_ratio(&pb.grid, &pb.params, (&sa, &base), (&sb, &c)));
        diffs.push(sa.theta.iter().zip(&sb.theta).map(|(a, b)| a.zip_map(b, |x, y| x - y).max_abs()).fold(0.0, f64::max));
    }
    assert!(ratios.iter().all(|r| r.is_finite() && *r < 1.0), "{ratios:?}");
    assert!(diffs.windows(2).all(|w| w[1] < w[0]), "{diffs:?}");
}

#[test]
fn linf_caps_are_reported_not_enforced() {
    let pb = common::small_problem(10, 8, 1.0);
    let c = ControlSet::constant(&pb.grid, 8, 1.0, 0.5, 0.0);
    let st = pb.solve_state(&c).unwrap();
    assert!(st.cap_violations(&LinfCaps { theta_max: 10.0, inv_theta_max: 10.0 }).is_empty());
    let v = st.cap_violations(&LinfCaps { theta_max: 1.0, inv_theta_max: 10.0 });
    assert!(!v.is_empty() && v.iter().all(|c| c.quantity == "theta" && c.value > 1.0));
}
