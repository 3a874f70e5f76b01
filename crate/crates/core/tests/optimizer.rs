mod common;

use pfsc::benchmark::{initial_controls, standard_1d, EPS, SIGMA};
use pfsc::convex::beta;
use pfsc::discretization::{Grid, RobinOperator, ScalarField};
use pfsc::optimizer::*;
use pfsc::state::{ControlSet, InitialData, ModelParams, Problem, StateTrajectory};
use proptest::prelude::*;
use rand::Rng;

// trapezoid weights on [0, len] with n nodes, built from scratch
fn trap(len: f64, n: usize) -> Vec<f64> {
    let h = len / (n - 1) as f64;
    (0..n).map(|i| if i == 0 || i == n - 1 { h / 2.0 } else { h }).collect()
}

fn random_state(pb: &Problem, rng: &mut impl Rng) -> StateTrajectory {
    let g = &pb.grid;
    let n = pb.params.nt + 1;
    let mut f = |lo, hi| (0..n).map(|_| ScalarField((0..g.node_count()).map(|_| rng.gen_range(lo..hi)).collect())).collect();
    StateTrajectory { theta: f(0.5, 1.5), phi: f(-1.2, 1.2), diagnostics: vec![] }
}

/// Direct summation of `J_{ε,σ}` (or `J_ε` without `sigma`).
fn oracle(pb: &Problem, st: &StateTrajectory, c: &ControlSet, eps: f64, pen: Option<(f64, &ControlSet)>) -> f64 {
    let p = &pb.params;
    let n = pb.grid.node_count();
    let wx = trap(1.0, n);
    let wt = trap(p.t_final, p.nt + 1);
    let h = p.t_final / p.nt as f64;
    let mut total = 0.0;
    for k in 0..=p.nt {
        for i in 0..n {
            let th = st.theta[k][i];
            let eta = c.eta[k][i];
            let d = (th - 1.0).abs();
            let jv = match pen {
                Some((s, _)) if d <= s => d * d / (2.0 * s),
                Some((s, _)) => d - s / 2.0,
                None => d,
            };
            let mut f = p.lambda1 * (th - p.theta_f[k][i]).powi(2)
                + p.lambda2 * (st.phi[k][i] - eta).powi(2)
                + (jv + eta - eta * th) / eps;
            if let Some((_, a)) = pen {
                f += (eta - a.eta[k][i]).powi(2);
            }
            total += wt[k] * wx[i] * f;
        }
    }
    if let Some((_, a)) = pen {
        for k in 0..p.nt {
            for i in 0..n {
                total += h * wx[i] * (c.u[k][i] - a.u[k][i]).powi(2);
            }
            for s in 0..2 {
                total += h * (c.v[k][s] - a.v[k][s]).powi(2);
            }
        }
    }
    total
}

#[test]
fn costs_match_direct_summation() {
    let pb = common::small_problem(9, 6, 0.7);
    let mut rng = common::rng(3);
    for _ in 0..20 {
        let st = random_state(&pb, &mut rng);
        let c = common::random_controls(&pb, &mut rng);
        let a = common::random_controls(&pb, &mut rng);
        let eps = rng.gen_range(0.05..2.0);
        let sigma = rng.gen_range(0.01..0.5);
        let j = cost_j_eps(&pb, &st, &c, eps).unwrap().total;
        assert!(common::rel_err(j, oracle(&pb, &st, &c, eps, None)) <= 1e-12);
        let js = cost_j_eps_sigma(&pb, &st, &c, eps, sigma, &a).unwrap().total;
        assert!(common::rel_err(js, oracle(&pb, &st, &c, eps, Some((sigma, &a)))) <= 1e-12);
        let j0 = cost_j(&pb, &st, &c).unwrap().total;
        assert!(common::rel_err(j0, oracle(&pb, &st, &c, f64::INFINITY, None)) <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn report_parts_and_fenchel_sign(seed: u64, eps in 0.01f64..10.0, sigma in 0.001f64..1.0) {
        let pb = common::small_problem(7, 4, 1.0);
        let mut rng = common::rng(seed);
        let st = random_state(&pb, &mut rng);
        let c = common::random_controls(&pb, &mut rng);
        let a = common::random_controls(&pb, &mut rng);
        let r = cost_j_eps(&pb, &st, &c, eps).unwrap();
        prop_assert!(r.fenchel_term >= -1e-12);
        prop_assert!((r.total - r.tracking_theta - r.tracking_phase - r.fenchel_term - r.penalty_terms).abs() <= 1e-12 * r.total.abs().max(1.0));
        // the envelope sits at most σ/2 below j
        let s = cost_j_eps_sigma(&pb, &st, &c, eps, sigma, &a).unwrap();
        let q = pb.grid.volume() * pb.params.t_final;
        prop_assert!(s.fenchel_term >= -sigma * q / (2.0 * eps) - 1e-12);
        prop_assert!(s.fenchel_term <= r.fenchel_term + 1e-12);
        prop_assert!((s.total - s.tracking_theta - s.tracking_phase - s.fenchel_term - s.penalty_terms).abs() <= 1e-12 * s.total.abs().max(1.0));
    }
}

#[test]
fn envelope_fenchel_term_can_be_negative() {
    let pb = common::small_problem(5, 2, 1.0);
    let n = pb.params.nt + 1;
    let st = StateTrajectory {
        theta: vec![ScalarField::constant(&pb.grid, 1.5); n],
        phi: vec![ScalarField::zeros(&pb.grid); n],
        diagnostics: vec![],
    };
    let c = ControlSet::constant(&pb.grid, 2, 0.0, 0.0, 1.0);
    // j_σ(1.5) + θ_c − 1.5 = −σ/2 pointwise
    let r = cost_j_eps_sigma(&pb, &st, &c, 0.5, 0.2, &c).unwrap();
    let q = pb.grid.volume() * pb.params.t_final;
    assert!((r.fenchel_term + 0.1 * q / 0.5).abs() < 1e-12);
}

fn resting_problem(nt: usize) -> (Problem, ControlSet) {
    let grid = Grid::uniform_1d(1.0, 9).unwrap();
    let robin = RobinOperator::constant(&grid, 1.0).unwrap();
    let params = ModelParams {
        theta_c: 1.0,
        lambda1: 1.0,
        lambda2: 0.0,
        theta_f: vec![ScalarField::constant(&grid, 1.0); nt + 1],
        u_bounds: (-1.0, 1.0),
        v_bounds: (-1.0, 1.0),
        t_final: 1.0,
        nt,
    };
    let init = InitialData::new(&grid, ScalarField::constant(&grid, 1.0), ScalarField::zeros(&grid)).unwrap();
    let c = ControlSet::constant(&grid, nt, 0.0, beta(1.0).unwrap(), 0.0);
    (Problem::new(grid, robin, params, init).unwrap(), c)
}

#[test]
fn stationary_start_returns_immediately() {
    let (pb, c) = resting_problem(6);
    let r = optimize(&pb, &Objective::limit(f64::INFINITY), &c, &OptimizeOptions::default()).unwrap();
    assert_eq!(r.iterations(), 0);
    assert_eq!(r.termination, Termination::Converged);
    assert_eq!(r.controls, c);
}

fn assert_monotone(r: &OptimizationResult) {
    assert!(r.history.windows(2).all(|w| w[1].cost < w[0].cost), "cost increased");
}

#[test]
fn quadratic_tracking_drives_theta_toward_target() {
    let mut pb = common::small_problem(12, 10, 0.0);
    pb.params.u_bounds = (-20.0, 20.0);
    pb.params.v_bounds = (-5.0, 5.0);
    let init = ControlSet::zeros(&pb.grid, 10);
    let opts = OptimizeOptions { max_iter: 400, ..Default::default() };
    let r = optimize(&pb, &Objective::limit(f64::INFINITY), &init, &opts).unwrap();
    assert_monotone(&r);
    let first = r.history[0].cost;
    assert!(r.cost.total < 0.2 * first, "{} vs {first}", r.cost.total);
    assert!(is_feasible(&r.controls, &pb.params));
}

#[test]
fn exact_eta_update_satisfies_its_variational_inequality() {
    let pb = common::small_problem(8, 5, 0.6);
    let mut rng = common::rng(11);
    let c = common::random_controls(&pb, &mut rng);
    for obj in [Objective::limit(0.3), Objective::penalized(0.3, 0.1, common::random_controls(&pb, &mut rng))] {
        let st = pb.solve_state(&c).unwrap();
        let e = minimize_eta(&pb, &obj, &st, &c);
        let ev = evaluate(&pb, &obj, &e).unwrap();
        for (eta, g) in e.eta.iter().zip(&ev.gradient.eta) {
            for (x, gx) in eta.iter().zip(g.iter()) {
                assert!((x - (x - gx).clamp(-1.0, 1.0)).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn benchmark_stages_converge_monotonically_with_bang_bang_controls() {
    let pb = standard_1d(33, 32).unwrap();
    let opts = OptimizeOptions::default();
    let init = initial_controls(&pb);
    let a = optimize(&pb, &Objective::limit(EPS), &init, &opts).unwrap();
    let b = optimize(&pb, &Objective::penalized(EPS, SIGMA, a.controls.clone()), &init, &opts).unwrap();
    for r in [&a, &b] {
        assert_monotone(r);
        assert!(is_feasible(&r.controls, &pb.params));
        let g = evaluate(&pb, &Objective::limit(EPS), &r.controls).unwrap();
        assert!(r.residual <= 10.0 * opts.tol);
        assert!(g.residual <= 10.0 * opts.tol);
        assert!(r.kkt.max_fraction() <= 0.02, "{:?}", r.kkt);
        // complementarity only collects from violating points
        for (slot, range) in [(&r.kkt.u, 0.02), (&r.kkt.v, 0.04)] {
            assert!(slot.complementarity <= slot.violation * range * range / 4.0 + 1e-15);
        }
    }
}

#[test]
fn single_entry_schedule_is_plain_optimize() {
    let pb = standard_1d(17, 12).unwrap();
    let opts = OptimizeOptions::default();
    let init = initial_controls(&pb);
    let st = continuation(&pb, &Schedule { eps: vec![0.2], sigma: vec![] }, &init, &opts).unwrap();
    let r = optimize(&pb, &Objective::limit(0.2), &init, &opts).unwrap();
    assert_eq!(st.len(), 1);
    assert_eq!(st[0].result.controls, r.controls);
    assert_eq!(st[0].result.history, r.history);
    assert_eq!(st[0].drift, None);
}

#[test]
fn continuation_records_gap_and_drift() {
    let pb = standard_1d(17, 12).unwrap();
    let sched = Schedule { eps: vec![0.4, 0.1], sigma: vec![0.05, 0.025, 0.0125] };
    let st = continuation(&pb, &sched, &initial_controls(&pb), &OptimizeOptions::default()).unwrap();
    assert_eq!(st.len(), 8);
    for s in &st {
        assert!(s.zeta >= -1e-12);
        assert_eq!(s.zeta, fenchel_gap_integral(&pb, &s.result.state, &s.result.controls).unwrap());
        if let Some(sigma) = s.sigma {
            assert!(sigma > 0.0 && !s.result.history.is_empty());
        }
        assert!(s.result.residual <= 1e-5);
    }
    assert_eq!(st[0].drift, None);
    assert!(st[1].drift.is_none() && st[2].drift.is_some());
    assert!(st[4].drift.is_some());
}

#[test]
fn schedules_are_validated() {
    let pb = standard_1d(9, 4).unwrap();
    let init = initial_controls(&pb);
    let opts = OptimizeOptions::default();
    for s in [
        Schedule { eps: vec![], sigma: vec![] },
        Schedule { eps: vec![0.1, 0.2], sigma: vec![] },
        Schedule { eps: vec![0.1], sigma: vec![0.1, 0.1] },
        Schedule { eps: vec![-0.1], sigma: vec![] },
    ] {
        assert!(continuation(&pb, &s, &init, &opts).is_err());
    }
    let bad = ControlSet::constant(&pb.grid, 4, 1.0, 0.0, 0.0);
    assert!(optimize(&pb, &Objective::limit(0.1), &bad, &opts).is_err());
}
