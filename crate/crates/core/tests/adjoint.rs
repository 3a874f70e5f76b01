mod common;

use common::*;
use pfsc::adjoint::{build_sources, reduced_gradient, solve_adjoint, solve_tangent, Linearization, Mode};
use pfsc::optimizer::{cost_with_mode, evaluate, evaluate_cost, Objective};
use pfsc::state::ControlSet;

fn l2_sum(pb: &pfsc::state::Problem, a: &[pfsc::discretization::ScalarField]) -> f64 {
    let m = pb.grid.mass();
    a.iter()
        .enumerate()
        .map(|(n, f)| pb.params.level_weight(n) * f.iter().zip(m).map(|(x, w)| w * x * x).sum::<f64>())
        .sum::<f64>()
        .sqrt()
}

#[test]
fn duality_identity_random_sources_and_directions() {
    let pb = small_problem(8, 5, 1.0);
    let mut r = rng(11);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let c = random_controls(&pb, &mut r);
        let st = pb.solve_state(&c).unwrap();
        let lin = Linearization::new(&pb, &st).unwrap();
        let i1: Vec<_> = (0..=5).map(|_| random_field(&pb.grid, &mut r, -1.0, 1.0)).collect();
        let i2: Vec<_> = (0..=5).map(|_| random_field(&pb.grid, &mut r, -1.0, 1.0)).collect();
        let d = random_direction(&pb, &mut r, [true, true, false]);
        let tan = lin.tangent(&d.u, &d.v).unwrap();
        let adj = lin.adjoint(&i1, &i2).unwrap();
        let m = pb.grid.mass();
        let h = pb.params.dt();
        let mut lhs = 0.0;
        for n in 0..=5 {
            let tau = pb.params.level_weight(n);
            for i in 0..m.len() {
                lhs += tau * m[i] * (i1[n][i] * tan.y[n][i] + i2[n][i] * tan.phi[n][i]);
            }
        }
        let ba = pb.robin.weighted_alpha();
        let mut rhs = 0.0;
        for k in 0..5 {
            for i in 0..m.len() {
                rhs += h * m[i] * d.u[k][i] * adj.p[k][i];
            }
            for (s, &node) in pb.grid.boundary_index().iter().enumerate() {
                rhs += h * ba[s] * d.v[k][s] * adj.p[k][node];
            }
        }
        worst = worst.max(rel_err(lhs, rhs));
    }
    assert!(worst <= 1e-10, "duality rel err {worst:e}");
}

#[test]
fn terminal_and_initial_conditions_are_exact() {
    let pb = small_problem(8, 5, 1.0);
    let mut r = rng(3);
    let c = random_controls(&pb, &mut r);
    let st = pb.solve_state(&c).unwrap();
    let d = random_direction(&pb, &mut r, [true, true, false]);
    let tan = solve_tangent(&pb, &st, &d.u, &d.v).unwrap();
    assert_eq!(tan.y[0].max_abs(), 0.0);
    assert_eq!(tan.phi[0].max_abs(), 0.0);
    let s = build_sources(&pb, &st, &c, 0.3, &Mode::limit()).unwrap();
    let a = solve_adjoint(&pb, &st, &s).unwrap();
    assert_eq!(a.p[5].max_abs(), 0.0);
    assert_eq!(a.q[5].max_abs(), 0.0);
    assert!(a.p[0].max_abs() > 0.0);
}

fn fd_check(obj: &Objective, seed: u64) -> f64 {
    let pb = small_problem(8, 5, 1.0);
    let mut r = rng(seed);
    let c = random_controls(&pb, &mut r);
    let ev = evaluate(&pb, obj, &c).unwrap();
    let mut worst: f64 = 0.0;
    for trial in 0..10 {
        for slot in 0..3 {
            let mut mask = [false; 3];
            mask[slot] = true;
            let d = random_direction(&pb, &mut r, mask);
            let t = 1e-5;
            let jp = evaluate_cost(&pb, obj, &c.axpy(t, &d)).unwrap().1.total;
            let jm = evaluate_cost(&pb, obj, &c.axpy(-t, &d)).unwrap().1.total;
            let fd = (jp - jm) / (2.0 * t);
            let ad = ev.gradient.dot(&d, &pb.grid, &pb.params);
            let e = rel_err(fd, ad);
            assert!(e <= 1e-6, "trial {trial} slot {slot}: fd {fd:e} vs adjoint {ad:e}");
            worst = worst.max(e);
        }
    }
    worst
}

#[test]
fn gradient_matches_central_differences_penalized() {
    let pb = small_problem(8, 5, 1.0);
    let anchors = random_controls(&pb, &mut rng(99));
    fd_check(&Objective::penalized(0.3, 0.05, anchors), 5);
}

#[test]
fn gradient_matches_central_differences_limit() {
    fd_check(&Objective::limit(0.3), 6);
}

#[test]
fn gradient_matches_central_differences_without_interface_term() {
    fd_check(&Objective::limit(f64::INFINITY), 7);
}

#[test]
fn eta_gradient_without_phase_tracking() {
    let pb = small_problem(8, 5, 0.0);
    let c = random_controls(&pb, &mut rng(1));
    let st = pb.solve_state(&c).unwrap();
    let eps = 0.25;
    let s = build_sources(&pb, &st, &c, eps, &Mode::limit()).unwrap();
    let a = solve_adjoint(&pb, &st, &s).unwrap();
    let g = reduced_gradient(&pb, &a, &s, &c, &Mode::limit()).unwrap();
    for n in 0..=5 {
        for i in 0..8 {
            assert_eq!(g.eta[n][i], (1.0 - st.theta[n][i]) / eps);
        }
    }
    // I₂ + I₃ = (θ_c − θ)/ε with phase tracking switched on
    let pb = small_problem(8, 5, 1.0);
    let s = build_sources(&pb, &st, &c, eps, &Mode::limit()).unwrap();
    for n in 0..=5 {
        for i in 0..8 {
            assert!((s.i2[n][i] + s.i3[n][i] - (1.0 - st.theta[n][i]) / eps).abs() < 1e-13);
            assert!(s.xi[n][i].abs() <= 1.0);
        }
    }
}

#[test]
fn tangent_taylor_remainder_is_second_order() {
    let pb = small_problem(16, 8, 1.0);
    let mut r = rng(21);
    let c = random_controls(&pb, &mut r);
    let d = random_direction(&pb, &mut r, [true, true, false]);
    let st = pb.solve_state(&c).unwrap();
    let tan = solve_tangent(&pb, &st, &d.u, &d.v).unwrap();
    let remainder = |t: f64| {
        let sp = pb.solve_state(&c.axpy(t, &d)).unwrap();
        let dth: Vec<_> = (0..=8).map(|n| sp.theta[n].zip_map(&st.theta[n], |a, b| a - b).zip_map(&tan.y[n], |x, y| x - t * y)).collect();
        let dph: Vec<_> = (0..=8).map(|n| sp.phi[n].zip_map(&st.phi[n], |a, b| a - b).zip_map(&tan.phi[n], |x, y| x - t * y)).collect();
        (l2_sum(&pb, &dth).powi(2) + l2_sum(&pb, &dph).powi(2)).sqrt()
    };
    let ts = [1e-2, 1e-3, 1e-4];
    let rs: Vec<f64> = ts.iter().map(|&t| remainder(t)).collect();
    for w in 0..2 {
        let order = (rs[w] / rs[w + 1]).log10();
        assert!(order >= 1.9, "observed order {order} from {rs:?}");
    }
}

#[test]
fn penalized_cost_at_anchors_matches_gradient_zero_anchor_part() {
    let pb = small_problem(8, 5, 1.0);
    let c = random_controls(&pb, &mut rng(2));
    let mode = Mode::Penalized { sigma: 0.1, anchors: c.clone() };
    let st = pb.solve_state(&c).unwrap();
    let r = cost_with_mode(&pb, &st, &c, 0.2, &mode).unwrap();
    assert_eq!(r.penalty_terms, 0.0);
    let z = ControlSet::zeros(&pb.grid, 5);
    let rz = cost_with_mode(&pb, &st, &c, 0.2, &Mode::Penalized { sigma: 0.1, anchors: z }).unwrap();
    assert!(rz.penalty_terms > 0.0);
}
