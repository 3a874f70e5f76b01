use std::ffi::{CStr, CString};
use std::ptr;

use pfsc_ffi::*;

const STATIONARY: &str = r#"{
    "grid": {"dim": 1, "extents": [1.0], "counts": [9]},
    "time": {"t_final": 0.5, "nt": 4},
    "model": {"lambda2": 0.0, "theta_f": {"constant": 1.0}},
    "controls": {"u_bounds": [-1.0, 1.0], "v_bounds": [-1.0, 1.0],
                 "start": {"u": {"constant": 0.0}, "v": {"constant": 0.0}}},
    "initial": {"theta0": {"constant": 1.0}, "phi0": {"constant": 0.0}}
}"#;

fn last_error() -> String {
    unsafe { CStr::from_ptr(pfsc_last_error()) }.to_string_lossy().into_owned()
}

fn problem(json: &str) -> (PfscStatus, *mut PfscProblem) {
    let text = CString::new(json).unwrap();
    let mut h = ptr::null_mut();
    let s = unsafe { pfsc_problem_from_json(text.as_ptr(), &mut h) };
    (s, h)
}

#[test]
fn forward_through_handles() {
    let (s, h) = problem(STATIONARY);
    assert_eq!(s, PfscStatus::Ok, "{}", last_error());
    let (mut n, mut nb, mut nt) = (0, 0, 0);
    unsafe {
        assert_eq!(pfsc_problem_dims(h, &mut n, &mut nb, &mut nt), PfscStatus::Ok);
        assert_eq!((n, nb, nt), (9, 2, 4));
        let mut traj = ptr::null_mut();
        assert_eq!(pfsc_forward(h, &mut traj), PfscStatus::Ok);
        let mut buf = vec![0.0; n];
        assert_eq!(pfsc_trajectory_level(traj, PfscField::Theta, 4, buf.as_mut_ptr(), n), PfscStatus::Ok);
        assert!(buf.iter().all(|t| (t - 1.0).abs() < 1e-12));
        assert_eq!(pfsc_trajectory_level(traj, PfscField::Phi, 5, buf.as_mut_ptr(), n), PfscStatus::OutOfRange);
        assert!(last_error().contains("level 5"));
        assert_eq!(pfsc_trajectory_level(traj, PfscField::Phi, 0, buf.as_mut_ptr(), n - 1), PfscStatus::OutOfRange);
        pfsc_trajectory_free(traj);
        pfsc_problem_free(h);
    }
}

#[test]
fn optimize_stationary_start_is_converged() {
    let (_, h) = problem(STATIONARY);
    unsafe {
        let mut sol = ptr::null_mut();
        assert_eq!(pfsc_optimize(h, &mut sol), PfscStatus::Ok, "{}", last_error());
        let mut sum = PfscSummary::default();
        assert_eq!(pfsc_solution_summary(sol, &mut sum), PfscStatus::Ok);
        assert!(sum.converged);
        assert_eq!(sum.iterations, 0);
        let mut buf = vec![1.0; 2];
        assert_eq!(pfsc_solution_control(sol, PfscSlot::V, 3, buf.as_mut_ptr(), 2), PfscStatus::Ok);
        assert_eq!(buf, vec![0.0, 0.0]);
        assert_eq!(pfsc_solution_control(sol, PfscSlot::U, 4, buf.as_mut_ptr(), 2), PfscStatus::OutOfRange);
        pfsc_solution_free(sol);
        pfsc_problem_free(h);
    }
}

#[test]
fn error_codes_and_messages() {
    let (s, h) = problem(&STATIONARY.replace("[-1.0, 1.0], \"v_bounds\"", "[1.0, -1.0], \"v_bounds\""));
    assert_eq!(s, PfscStatus::Config);
    assert!(h.is_null());
    assert!(last_error().contains("K1"), "{}", last_error());

    let (s, _) = problem("{ not json");
    assert_eq!(s, PfscStatus::Config);

    let (s, _) = problem(STATIONARY);
    assert_eq!(s, PfscStatus::Ok);
    assert_eq!(last_error(), "");

    let mut out = 0.0;
    unsafe {
        assert_eq!(pfsc_problem_from_json(ptr::null(), &mut ptr::null_mut()), PfscStatus::NullPointer);
        assert_eq!(pfsc_beta(-1.0, &mut out), PfscStatus::Domain);
        assert_eq!(pfsc_moreau_j(1.0, 0.0, 0.0, &mut out), PfscStatus::Domain);
        assert_eq!(pfsc_beta(2.0, ptr::null_mut()), PfscStatus::NullPointer);
        let missing = CString::new("/nonexistent/pfsc.json").unwrap();
        assert_eq!(pfsc_problem_from_file(missing.as_ptr(), &mut ptr::null_mut()), PfscStatus::Io);
    }
}

#[test]
fn convex_scalars() {
    let mut v = 0.0;
    unsafe {
        assert_eq!(pfsc_beta(2.0, &mut v), PfscStatus::Ok);
        assert_eq!(v, 1.5);
        assert_eq!(pfsc_beta_inverse(1.5, &mut v), PfscStatus::Ok);
        assert!((v - 2.0).abs() < 1e-15);
        assert_eq!(pfsc_resolvent(1.0, 3.0, 0.5, &mut v), PfscStatus::Ok);
        assert_eq!(v, 2.5);
        assert_eq!(pfsc_moreau_j(1.0, 1.1, 0.5, &mut v), PfscStatus::Ok);
        assert!((v - 0.01).abs() < 1e-15);
        assert_eq!(pfsc_fenchel_gap(1.0, 3.0, 1.0, &mut v), PfscStatus::Ok);
        assert!(v.abs() < 1e-15);
    }
}

#[test]
fn run_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, STATIONARY).unwrap();
    let c = |s: &str| CString::new(s).unwrap();
    let out = dir.path().join("out");
    unsafe {
        let s = pfsc_run(c("forward").as_ptr(), c(cfg.to_str().unwrap()).as_ptr(), c(out.to_str().unwrap()).as_ptr());
        assert_eq!(s, PfscStatus::Ok, "{}", last_error());
        let s = pfsc_run(c("dance").as_ptr(), c(cfg.to_str().unwrap()).as_ptr(), c(out.to_str().unwrap()).as_ptr());
        assert_eq!(s, PfscStatus::Config);
    }
    assert!(out.join("state_forward.csv").exists());
    assert!(out.join("manifest.json").exists());
}

#[test]
fn header_is_valid_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/pfsc.h");
    let text = std::fs::read_to_string(header).unwrap();
    for sym in ["pfsc_problem_from_json", "pfsc_forward", "pfsc_last_error", "PFSC_STATUS_PANIC", "typedef struct PfscProblem PfscProblem"] {
        assert!(text.contains(sym), "{sym} missing from header");
    }
    match std::process::Command::new("cc").args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c", header]).status() {
        Ok(st) => assert!(st.success()),
        Err(_) => eprintln!("no C compiler found; syntax check skipped"),
    }
}
