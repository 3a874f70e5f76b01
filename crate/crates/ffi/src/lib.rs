//! C ABI over `pfsc`.
//!
//! Problems, trajectories and solutions are opaque heap handles released
//! with the matching `*_free`. Every fallible call returns a [`PfscStatus`]; on failure the
//! message is available from [`pfsc_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use pfsc::cli::{load_config, parse_config, CliError, Command, ConfigError, RunConfig};
use pfsc::convex::{beta, beta_inverse, ConvexContext};
use pfsc::optimizer::{optimize, OptimizationResult, Termination};
use pfsc::state::{ControlSet, Problem, StateTrajectory};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PfscStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidString = 2,
    Config = 3,
    Domain = 4,
    Solver = 5,
    OutOfRange = 6,
    Io = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PfscField {
    Theta = 0,
    Phi = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PfscSlot {
    /// Distributed heat source, `nt` levels on the nodes.
    U = 0,
    /// Boundary source, `nt` levels on the boundary nodes.
    V = 1,
    /// Phase indicator, `nt + 1` levels on the nodes.
    Eta = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PfscSummary {
    pub cost: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub struct PfscProblem {
    config: RunConfig,
    problem: Problem,
    start: ControlSet,
}

pub struct PfscTrajectory {
    state: StateTrajectory,
}

pub struct PfscSolution {
    result: OptimizationResult,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl ToString) {
    let text = msg.to_string().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).unwrap_or_default());
}

fn fail(status: PfscStatus, msg: impl ToString) -> PfscStatus {
    set_error(msg);
    status
}

fn solver_status(e: &pfsc::Error) -> PfscStatus {
    match e {
        pfsc::Error::Domain { .. } => PfscStatus::Domain,
        _ => PfscStatus::Solver,
    }
}

fn config_status(e: &ConfigError) -> PfscStatus {
    match e {
        ConfigError::Io { .. } => PfscStatus::Io,
        _ => PfscStatus::Config,
    }
}

fn guard(f: impl FnOnce() -> PfscStatus) -> PfscStatus {
    set_error("");
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(PfscStatus::Panic, "internal panic"))
}

unsafe fn str_arg<'a>(s: *const c_char) -> Result<&'a str, PfscStatus> {
    if s.is_null() {
        return Err(fail(PfscStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(s).to_str().map_err(|e| fail(PfscStatus::InvalidString, e))
}

fn make_problem(config: RunConfig, out: *mut *mut PfscProblem) -> PfscStatus {
    match config.build() {
        Ok((problem, start)) => {
            unsafe { *out = Box::into_raw(Box::new(PfscProblem { config, problem, start })) };
            PfscStatus::Ok
        }
        Err(e) => fail(config_status(&e), e),
    }
}

/// Message for the last failed call on this thread, or "" after a success.
/// Valid until the next `pfsc_*` call on the same thread.
#[no_mangle]
pub extern "C" fn pfsc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Builds a problem from a JSON run configuration. `file` fields are not
/// supported here; use `pfsc_problem_from_file`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pfsc_problem_from_json(json: *const c_char, out: *mut *mut PfscProblem) -> PfscStatus {
    guard(|| {
        if out.is_null() {
            return fail(PfscStatus::NullPointer, "null output handle");
        }
        *out = ptr::null_mut();
        let text = match str_arg(json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match parse_config(text) {
            Ok(cfg) => make_problem(cfg, out),
            Err(e) => fail(config_status(&e), e),
        }
    })
}

/// Builds a problem from a configuration file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pfsc_problem_from_file(path: *const c_char, out: *mut *mut PfscProblem) -> PfscStatus {
    guard(|| {
        if out.is_null() {
            return fail(PfscStatus::NullPointer, "null output handle");
        }
        *out = ptr::null_mut();
        let path = match str_arg(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match load_config(Path::new(path)) {
            Ok(cfg) => make_problem(cfg, out),
            Err(e) => fail(config_status(&e), e),
        }
    })
}

/// # Safety
/// `problem` must come from `pfsc_problem_from_*` or be null.
#[no_mangle]
pub unsafe extern "C" fn pfsc_problem_free(problem: *mut PfscProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Node count, boundary node count and number of time steps `nt`.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn pfsc_problem_dims(
    problem: *const PfscProblem,
    nodes: *mut usize,
    boundary_nodes: *mut usize,
    nt: *mut usize,
) -> PfscStatus {
    guard(|| {
        if problem.is_null() || nodes.is_null() || boundary_nodes.is_null() || nt.is_null() {
            return fail(PfscStatus::NullPointer, "null argument");
        }
        let p = &(*problem).problem;
        *nodes = p.grid.node_count();
        *boundary_nodes = p.grid.boundary_count();
        *nt = p.params.nt;
        PfscStatus::Ok
    })
}

/// Solves the state equations for the configured start controls.
///
/// # Safety
/// `problem` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pfsc_forward(problem: *const PfscProblem, out: *mut *mut PfscTrajectory) -> PfscStatus {
    guard(|| {
        if problem.is_null() || out.is_null() {
            return fail(PfscStatus::NullPointer, "null argument");
        }
        *out = ptr::null_mut();
        let h = &*problem;
        match h.problem.solve_state(&h.start) {
            Ok(state) => {
                *out = Box::into_raw(Box::new(PfscTrajectory { state }));
                PfscStatus::Ok
            }
            Err(e) => fail(solver_status(&e), e),
        }
    })
}

/// Copies one time level of `θ` or `φ` into `buf`, which must hold at least
/// the node count.
///
/// # Safety
/// `traj` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn pfsc_trajectory_level(
    traj: *const PfscTrajectory,
    field: PfscField,
    level: usize,
    buf: *mut f64,
    len: usize,
) -> PfscStatus {
    guard(|| {
        if traj.is_null() || buf.is_null() {
            return fail(PfscStatus::NullPointer, "null argument");
        }
        let st = &(*traj).state;
        let levels = match field {
            PfscField::Theta => &st.theta,
            PfscField::Phi => &st.phi,
        };
        let Some(values) = levels.get(level) else {
            return fail(PfscStatus::OutOfRange, format!("level {level} beyond {}", levels.len() - 1));
        };
        copy_out(values.values(), buf, len)
    })
}

/// # Safety
/// `traj` must come from `pfsc_forward` or be null.
#[no_mangle]
pub unsafe extern "C" fn pfsc_trajectory_free(traj: *mut PfscTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Minimizes the exact-`j` cost at the configured `eps` by projected
/// gradient, starting from the configured controls.
///
/// # Safety
/// `problem` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pfsc_optimize(problem: *const PfscProblem, out: *mut *mut PfscSolution) -> PfscStatus {
    guard(|| {
        if problem.is_null() || out.is_null() {
            return fail(PfscStatus::NullPointer, "null argument");
        }
        *out = ptr::null_mut();
        let h = &*problem;
        match optimize(&h.problem, &h.config.objective.limit(), &h.start, &h.config.optimizer) {
            Ok(result) => {
                *out = Box::into_raw(Box::new(PfscSolution { result }));
                PfscStatus::Ok
            }
            Err(e) => fail(solver_status(&e), e),
        }
    })
}

/// # Safety
/// `sol` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pfsc_solution_summary(sol: *const PfscSolution, out: *mut PfscSummary) -> PfscStatus {
    guard(|| {
        if sol.is_null() || out.is_null() {
            return fail(PfscStatus::NullPointer, "null argument");
        }
        let r = &(*sol).result;
        *out = PfscSummary {
            cost: r.cost.total,
            residual: r.residual,
            iterations: r.iterations(),
            converged: r.termination == Termination::Converged,
        };
        PfscStatus::Ok
    })
}

/// Copies one level of an optimal control into `buf`.
///
/// # Safety
/// `sol` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn pfsc_solution_control(
    sol: *const PfscSolution,
    slot: PfscSlot,
    level: usize,
    buf: *mut f64,
    len: usize,
) -> PfscStatus {
    guard(|| {
        if sol.is_null() || buf.is_null() {
            return fail(PfscStatus::NullPointer, "null argument");
        }
        let c = &(*sol).result.controls;
        let values = match slot {
            PfscSlot::U => c.u.get(level).map(|f| f.values()),
            PfscSlot::V => c.v.get(level).map(|f| f.values()),
            PfscSlot::Eta => c.eta.get(level).map(|f| f.values()),
        };
        match values {
            Some(v) => copy_out(v, buf, len),
            None => fail(PfscStatus::OutOfRange, format!("no {slot:?} control at level {level}")),
        }
    })
}

/// # Safety
/// `sol` must come from `pfsc_optimize` or be null.
#[no_mangle]
pub unsafe extern "C" fn pfsc_solution_free(sol: *mut PfscSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// Runs a CLI subcommand (`forward`, `gradcheck`, `optimize`, `continue`,
/// `sweep`) on a config file and writes its artifacts to `out_dir`.
///
/// # Safety
/// All strings must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn pfsc_run(command: *const c_char, config_path: *const c_char, out_dir: *const c_char) -> PfscStatus {
    guard(|| {
        let args = (str_arg(command), str_arg(config_path), str_arg(out_dir));
        let (command, config_path, out_dir) = match args {
            (Ok(a), Ok(b), Ok(c)) => (a, b, c),
            (Err(s), _, _) | (_, Err(s), _) | (_, _, Err(s)) => return s,
        };
        let command: Command = match serde_json::from_value(serde_json::Value::String(command.into())) {
            Ok(c) => c,
            Err(_) => return fail(PfscStatus::Config, format!("unknown command {command:?}")),
        };
        let cfg = match load_config(Path::new(config_path)) {
            Ok(c) => c,
            Err(e) => return fail(config_status(&e), e),
        };
        match pfsc::cli::run(command, &cfg, Path::new(out_dir)) {
            Ok(_) => PfscStatus::Ok,
            Err(e) => {
                let status = match &e {
                    CliError::Config(c) => config_status(c),
                    CliError::Solver(s) => solver_status(s),
                    CliError::Io { .. } => PfscStatus::Io,
                };
                fail(status, e)
            }
        }
    })
}

/// Moreau envelope `j_σ(r)` of `j(r) = |r − θ_c|`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pfsc_moreau_j(theta_c: f64, r: f64, sigma: f64, out: *mut f64) -> PfscStatus {
    scalar(out, || ConvexContext::new(theta_c)?.moreau_j(r, sigma))
}

/// Resolvent `(I + σ∂j)⁻¹(r)`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pfsc_resolvent(theta_c: f64, r: f64, sigma: f64, out: *mut f64) -> PfscStatus {
    scalar(out, || ConvexContext::new(theta_c)?.resolvent(r, sigma))
}

/// Fenchel-Young gap `j(r) + j*(w) − r·w`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pfsc_fenchel_gap(theta_c: f64, r: f64, w: f64, out: *mut f64) -> PfscStatus {
    scalar(out, || ConvexContext::new(theta_c)?.fenchel_gap(r, w))
}

/// `β(r) = r − 1/r` for `r > 0`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pfsc_beta(r: f64, out: *mut f64) -> PfscStatus {
    scalar(out, || beta(r))
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pfsc_beta_inverse(w: f64, out: *mut f64) -> PfscStatus {
    scalar(out, || Ok(beta_inverse(w)))
}

unsafe fn scalar(out: *mut f64, f: impl FnOnce() -> pfsc::Result<f64>) -> PfscStatus {
    guard(|| {
        if out.is_null() {
            return fail(PfscStatus::NullPointer, "null output pointer");
        }
        match f() {
            Ok(v) => {
                *out = v;
                PfscStatus::Ok
            }
            Err(e) => fail(solver_status(&e), e),
        }
    })
}

unsafe fn copy_out(values: &[f64], buf: *mut f64, len: usize) -> PfscStatus {
    if len < values.len() {
        return fail(PfscStatus::OutOfRange, format!("buffer holds {len} values, need {}", values.len()));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
    PfscStatus::Ok
}
