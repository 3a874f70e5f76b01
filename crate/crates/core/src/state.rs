//! Semi-implicit time stepping for the Penrose-Fife system
//!
//! ```text
//!   θ_t − Δβ(θ) + φ_t = u                 in Q
//!   φ_t − Δφ + φ³ − φ = 1/θ_c − 1/θ       in Q
//!   −∂_ν β(θ) = α (β(θ) − v),  ∂_ν φ = 0  on Σ
//! ```
//!
//! Each step first advances φ (cubic implicit, `−φ` explicit, source from the
//! old temperature), then advances θ through the unknown `w = β(θ)`, so that
//! `θ = β⁻¹(w)` is positive whatever `w` the Newton iteration produces.
//!
//! Controls are staggered in time: `u[k]` and `v[k]` drive the step from level
//! `k` to level `k + 1`, while `η` lives on the `nt + 1` state levels.

use crate::convex::{beta_inverse, beta_inverse_prime, beta_unchecked};
use crate::discretization::{check_series, dot, BoundaryField, Grid, RobinOperator, ScalarField};
use crate::error::{Error, Result};
use crate::linalg::BandedSpd;

/// Physical and cost parameters shared by the solvers and the optimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub theta_c: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    /// Target temperature at each of the `nt + 1` levels.
    pub theta_f: Vec<ScalarField>,
    pub u_bounds: (f64, f64),
    pub v_bounds: (f64, f64),
    pub t_final: f64,
    pub nt: usize,
}

impl ModelParams {
    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if !(self.theta_c > 0.0) {
            return Err(Error::InvalidParameter(format!("theta_c = {} must be positive", self.theta_c)));
        }
        if !(self.lambda1 >= 0.0 && self.lambda2 >= 0.0) {
            return Err(Error::InvalidParameter("cost weights must be nonnegative".into()));
        }
        if !(self.u_bounds.0 <= self.u_bounds.1) || !(self.v_bounds.0 <= self.v_bounds.1) {
            return Err(Error::InvalidParameter("control bounds out of order".into()));
        }
        if !(self.t_final > 0.0) || self.nt == 0 {
            return Err(Error::InvalidParameter(format!(
                "time grid T = {}, nt = {} is empty",
                self.t_final, self.nt
            )));
        }
        check_series(&self.theta_f, self.nt + 1, |f| f.check(grid))
    }

    /// Uniform time step.
    pub fn dt(&self) -> f64 {
        self.t_final / self.nt as f64
    }

    pub fn time(&self, level: usize) -> f64 {
        level as f64 * self.dt()
    }

    /// Trapezoid weight of state level `n` in time integrals over `(0, T)`.
    pub fn level_weight(&self, n: usize) -> f64 {
        if n == 0 || n == self.nt {
            0.5 * self.dt()
        } else {
            self.dt()
        }
    }
}

/// Initial temperature (strictly positive) and phase.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub theta0: ScalarField,
    pub phi0: ScalarField,
}

impl InitialData {
    pub fn new(grid: &Grid, theta0: ScalarField, phi0: ScalarField) -> Result<Self> {
        let init = Self { theta0, phi0 };
        init.validate(grid)?;
        Ok(init)
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        self.theta0.check(grid)?;
        self.phi0.check(grid)?;
        if !(self.theta0.min() > 0.0) || !self.theta0.is_finite() || !self.phi0.is_finite() {
            return Err(Error::InvalidParameter(
                "initial temperature must be finite and strictly positive".into(),
            ));
        }
        Ok(())
    }
}

/// Distributed control `u`, boundary control `v` and interface indicator `η`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSet {
    /// One field per time step (`nt` entries).
    pub u: Vec<ScalarField>,
    /// One boundary field per time step (`nt` entries).
    pub v: Vec<BoundaryField>,
    /// One field per state level (`nt + 1` entries).
    pub eta: Vec<ScalarField>,
}

impl ControlSet {
    pub fn constant(grid: &Grid, nt: usize, u: f64, v: f64, eta: f64) -> Self {
        Self {
            u: vec![ScalarField::constant(grid, u); nt],
            v: vec![BoundaryField::constant(grid, v); nt],
            eta: vec![ScalarField::constant(grid, eta); nt + 1],
        }
    }

    pub fn zeros(grid: &Grid, nt: usize) -> Self {
        Self::constant(grid, nt, 0.0, 0.0, 0.0)
    }

    pub fn check(&self, grid: &Grid, nt: usize) -> Result<()> {
        check_series(&self.u, nt, |f| f.check(grid))?;
        check_series(&self.v, nt, |f| f.check(grid))?;
        check_series(&self.eta, nt + 1, |f| f.check(grid))
    }

    pub fn nt(&self) -> usize {
        self.u.len()
    }

    /// `self + t · dir`, slot by slot.
    pub fn axpy(&self, t: f64, dir: &ControlSet) -> ControlSet {
        fn go<F: Clone + std::ops::DerefMut<Target = [f64]>>(a: &[F], b: &[F], t: f64) -> Vec<F> {
            a.iter()
                .zip(b)
                .map(|(x, y)| {
                    let mut z = x.clone();
                    for (zi, yi) in z.iter_mut().zip(y.iter()) {
                        *zi += t * yi;
                    }
                    z
                })
                .collect()
        }
        ControlSet {
            u: go(&self.u, &dir.u, t),
            v: go(&self.v, &dir.v, t),
            eta: go(&self.eta, &dir.eta, t),
        }
    }

    /// Discrete L² inner products on Q (for `u`), Σ (for `v`) and Q (for `η`).
    pub fn slot_dots(&self, other: &ControlSet, grid: &Grid, params: &ModelParams) -> [f64; 3] {
        let h = params.dt();
        let du: f64 = self.u.iter().zip(&other.u).map(|(a, b)| h * weighted_dot(grid.mass(), a, b)).sum();
        let dv: f64 = self
            .v
            .iter()
            .zip(&other.v)
            .map(|(a, b)| h * weighted_dot(grid.boundary_weight(), a, b))
            .sum();
        let de: f64 = self
            .eta
            .iter()
            .zip(&other.eta)
            .enumerate()
            .map(|(n, (a, b))| params.level_weight(n) * weighted_dot(grid.mass(), a, b))
            .sum();
        [du, dv, de]
    }

    pub fn dot(&self, other: &ControlSet, grid: &Grid, params: &ModelParams) -> f64 {
        self.slot_dots(other, grid, params).iter().sum()
    }

    pub fn norm(&self, grid: &Grid, params: &ModelParams) -> f64 {
        self.dot(self, grid, params).sqrt()
    }
}

fn weighted_dot(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter().zip(a).zip(b).map(|((w, a), b)| w * a * b).sum()
}

/// Tolerances for the damped Newton iterations.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NewtonOptions {
    /// Max-norm of the pointwise residual.
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 50,
            max_halvings: 30,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NewtonReport {
    pub iterations: usize,
    pub residual: f64,
}

/// Per-step monitoring data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    pub min_theta: f64,
    pub max_theta: f64,
    pub max_abs_phi: f64,
    /// Relative residual of `d/dt(∫θ + ∫φ) − ∫u + ∫_Γ α(β(θ) − v) = 0`.
    pub balance_residual: f64,
    pub phi_newton: NewtonReport,
    pub theta_newton: NewtonReport,
}

/// States at the `nt + 1` time levels.
#[derive(Debug, Clone, PartialEq)]
pub struct StateTrajectory {
    pub theta: Vec<ScalarField>,
    pub phi: Vec<ScalarField>,
    /// One entry per step (`nt` entries).
    pub diagnostics: Vec<StepDiagnostics>,
}

impl StateTrajectory {
    pub fn levels(&self) -> usize {
        self.theta.len()
    }

    pub fn min_theta(&self) -> f64 {
        self.theta.iter().map(ScalarField::min).fold(f64::INFINITY, f64::min)
    }

    pub fn max_balance_residual(&self) -> f64 {
        self.diagnostics.iter().map(|d| d.balance_residual).fold(0.0, f64::max)
    }

    /// Levels at which `max θ` or `max 1/θ` exceed the caps. Monitoring only.
    pub fn cap_violations(&self, caps: &LinfCaps) -> Vec<CapViolation> {
        let mut out = Vec::new();
        for (level, th) in self.theta.iter().enumerate() {
            let max = th.max();
            if max > caps.theta_max {
                out.push(CapViolation { level, quantity: "theta", value: max, cap: caps.theta_max });
            }
            let inv = 1.0 / th.min();
            if inv > caps.inv_theta_max {
                out.push(CapViolation { level, quantity: "1/theta", value: inv, cap: caps.inv_theta_max });
            }
        }
        out
    }
}

/// L∞ caps on `θ` and `1/θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinfCaps {
    pub theta_max: f64,
    pub inv_theta_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapViolation {
    pub level: usize,
    pub quantity: &'static str,
    pub value: f64,
    pub cap: f64,
}

/// Damped Newton on an SPD-Jacobian system. `residual` returns the weighted
/// residual `M R`; convergence is measured on the pointwise residual `R`.
fn damped_newton(
    mut x: Vec<f64>,
    mass: &[f64],
    opts: &NewtonOptions,
    stage: &'static str,
    residual: impl Fn(&[f64]) -> Vec<f64>,
    jacobian: impl Fn(&[f64]) -> BandedSpd,
) -> Result<(Vec<f64>, NewtonReport)> {
    let norm = |r: &[f64]| {
        r.iter().zip(mass).fold(0.0f64, |m, (ri, mi)| m.max((ri / mi).abs()))
    };
    let mut r = residual(&x);
    let mut rn = norm(&r);
    let mut iterations = 0;
    let mut polished = false;
    loop {
        if !rn.is_finite() {
            return Err(Error::NewtonFailure { stage, iterations, residual: rn });
        }
        if rn <= opts.tol && (polished || rn == 0.0) {
            break;
        }
        if iterations >= opts.max_iter {
            if rn <= opts.tol {
                break;
            }
            return Err(Error::NewtonFailure { stage, iterations, residual: rn });
        }
        let chol = jacobian(&x).factor()?;
        let mut dx = r.clone();
        chol.solve_in_place(&mut dx);
        iterations += 1;

        if rn <= opts.tol {
            // One extra full step from inside the tolerance pushes the
            // residual to rounding level; keep it only if it helped.
            polished = true;
            let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a - d).collect();
            let rt = residual(&trial);
            let tn = norm(&rt);
            if tn <= rn {
                x = trial;
                r = rt;
                rn = tn;
            }
            continue;
        }

        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..=opts.max_halvings {
            let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a - t * d).collect();
            let rt = residual(&trial);
            let tn = norm(&rt);
            if tn.is_finite() && tn < rn {
                x = trial;
                r = rt;
                rn = tn;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(Error::NewtonFailure { stage, iterations, residual: rn });
        }
    }
    Ok((x, NewtonReport { iterations, residual: rn }))
}

/// Advances the phase by one step:
/// `(φ − φ_old)/h − Δφ + φ³ − φ_old = 1/θ_c − 1/θ_old` with `∂_ν φ = 0`.
pub fn step_phi(
    grid: &Grid,
    phi_old: &ScalarField,
    theta_old: &ScalarField,
    theta_c: f64,
    h: f64,
    opts: &NewtonOptions,
) -> Result<(ScalarField, NewtonReport)> {
    phi_old.check(grid)?;
    theta_old.check(grid)?;
    if !(h > 0.0) {
        return Err(Error::Domain { what: "time step", value: h });
    }
    if !(theta_old.min() > 0.0) {
        return Err(Error::Domain { what: "temperature", value: theta_old.min() });
    }
    let mass = grid.mass();
    let rhs: Vec<f64> = (0..grid.node_count())
        .map(|i| mass[i] * (phi_old[i] / h + phi_old[i] + 1.0 / theta_c - 1.0 / theta_old[i]))
        .collect();
    let residual = |x: &[f64]| {
        let mut f: Vec<f64> = (0..x.len())
            .map(|i| mass[i] * (x[i] / h + x[i] * x[i] * x[i]) - rhs[i])
            .collect();
        grid.add_stiffness(x, &mut f);
        f
    };
    let jacobian = |x: &[f64]| {
        let mut a = stiffness_band(grid);
        let d: Vec<f64> = (0..x.len()).map(|i| mass[i] * (1.0 / h + 3.0 * x[i] * x[i])).collect();
        a.add_diag(&d);
        a
    };
    let (x, report) = damped_newton(phi_old.0.clone(), mass, opts, "phase", residual, jacobian)?;
    Ok((ScalarField(x), report))
}

/// Advances the temperature by one step. Solves for `w = β(θ)`
/// `(β⁻¹(w) − θ_old)/h − Δw + (φ_new − φ_old)/h = u` with Robin data `v`,
/// and returns `θ = β⁻¹(w)`.
#[allow(clippy::too_many_arguments)]
pub fn step_theta(
    grid: &Grid,
    robin: &RobinOperator,
    theta_old: &ScalarField,
    phi_old: &ScalarField,
    phi_new: &ScalarField,
    u: &ScalarField,
    v: &BoundaryField,
    h: f64,
    opts: &NewtonOptions,
) -> Result<(ScalarField, NewtonReport)> {
    for f in [theta_old, phi_old, phi_new, u] {
        f.check(grid)?;
    }
    v.check(grid)?;
    robin.check(grid)?;
    if !(h > 0.0) {
        return Err(Error::Domain { what: "time step", value: h });
    }
    if !(theta_old.min() > 0.0) {
        return Err(Error::Domain { what: "temperature", value: theta_old.min() });
    }
    let mass = grid.mass();
    let ba = robin.weighted_alpha();
    let mut rhs: Vec<f64> = (0..grid.node_count())
        .map(|i| mass[i] * (theta_old[i] / h - (phi_new[i] - phi_old[i]) / h + u[i]))
        .collect();
    for (s, &n) in grid.boundary_index().iter().enumerate() {
        rhs[n] += ba[s] * v[s];
    }
    let residual = |w: &[f64]| {
        let mut f: Vec<f64> = (0..w.len())
            .map(|i| mass[i] * beta_inverse(w[i]) / h - rhs[i])
            .collect();
        grid.add_stiffness(w, &mut f);
        for (s, &n) in grid.boundary_index().iter().enumerate() {
            f[n] += ba[s] * w[n];
        }
        f
    };
    let jacobian = |w: &[f64]| {
        let mut a = robin_band(grid, robin);
        let d: Vec<f64> = (0..w.len()).map(|i| mass[i] * beta_inverse_prime(w[i]) / h).collect();
        a.add_diag(&d);
        a
    };
    let w0: Vec<f64> = theta_old.iter().map(|&t| beta_unchecked(t)).collect();
    let (w, report) = damped_newton(w0, mass, opts, "temperature", residual, jacobian)?;
    Ok((ScalarField(w.into_iter().map(beta_inverse).collect()), report))
}

/// Banded copy of the stiffness matrix `K`.
pub(crate) fn stiffness_band(grid: &Grid) -> BandedSpd {
    let mut a = BandedSpd::zeros(grid.node_count(), grid.bandwidth());
    a.add_diag(grid.stiffness_diag());
    for c in grid.stiffness() {
        a.add(c.b, c.a, c.value);
    }
    a
}

/// Banded `K + Bα`.
pub(crate) fn robin_band(grid: &Grid, robin: &RobinOperator) -> BandedSpd {
    let mut a = stiffness_band(grid);
    for (s, &n) in grid.boundary_index().iter().enumerate() {
        a.add(n, n, robin.weighted_alpha()[s]);
    }
    a
}

/// Marches `nt` steps (phase first, then temperature) and records diagnostics.
///
/// Box constraints on the controls are not enforced here; the optimizer owns them.
pub fn solve_state(
    grid: &Grid,
    robin: &RobinOperator,
    params: &ModelParams,
    init: &InitialData,
    controls: &ControlSet,
    opts: &NewtonOptions,
) -> Result<StateTrajectory> {
    init.validate(grid)?;
    controls.check(grid, params.nt)?;
    let h = params.dt();
    let mut theta = Vec::with_capacity(params.nt + 1);
    let mut phi = Vec::with_capacity(params.nt + 1);
    let mut diagnostics = Vec::with_capacity(params.nt);
    theta.push(init.theta0.clone());
    phi.push(init.phi0.clone());
    for k in 0..params.nt {
        let wrap = |e: Error| Error::Step { step: k + 1, source: Box::new(e) };
        let (phi_new, phi_newton) =
            step_phi(grid, &phi[k], &theta[k], params.theta_c, h, opts).map_err(wrap)?;
        let (theta_new, theta_newton) = step_theta(
            grid,
            robin,
            &theta[k],
            &phi[k],
            &phi_new,
            &controls.u[k],
            &controls.v[k],
            h,
            opts,
        )
        .map_err(wrap)?;
        let balance_residual = heat_balance_residual(
            grid, robin, &theta[k], &theta_new, &phi[k], &phi_new, &controls.u[k], &controls.v[k], h,
        );
        diagnostics.push(StepDiagnostics {
            min_theta: theta_new.min(),
            max_theta: theta_new.max(),
            max_abs_phi: phi_new.max_abs(),
            balance_residual,
            phi_newton,
            theta_newton,
        });
        theta.push(theta_new);
        phi.push(phi_new);
    }
    Ok(StateTrajectory { theta, phi, diagnostics })
}

/// Relative residual of the integrated heat balance over one step.
#[allow(clippy::too_many_arguments)]
pub fn heat_balance_residual(
    grid: &Grid,
    robin: &RobinOperator,
    theta_old: &ScalarField,
    theta_new: &ScalarField,
    phi_old: &ScalarField,
    phi_new: &ScalarField,
    u: &ScalarField,
    v: &BoundaryField,
    h: f64,
) -> f64 {
    let m = grid.mass();
    let dtheta: f64 = (0..m.len()).map(|i| m[i] * (theta_new[i] - theta_old[i]) / h).sum();
    let dphi: f64 = (0..m.len()).map(|i| m[i] * (phi_new[i] - phi_old[i]) / h).sum();
    let source = dot(m, u);
    let flux: f64 = grid
        .boundary_index()
        .iter()
        .enumerate()
        .map(|(s, &n)| robin.weighted_alpha()[s] * (beta_unchecked(theta_new[n]) - v[s]))
        .sum();
    let scale = 1f64.max(dtheta.abs() + dphi.abs() + source.abs() + flux.abs());
    (dtheta + dphi - source + flux).abs() / scale
}

/// Discrete Allen-Cahn energy `∫ |∇φ|²/2 + (φ² − 1)²/4`.
pub fn allen_cahn_energy(grid: &Grid, phi: &ScalarField) -> f64 {
    let mut kphi = vec![0.0; grid.node_count()];
    grid.add_stiffness(phi, &mut kphi);
    let well: f64 = phi
        .iter()
        .zip(grid.mass())
        .map(|(p, m)| m * (p * p - 1.0).powi(2) / 4.0)
        .sum();
    0.5 * dot(&kphi, phi) + well
}

/// `‖θ_a − θ_b‖²_{L²(Q)} / (‖u_a − u_b‖_{L²(Q)} + ‖v_a − v_b‖²_{L²(Σ)})`, the
/// quantity bounded by the continuous-dependence estimate. Monitoring only.
pub fn continuous_dependence_ratio(
    grid: &Grid,
    params: &ModelParams,
    a: (&StateTrajectory, &ControlSet),
    b: (&StateTrajectory, &ControlSet),
) -> f64 {
    let m = grid.mass();
    let theta_sq: f64 = a
        .0
        .theta
        .iter()
        .zip(&b.0.theta)
        .enumerate()
        .map(|(n, (x, y))| {
            params.level_weight(n) * (0..m.len()).map(|i| m[i] * (x[i] - y[i]).powi(2)).sum::<f64>()
        })
        .sum();
    let diff = a.1.axpy(-1.0, b.1);
    let [du, dv, _] = diff.slot_dots(&diff, grid, params);
    theta_sq / (du.sqrt() + dv)
}

/// Grid, Robin data, model parameters and initial data bundled together.
#[derive(Debug, Clone)]
pub struct Problem {
    pub grid: Grid,
    pub robin: RobinOperator,
    pub params: ModelParams,
    pub init: InitialData,
    pub newton: NewtonOptions,
}

impl Problem {
    pub fn new(grid: Grid, robin: RobinOperator, params: ModelParams, init: InitialData) -> Result<Self> {
        params.validate(&grid)?;
        init.validate(&grid)?;
        robin.check(&grid)?;
        Ok(Self { grid, robin, params, init, newton: NewtonOptions::default() })
    }

    pub fn solve_state(&self, controls: &ControlSet) -> Result<StateTrajectory> {
        solve_state(&self.grid, &self.robin, &self.params, &self.init, controls, &self.newton)
    }
}
