//! Tangent (system in variations) and adjoint (dual system) solvers.
//!
//! The tangent solver differentiates the discrete step maps of
//! [`crate::state`] exactly: the phase step linearizes the cubic to
//! `(3φ² − 1)Φ` and the source to `Y/θ²`, the temperature step linearizes
//! `β(θ)` to `β'(θ)Y` in the interior and on the Robin boundary.
//!
//! The adjoint solver is the transpose of that map, applied backward in time
//! (temperature step first, then phase step, inside each slot). It is the
//! discrete counterpart of
//!
//! ```text
//!   p_t + β'(θ)Δp + q/θ² = −I₁
//!   q_t + Δq − (3φ² − 1)q + p_t = −I₂
//!   ∂_ν p + α p = 0,  ∂_ν q = 0,  p(T) = q(T) = 0
//! ```
//!
//! and satisfies the duality identity
//! `Σ_Q I₁Y + Σ_Q I₂Φ = Σ_Q ũ p + Σ_Σ α ṽ p` to rounding.
//!
//! Like the controls, `p[k]` and `q[k]` belong to the step from level `k` to
//! `k + 1`; the terminal entries `p[nt]`, `q[nt]` are zero.

use crate::convex::{beta_prime_unchecked, ConvexContext};
use crate::discretization::{check_series, BoundaryField, ScalarField};
use crate::error::{Error, Result};
use crate::linalg::BandedCholesky;
use crate::state::{robin_band, stiffness_band, ControlSet, Problem, StateTrajectory};

/// Temperature and phase variations `(Y, Φ)` on the `nt + 1` levels.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentPair {
    pub y: Vec<ScalarField>,
    pub phi: Vec<ScalarField>,
}

/// Dual variables `(p, q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointPair {
    pub p: Vec<ScalarField>,
    pub q: Vec<ScalarField>,
}

/// Right-hand sides of the dual system and the selection `ξ ∈ ∂j(θ)`, all on
/// the `nt + 1` state levels.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointSources {
    pub i1: Vec<ScalarField>,
    pub i2: Vec<ScalarField>,
    pub i3: Vec<ScalarField>,
    pub xi: Vec<ScalarField>,
}

/// How the interface term of the cost is treated.
#[derive(Debug, Clone, PartialEq)]
pub enum Mode {
    /// Envelope `j_σ` plus quadratic anchoring of the three controls.
    Penalized { sigma: f64, anchors: ControlSet },
    /// Envelope `j_σ` without anchoring.
    Smoothed { sigma: f64 },
    /// Exact `j`, with `ξ = sign(θ − θ_c)` and `ξ = at_kink` where `θ = θ_c`.
    Limit { at_kink: f64 },
}

impl Mode {
    pub fn limit() -> Self {
        Mode::Limit { at_kink: 0.0 }
    }

    pub fn sigma(&self) -> Option<f64> {
        match self {
            Mode::Penalized { sigma, .. } | Mode::Smoothed { sigma } => Some(*sigma),
            Mode::Limit { .. } => None,
        }
    }

    pub fn anchors(&self) -> Option<&ControlSet> {
        match self {
            Mode::Penalized { anchors, .. } => Some(anchors),
            _ => None,
        }
    }

    pub(crate) fn validate(&self, problem: &Problem) -> Result<()> {
        match self {
            Mode::Penalized { sigma, anchors } => {
                check_sigma(*sigma)?;
                anchors.check(&problem.grid, problem.params.nt)
            }
            Mode::Smoothed { sigma } => check_sigma(*sigma),
            Mode::Limit { at_kink } => {
                if !(at_kink.abs() <= 1.0) {
                    return Err(Error::Domain { what: "selection at the kink", value: *at_kink });
                }
                Ok(())
            }
        }
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain { what: "Moreau-Yosida parameter", value: sigma })
    }
}

pub(crate) fn check_eps(eps: f64) -> Result<()> {
    // +∞ switches the interface term off
    if eps > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain { what: "interface penalty eps", value: eps })
    }
}

fn check_state(problem: &Problem, state: &StateTrajectory) -> Result<()> {
    let levels = problem.params.nt + 1;
    check_series(&state.theta, levels, |f| f.check(&problem.grid))?;
    check_series(&state.phi, levels, |f| f.check(&problem.grid))
}

/// Step Jacobians of a trajectory, factored once and shared by the tangent
/// and adjoint sweeps.
pub struct Linearization<'a> {
    problem: &'a Problem,
    // per step k (0..nt): factors at level k + 1
    phase: Vec<BandedCholesky>,
    temperature: Vec<BandedCholesky>,
    // dθ/dw at level k + 1
    dtheta_dw: Vec<ScalarField>,
    // 1/θ² at level k
    inv_theta_sq: Vec<ScalarField>,
}

impl<'a> Linearization<'a> {
    pub fn new(problem: &'a Problem, state: &StateTrajectory) -> Result<Self> {
        check_state(problem, state)?;
        let grid = &problem.grid;
        let mass = grid.mass();
        let h = problem.params.dt();
        let nt = problem.params.nt;
        let mut phase = Vec::with_capacity(nt);
        let mut temperature = Vec::with_capacity(nt);
        let mut dtheta_dw = Vec::with_capacity(nt);
        let mut inv_theta_sq = Vec::with_capacity(nt);
        for k in 0..nt {
            let phi = &state.phi[k + 1];
            let mut a = stiffness_band(grid);
            a.add_diag(&(0..mass.len()).map(|i| mass[i] * (1.0 / h + 3.0 * phi[i] * phi[i])).collect::<Vec<_>>());
            phase.push(a.factor()?);

            let e = state.theta[k + 1].map(|t| 1.0 / beta_prime_unchecked(t));
            let mut b = robin_band(grid, &problem.robin);
            b.add_diag(&(0..mass.len()).map(|i| mass[i] * e[i] / h).collect::<Vec<_>>());
            temperature.push(b.factor()?);
            dtheta_dw.push(e);
            inv_theta_sq.push(state.theta[k].map(|t| 1.0 / (t * t)));
        }
        Ok(Self { problem, phase, temperature, dtheta_dw, inv_theta_sq })
    }

    /// Forward sweep of the system in variations for directions `(ũ, ṽ)`.
    pub fn tangent(&self, u_dir: &[ScalarField], v_dir: &[BoundaryField]) -> Result<TangentPair> {
        let grid = &self.problem.grid;
        let nt = self.problem.params.nt;
        check_series(u_dir, nt, |f| f.check(grid))?;
        check_series(v_dir, nt, |f| f.check(grid))?;
        let mass = grid.mass();
        let ba = self.problem.robin.weighted_alpha();
        let h = self.problem.params.dt();
        let n = grid.node_count();

        let mut y = vec![ScalarField::zeros(grid)];
        let mut phi = vec![ScalarField::zeros(grid)];
        for k in 0..nt {
            let (yk, pk) = (&y[k], &phi[k]);
            let mut rhs: Vec<f64> = (0..n)
                .map(|i| mass[i] * ((1.0 / h + 1.0) * pk[i] + self.inv_theta_sq[k][i] * yk[i]))
                .collect();
            self.phase[k].solve_in_place(&mut rhs);
            let phi_next = ScalarField(rhs);

            let mut rhs: Vec<f64> = (0..n)
                .map(|i| mass[i] * ((yk[i] - phi_next[i] + pk[i]) / h + u_dir[k][i]))
                .collect();
            for (s, &node) in grid.boundary_index().iter().enumerate() {
                rhs[node] += ba[s] * v_dir[k][s];
            }
            self.temperature[k].solve_in_place(&mut rhs);
            let y_next = ScalarField((0..n).map(|i| self.dtheta_dw[k][i] * rhs[i]).collect());
            y.push(y_next);
            phi.push(phi_next);
        }
        Ok(TangentPair { y, phi })
    }

    /// Backward sweep: transpose of [`Linearization::tangent`] applied to the sources.
    pub fn adjoint(&self, i1: &[ScalarField], i2: &[ScalarField]) -> Result<AdjointPair> {
        let grid = &self.problem.grid;
        let params = &self.problem.params;
        let nt = params.nt;
        check_series(i1, nt + 1, |f| f.check(grid))?;
        check_series(i2, nt + 1, |f| f.check(grid))?;
        let mass = grid.mass();
        let h = params.dt();
        let n = grid.node_count();

        // cotangents of Y^n and Φ^n, seeded by the cost derivative
        let mut ybar: Vec<Vec<f64>> = (0..=nt)
            .map(|l| (0..n).map(|i| params.level_weight(l) * mass[i] * i1[l][i]).collect())
            .collect();
        let mut phibar: Vec<Vec<f64>> = (0..=nt)
            .map(|l| (0..n).map(|i| params.level_weight(l) * mass[i] * i2[l][i]).collect())
            .collect();
        let mut p = vec![ScalarField::zeros(grid); nt + 1];
        let mut q = vec![ScalarField::zeros(grid); nt + 1];

        for k in (0..nt).rev() {
            // temperature step
            let mut r: Vec<f64> = (0..n).map(|i| self.dtheta_dw[k][i] * ybar[k + 1][i]).collect();
            self.temperature[k].solve_in_place(&mut r);
            for i in 0..n {
                let c = mass[i] * r[i] / h;
                ybar[k][i] += c;
                phibar[k + 1][i] -= c;
                phibar[k][i] += c;
            }
            // phase step
            let mut s = phibar[k + 1].clone();
            self.phase[k].solve_in_place(&mut s);
            for i in 0..n {
                phibar[k][i] += mass[i] * (1.0 / h + 1.0) * s[i];
                ybar[k][i] += mass[i] * self.inv_theta_sq[k][i] * s[i];
            }
            p[k] = ScalarField(r.into_iter().map(|x| x / h).collect());
            q[k] = ScalarField(s.into_iter().map(|x| x / h).collect());
        }
        Ok(AdjointPair { p, q })
    }
}

/// Solves the system in variations around `state` for the direction `(ũ, ṽ)`.
pub fn solve_tangent(
    problem: &Problem,
    state: &StateTrajectory,
    u_dir: &[ScalarField],
    v_dir: &[BoundaryField],
) -> Result<TangentPair> {
    Linearization::new(problem, state)?.tangent(u_dir, v_dir)
}

/// Solves the dual system backward from `p(T) = q(T) = 0`.
pub fn solve_adjoint(problem: &Problem, state: &StateTrajectory, sources: &AdjointSources) -> Result<AdjointPair> {
    Linearization::new(problem, state)?.adjoint(&sources.i1, &sources.i2)
}

/// Assembles `I₁ = 2λ₁(θ − θ_f) + (ξ − η)/ε`, `I₂ = 2λ₂(φ − η)`,
/// `I₃ = −2λ₂(φ − η) + (θ_c − θ)/ε`. `eps = ∞` drops the `1/ε` terms.
pub fn build_sources(
    problem: &Problem,
    state: &StateTrajectory,
    controls: &ControlSet,
    eps: f64,
    mode: &Mode,
) -> Result<AdjointSources> {
    check_state(problem, state)?;
    check_eps(eps)?;
    mode.validate(problem)?;
    let grid = &problem.grid;
    let params = &problem.params;
    controls.check(grid, params.nt)?;
    let ctx = ConvexContext::new(params.theta_c)?;
    let inv_eps = 1.0 / eps;
    let (l1, l2, tc) = (params.lambda1, params.lambda2, params.theta_c);

    let levels = params.nt + 1;
    let mut out = AdjointSources {
        i1: Vec::with_capacity(levels),
        i2: Vec::with_capacity(levels),
        i3: Vec::with_capacity(levels),
        xi: Vec::with_capacity(levels),
    };
    for n in 0..levels {
        let (th, ph, eta, tf) = (&state.theta[n], &state.phi[n], &controls.eta[n], &params.theta_f[n]);
        let xi = match mode {
            Mode::Penalized { sigma, .. } | Mode::Smoothed { sigma } => {
                th.map(|t| ctx.moreau_jprime_unchecked(t, *sigma))
            }
            Mode::Limit { at_kink } => th.map(|t| ctx.select(t, *at_kink)),
        };
        let i1 = ScalarField(
            (0..th.len())
                .map(|i| 2.0 * l1 * (th[i] - tf[i]) + interface(inv_eps, xi[i] - eta[i]))
                .collect(),
        );
        let i2 = ScalarField((0..th.len()).map(|i| 2.0 * l2 * (ph[i] - eta[i])).collect());
        let i3 = ScalarField(
            (0..th.len())
                .map(|i| -2.0 * l2 * (ph[i] - eta[i]) + interface(inv_eps, tc - th[i]))
                .collect(),
        );
        out.i1.push(i1);
        out.i2.push(i2);
        out.i3.push(i3);
        out.xi.push(xi);
    }
    Ok(out)
}

// (1/ε)·x with 1/∞ = 0 taking precedence over any finite x
#[inline]
pub(crate) fn interface(inv_eps: f64, x: f64) -> f64 {
    if inv_eps == 0.0 {
        0.0
    } else {
        inv_eps * x
    }
}

/// Riesz representers of the reduced cost derivative in the discrete
/// `L²(Q) × L²(Σ) × L²(Q)` inner products.
///
/// Penalized mode: `(p + 2(u − u*), αp + 2(v − v*), I₃ + 2(η − η*))`;
/// smoothed and limit modes: `(p, αp, I₃)`.
pub fn reduced_gradient(
    problem: &Problem,
    adjoint: &AdjointPair,
    sources: &AdjointSources,
    controls: &ControlSet,
    mode: &Mode,
) -> Result<ControlSet> {
    let grid = &problem.grid;
    let nt = problem.params.nt;
    controls.check(grid, nt)?;
    mode.validate(problem)?;
    check_series(&adjoint.p, nt + 1, |f| f.check(grid))?;
    check_series(&sources.i3, nt + 1, |f| f.check(grid))?;
    let alpha = problem.robin.alpha();

    let mut g = ControlSet {
        u: adjoint.p[..nt].to_vec(),
        v: adjoint.p[..nt]
            .iter()
            .map(|p| p.trace(grid).zip_map(alpha, |p, a| a * p))
            .collect(),
        eta: sources.i3.clone(),
    };
    if let Mode::Penalized { anchors, .. } = mode {
        let diff = controls.axpy(-1.0, anchors);
        g = g.axpy(2.0, &diff);
    }
    Ok(g)
}
