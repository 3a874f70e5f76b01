use crate::adjoint::{check_eps, interface, Mode};
use crate::convex::ConvexContext;
use crate::discretization::check_series;
use crate::error::{Error, Result};
use crate::state::{ControlSet, Problem, StateTrajectory};

/// Value of a cost functional split into its parts.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize)]
pub struct CostReport {
    pub total: f64,
    /// `λ₁ ∫_Q (θ − θ_f)²`
    pub tracking_theta: f64,
    /// `λ₂ ∫_Q (φ − η)²`
    pub tracking_phase: f64,
    /// `(1/ε) ∫_Q (j(θ) + η θ_c − η θ)`, with `j_σ` in place of `j` when penalized.
    pub fenchel_term: f64,
    /// Anchor distances, zero outside penalized mode.
    pub penalty_terms: f64,
}

impl CostReport {
    fn finish(mut self) -> Self {
        self.total = self.tracking_theta + self.tracking_phase + self.fenchel_term + self.penalty_terms;
        self
    }
}

fn check_inputs(problem: &Problem, state: &StateTrajectory, controls: &ControlSet) -> Result<()> {
    let levels = problem.params.nt + 1;
    check_series(&state.theta, levels, |f| f.check(&problem.grid))?;
    check_series(&state.phi, levels, |f| f.check(&problem.grid))?;
    controls.check(&problem.grid, problem.params.nt)
}

/// Errors on the first `|η| > 1`.
pub fn check_indicator(controls: &ControlSet) -> Result<()> {
    for (level, eta) in controls.eta.iter().enumerate() {
        if let Some(node) = eta.iter().position(|e| !(e.abs() <= 1.0)) {
            return Err(Error::InfeasibleIndicator { level, node, value: eta[node] });
        }
    }
    Ok(())
}

/// `λ₁ ∫_Q (θ − θ_f)² + λ₂ ∫_Q (φ − η)²` (trapezoid in space and time).
pub fn cost_j(problem: &Problem, state: &StateTrajectory, controls: &ControlSet) -> Result<CostReport> {
    check_inputs(problem, state, controls)?;
    let params = &problem.params;
    let mass = problem.grid.mass();
    let mut rep = CostReport::default();
    for n in 0..=params.nt {
        let tau = params.level_weight(n);
        let (th, ph, eta, tf) = (&state.theta[n], &state.phi[n], &controls.eta[n], &params.theta_f[n]);
        for i in 0..mass.len() {
            rep.tracking_theta += tau * mass[i] * params.lambda1 * (th[i] - tf[i]).powi(2);
            rep.tracking_phase += tau * mass[i] * params.lambda2 * (ph[i] - eta[i]).powi(2);
        }
    }
    Ok(rep.finish())
}

/// `J + (1/ε) ∫_Q (j(θ) + η θ_c − η θ)`; requires `|η| ≤ 1`. `eps = ∞` gives `J`.
pub fn cost_j_eps(problem: &Problem, state: &StateTrajectory, controls: &ControlSet, eps: f64) -> Result<CostReport> {
    cost_with_mode(problem, state, controls, eps, &Mode::limit())
}

/// `J_ε` with `j_σ` in place of `j`, plus `∫_Q (u − u*)² + ∫_Σ (v − v*)² + ∫_Q (η − η*)²`.
pub fn cost_j_eps_sigma(
    problem: &Problem,
    state: &StateTrajectory,
    controls: &ControlSet,
    eps: f64,
    sigma: f64,
    anchors: &ControlSet,
) -> Result<CostReport> {
    cost_with_mode(problem, state, controls, eps, &Mode::Penalized { sigma, anchors: anchors.clone() })
}

/// Cost matching the gradient of [`crate::adjoint::reduced_gradient`] in `mode`.
pub fn cost_with_mode(
    problem: &Problem,
    state: &StateTrajectory,
    controls: &ControlSet,
    eps: f64,
    mode: &Mode,
) -> Result<CostReport> {
    check_eps(eps)?;
    mode.validate(problem)?;
    let mut rep = cost_j(problem, state, controls)?;
    check_indicator(controls)?;
    let params = &problem.params;
    let ctx = ConvexContext::new(params.theta_c)?;
    let mass = problem.grid.mass();
    let inv_eps = 1.0 / eps;
    if inv_eps > 0.0 {
        let mut gap = 0.0;
        for n in 0..=params.nt {
            let tau = params.level_weight(n);
            for (i, (&th, &eta)) in state.theta[n].iter().zip(controls.eta[n].iter()).enumerate() {
                let jv = match mode {
                    Mode::Penalized { sigma, .. } | Mode::Smoothed { sigma } => ctx.moreau_j_unchecked(th, *sigma),
                    Mode::Limit { .. } => ctx.j(th),
                };
                gap += tau * mass[i] * (jv + eta * params.theta_c - eta * th);
            }
        }
        rep.fenchel_term = interface(inv_eps, gap);
    }
    if let Mode::Penalized { anchors, .. } = mode {
        let d = controls.axpy(-1.0, anchors);
        rep.penalty_terms = d.dot(&d, &problem.grid, params);
    }
    Ok(rep.finish())
}

/// Fenchel gap `ζ = ∫_Q (j(θ) + η θ_c − η θ)` with the exact `j`.
pub fn fenchel_gap_integral(problem: &Problem, state: &StateTrajectory, controls: &ControlSet) -> Result<f64> {
    Ok(cost_j_eps(problem, state, controls, 1.0)?.fenchel_term)
}
