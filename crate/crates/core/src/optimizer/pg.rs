use log::debug;
use serde::Serialize;

use super::bangbang::{bang_bang_classify, BangBangReport};
use super::cost::{cost_with_mode, CostReport};
use super::projection::{is_feasible, project_controls};
use crate::adjoint::{build_sources, interface, AdjointPair, AdjointSources, Linearization, Mode};
use crate::error::{Error, Result};
use crate::state::{ControlSet, Problem, StateTrajectory};

/// Which regularized problem is being minimized.
#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    /// Interface penalty; `f64::INFINITY` removes the Fenchel term.
    pub eps: f64,
    pub mode: Mode,
}

impl Objective {
    pub fn limit(eps: f64) -> Self {
        Self { eps, mode: Mode::limit() }
    }

    pub fn penalized(eps: f64, sigma: f64, anchors: ControlSet) -> Self {
        Self { eps, mode: Mode::Penalized { sigma, anchors } }
    }
}

/// Projected-gradient settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizeOptions {
    /// Relative stationarity tolerance.
    pub tol: f64,
    pub max_iter: usize,
    pub armijo_c: f64,
    pub backtrack: f64,
    pub initial_step: f64,
    pub max_backtracks: usize,
    /// Replace η by its exact pointwise minimizer after each accepted step.
    pub exact_eta: bool,
    /// Bang-bang threshold relative to `max |p|`.
    pub tol_p_rel: f64,
    /// Bang-bang threshold for `I₃`.
    pub tol_i3: f64,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 200,
            armijo_c: 1e-4,
            backtrack: 0.5,
            initial_step: 1.0,
            max_backtracks: 40,
            exact_eta: true,
            tol_p_rel: 1e-6,
            tol_i3: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistoryEntry {
    pub iteration: usize,
    pub cost: f64,
    pub residual: f64,
    /// Accepted step length (0 for the initial point).
    pub step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Termination {
    Converged,
    BudgetExhausted,
    LineSearchFailed,
}

/// Everything known at one control iterate.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub state: StateTrajectory,
    pub cost: CostReport,
    pub sources: AdjointSources,
    pub adjoint: AdjointPair,
    pub gradient: ControlSet,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub controls: ControlSet,
    pub state: StateTrajectory,
    pub adjoint: AdjointPair,
    pub sources: AdjointSources,
    pub gradient: ControlSet,
    pub cost: CostReport,
    pub residual: f64,
    pub history: Vec<HistoryEntry>,
    pub termination: Termination,
    pub kkt: BangBangReport,
}

impl OptimizationResult {
    pub fn iterations(&self) -> usize {
        self.history.len() - 1
    }
}

/// Forward solve and cost.
pub fn evaluate_cost(problem: &Problem, obj: &Objective, controls: &ControlSet) -> Result<(StateTrajectory, CostReport)> {
    let state = problem.solve_state(controls)?;
    let cost = cost_with_mode(problem, &state, controls, obj.eps, &obj.mode)?;
    Ok((state, cost))
}

/// Forward solve, cost, adjoint, gradient and stationarity residual.
pub fn evaluate(problem: &Problem, obj: &Objective, controls: &ControlSet) -> Result<Evaluation> {
    let (state, cost) = evaluate_cost(problem, obj, controls)?;
    complete(problem, obj, controls, state, cost)
}

fn complete(
    problem: &Problem,
    obj: &Objective,
    controls: &ControlSet,
    state: StateTrajectory,
    cost: CostReport,
) -> Result<Evaluation> {
    let sources = build_sources(problem, &state, controls, obj.eps, &obj.mode)?;
    let adjoint = Linearization::new(problem, &state)?.adjoint(&sources.i1, &sources.i2)?;
    let gradient = crate::adjoint::reduced_gradient(problem, &adjoint, &sources, controls, &obj.mode)?;
    let residual = stationarity_residual(problem, controls, &gradient);
    Ok(Evaluation { state, cost, sources, adjoint, gradient, residual })
}

/// `‖c − P(c − g)‖ / max(1, ‖c‖)` in the control inner product.
pub fn stationarity_residual(problem: &Problem, controls: &ControlSet, gradient: &ControlSet) -> f64 {
    let (grid, params) = (&problem.grid, &problem.params);
    let stepped = project_controls(&controls.axpy(-1.0, gradient), params);
    let d = controls.axpy(-1.0, &stepped);
    d.norm(grid, params) / controls.norm(grid, params).max(1.0)
}

/// Exact minimizer of the cost in `η` at fixed state: pointwise
/// `a η² + b η` over `[−1, 1]`.
pub fn minimize_eta(problem: &Problem, obj: &Objective, state: &StateTrajectory, controls: &ControlSet) -> ControlSet {
    let params = &problem.params;
    let inv_eps = 1.0 / obj.eps;
    let anchors = obj.mode.anchors();
    let a = params.lambda2 + if anchors.is_some() { 1.0 } else { 0.0 };
    let mut out = controls.clone();
    for n in 0..=params.nt {
        for i in 0..problem.grid.node_count() {
            let mut b = -2.0 * params.lambda2 * state.phi[n][i] + interface(inv_eps, params.theta_c - state.theta[n][i]);
            if let Some(c) = anchors {
                b -= 2.0 * c.eta[n][i];
            }
            out.eta[n][i] = if a > 0.0 {
                (-b / (2.0 * a)).clamp(-1.0, 1.0)
            } else if b > 0.0 {
                -1.0
            } else if b < 0.0 {
                1.0
            } else {
                controls.eta[n][i]
            };
        }
    }
    out
}

/// Projected gradient with Armijo backtracking from a feasible `init`.
pub fn optimize(problem: &Problem, obj: &Objective, init: &ControlSet, opts: &OptimizeOptions) -> Result<OptimizationResult> {
    init.check(&problem.grid, problem.params.nt)?;
    if !is_feasible(init, &problem.params) {
        return Err(Error::InvalidParameter("initial controls violate the control boxes".into()));
    }
    let grid = &problem.grid;
    let params = &problem.params;
    let wrap = |iteration: usize| move |e: Error| Error::Iterate { iteration, source: Box::new(e) };

    let mut controls = init.clone();
    let mut ev = evaluate(problem, obj, &controls).map_err(wrap(0))?;
    let mut history = vec![HistoryEntry { iteration: 0, cost: ev.cost.total, residual: ev.residual, step: 0.0 }];
    let mut termination = Termination::BudgetExhausted;

    for it in 1..=opts.max_iter + 1 {
        if ev.residual <= opts.tol {
            termination = Termination::Converged;
            break;
        }
        if it > opts.max_iter {
            break;
        }
        let mut t = opts.initial_step;
        let mut accepted = None;
        for _ in 0..=opts.max_backtracks {
            let trial = project_controls(&controls.axpy(-t, &ev.gradient), params);
            let d = trial.axpy(-1.0, &controls);
            let decrease = d.dot(&ev.gradient, grid, params);
            let (state, cost) = evaluate_cost(problem, obj, &trial).map_err(wrap(it))?;
            if cost.total < ev.cost.total && cost.total <= ev.cost.total + opts.armijo_c * decrease {
                accepted = Some((trial, state, cost));
                break;
            }
            t *= opts.backtrack;
        }
        let Some((mut trial, state, mut cost)) = accepted else {
            termination = Termination::LineSearchFailed;
            break;
        };
        if opts.exact_eta {
            let better = minimize_eta(problem, obj, &state, &trial);
            let c2 = cost_with_mode(problem, &state, &better, obj.eps, &obj.mode).map_err(wrap(it))?;
            if c2.total <= cost.total {
                trial = better;
                cost = c2;
            }
        }
        controls = trial;
        ev = complete(problem, obj, &controls, state, cost).map_err(wrap(it))?;
        debug!("iter {it}: cost {:.12e} residual {:.3e} step {t:.3e}", ev.cost.total, ev.residual);
        history.push(HistoryEntry { iteration: it, cost: ev.cost.total, residual: ev.residual, step: t });
    }

    let pmax = ev.adjoint.p.iter().map(|f| f.max_abs()).fold(0.0, f64::max);
    let kkt = bang_bang_classify(problem, &controls, &ev.adjoint, &ev.sources, opts.tol_p_rel * pmax, opts.tol_i3)?;
    Ok(OptimizationResult {
        controls,
        state: ev.state,
        adjoint: ev.adjoint,
        sources: ev.sources,
        gradient: ev.gradient,
        cost: ev.cost,
        residual: ev.residual,
        history,
        termination,
        kkt,
    })
}
