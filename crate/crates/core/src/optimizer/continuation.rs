use log::info;
use serde::{Deserialize, Serialize};

use super::cost::fenchel_gap_integral;
use super::pg::{optimize, Objective, OptimizationResult, OptimizeOptions};
use crate::error::{Error, Result};
use crate::state::{ControlSet, Problem};

/// Decreasing penalty schedules. Each `ε` gets one exact-`j` stage followed by
/// one envelope stage per `σ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    pub eps: Vec<f64>,
    #[serde(default)]
    pub sigma: Vec<f64>,
}

impl Schedule {
    pub fn validate(&self) -> Result<()> {
        for (name, list) in [("eps", &self.eps), ("sigma", &self.sigma)] {
            if list.iter().any(|&x| !(x > 0.0)) {
                return Err(Error::InvalidParameter(format!("{name} schedule must be positive")));
            }
            if list.windows(2).any(|w| !(w[1] < w[0])) {
                return Err(Error::InvalidParameter(format!("{name} schedule must be strictly decreasing")));
            }
        }
        if self.eps.is_empty() {
            return Err(Error::InvalidParameter("eps schedule is empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct StageResult {
    pub eps: f64,
    pub sigma: Option<f64>,
    pub result: OptimizationResult,
    /// `ζ = ∫_Q (j(θ) + η θ_c − η θ)` at the stage optimum.
    pub zeta: f64,
    /// `‖u − u_prev‖_{L²(Q)}` against the previous stage of the same kind
    /// (previous `σ` at this `ε`, or previous `ε`).
    pub drift: Option<f64>,
}

fn u_distance(problem: &Problem, a: &ControlSet, b: &ControlSet) -> f64 {
    let d = a.axpy(-1.0, b);
    d.slot_dots(&d, &problem.grid, &problem.params)[0].sqrt()
}

/// Runs the stages in order, warm-starting each from the previous optimum.
/// Envelope stages are anchored at the exact-`j` optimum of their `ε`.
pub fn continuation(
    problem: &Problem,
    schedule: &Schedule,
    init: &ControlSet,
    opts: &OptimizeOptions,
) -> Result<Vec<StageResult>> {
    schedule.validate()?;
    let mut stages: Vec<StageResult> = Vec::new();
    let mut incumbent = init.clone();
    let mut prev_eps_u: Option<ControlSet> = None;
    for &eps in &schedule.eps {
        let wrap = |sigma| move |e: Error| Error::Stage { eps, sigma, source: Box::new(e) };
        let res = optimize(problem, &Objective::limit(eps), &incumbent, opts).map_err(wrap(None))?;
        let zeta = fenchel_gap_integral(problem, &res.state, &res.controls).map_err(wrap(None))?;
        let drift = prev_eps_u.as_ref().map(|p| u_distance(problem, &res.controls, p));
        info!("eps {eps}: cost {:.6e} zeta {zeta:.6e} residual {:.2e}", res.cost.total, res.residual);
        let anchors = res.controls.clone();
        prev_eps_u = Some(anchors.clone());
        incumbent = anchors.clone();
        stages.push(StageResult { eps, sigma: None, result: res, zeta, drift });

        let mut prev_sigma: Option<ControlSet> = None;
        for &sigma in &schedule.sigma {
            let obj = Objective::penalized(eps, sigma, anchors.clone());
            let res = optimize(problem, &obj, &incumbent, opts).map_err(wrap(Some(sigma)))?;
            let zeta = fenchel_gap_integral(problem, &res.state, &res.controls).map_err(wrap(Some(sigma)))?;
            let drift = prev_sigma.as_ref().map(|p| u_distance(problem, &res.controls, p));
            info!("eps {eps} sigma {sigma}: cost {:.6e} residual {:.2e}", res.cost.total, res.residual);
            prev_sigma = Some(res.controls.clone());
            incumbent = res.controls.clone();
            stages.push(StageResult { eps, sigma: Some(sigma), result: res, zeta, drift });
        }
    }
    Ok(stages)
}
