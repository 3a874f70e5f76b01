use serde::Serialize;

use crate::adjoint::{AdjointPair, AdjointSources};
use crate::discretization::check_series;
use crate::error::Result;
use crate::state::{ControlSet, Problem};

/// Sign classification of one control slot against its switching function.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlotReport {
    /// Per time entry and node: `1` above `tol`, `-1` below `-tol`, `0` otherwise.
    #[serde(skip)]
    pub map: Vec<Vec<i8>>,
    /// Measure of the points where the control is not at the bound the sign prescribes.
    pub violation: f64,
    /// Measure of the whole slot domain (`|Q|` or `|Σ|`).
    pub measure: f64,
    /// `∫ (c − c_m)(c_M − c)·1{|s| > tol}`.
    pub complementarity: f64,
}

impl SlotReport {
    pub fn fraction(&self) -> f64 {
        self.violation / self.measure
    }
}

/// Bang-bang check of `u` against `p`, `v` against `αp` on Σ and `η` against `I₃`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BangBangReport {
    pub u: SlotReport,
    pub v: SlotReport,
    pub eta: SlotReport,
    pub tol_p: f64,
    pub tol_i3: f64,
}

impl BangBangReport {
    pub fn max_fraction(&self) -> f64 {
        self.u.fraction().max(self.v.fraction()).max(self.eta.fraction())
    }
}

// s > 0 calls for the lower bound, s < 0 for the upper one
fn classify(
    switching: &[&[f64]],
    values: &[&[f64]],
    weights: &[f64],
    step_weights: &[f64],
    (lo, hi): (f64, f64),
    tol: f64,
) -> SlotReport {
    let at = 1e-9 * (hi - lo).abs().max(1.0);
    let mut rep = SlotReport { map: Vec::with_capacity(switching.len()), violation: 0.0, measure: 0.0, complementarity: 0.0 };
    for ((s, c), &tw) in switching.iter().zip(values).zip(step_weights) {
        let mut row = Vec::with_capacity(s.len());
        for i in 0..s.len() {
            let w = tw * weights[i];
            rep.measure += w;
            let sign = if s[i] > tol {
                1
            } else if s[i] < -tol {
                -1
            } else {
                0
            };
            let bad = match sign {
                1 => (c[i] - lo).abs() > at,
                -1 => (c[i] - hi).abs() > at,
                _ => false,
            };
            if bad {
                rep.violation += w;
            }
            if sign != 0 {
                rep.complementarity += w * (c[i] - lo) * (hi - c[i]);
            }
            row.push(sign);
        }
        rep.map.push(row);
    }
    rep
}

/// Partitions Q and Σ by the sign of the switching functions and measures
/// where the controls fail the bang-bang pattern.
pub fn bang_bang_classify(
    problem: &Problem,
    controls: &ControlSet,
    adjoint: &AdjointPair,
    sources: &AdjointSources,
    tol_p: f64,
    tol_i3: f64,
) -> Result<BangBangReport> {
    let grid = &problem.grid;
    let params = &problem.params;
    let nt = params.nt;
    controls.check(grid, nt)?;
    check_series(&adjoint.p, nt + 1, |f| f.check(grid))?;
    check_series(&sources.i3, nt + 1, |f| f.check(grid))?;
    let h = params.dt();
    let alpha = problem.robin.alpha();

    let p: Vec<&[f64]> = adjoint.p[..nt].iter().map(|f| &f[..]).collect();
    let u: Vec<&[f64]> = controls.u.iter().map(|f| &f[..]).collect();
    let u_rep = classify(&p, &u, grid.mass(), &vec![h; nt], params.u_bounds, tol_p);

    let ap: Vec<Vec<f64>> = adjoint.p[..nt]
        .iter()
        .map(|f| f.trace(grid).iter().zip(alpha.iter()).map(|(p, a)| a * p).collect())
        .collect();
    let ap: Vec<&[f64]> = ap.iter().map(|f| &f[..]).collect();
    let v: Vec<&[f64]> = controls.v.iter().map(|f| &f[..]).collect();
    let v_rep = classify(&ap, &v, grid.boundary_weight(), &vec![h; nt], params.v_bounds, tol_p);

    let i3: Vec<&[f64]> = sources.i3.iter().map(|f| &f[..]).collect();
    let eta: Vec<&[f64]> = controls.eta.iter().map(|f| &f[..]).collect();
    let tau: Vec<f64> = (0..=nt).map(|n| params.level_weight(n)).collect();
    let eta_rep = classify(&i3, &eta, grid.mass(), &tau, (-1.0, 1.0), tol_i3);

    Ok(BangBangReport { u: u_rep, v: v_rep, eta: eta_rep, tol_p, tol_i3 })
}
