use crate::state::{ControlSet, ModelParams};

/// Pointwise clamp onto `u ∈ [u_m, u_M]`, `v ∈ [v_m, v_M]`, `η ∈ [−1, 1]`.
pub fn project_controls(raw: &ControlSet, params: &ModelParams) -> ControlSet {
    let (um, uu) = params.u_bounds;
    let (vm, vu) = params.v_bounds;
    ControlSet {
        u: raw.u.iter().map(|f| f.map(|x| x.clamp(um, uu))).collect(),
        v: raw.v.iter().map(|f| f.map(|x| x.clamp(vm, vu))).collect(),
        eta: raw.eta.iter().map(|f| f.map(|x| x.clamp(-1.0, 1.0))).collect(),
    }
}

/// True when every control lies in its box.
pub fn is_feasible(c: &ControlSet, params: &ModelParams) -> bool {
    let inside = |x: f64, (lo, hi): (f64, f64)| x >= lo && x <= hi;
    c.u.iter().all(|f| f.iter().all(|&x| inside(x, params.u_bounds)))
        && c.v.iter().all(|f| f.iter().all(|&x| inside(x, params.v_bounds)))
        && c.eta.iter().all(|f| f.iter().all(|&x| inside(x, (-1.0, 1.0))))
}
