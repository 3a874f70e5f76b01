use std::path::{Path, PathBuf};

use log::warn;
use serde::{Deserialize, Serialize};

use super::io::read_snapshot;
use crate::adjoint::Mode;
use crate::discretization::{BoundaryField, Grid, GridSpec, RobinOperator, ScalarField};
use crate::optimizer::{Objective, OptimizeOptions, Schedule};
use crate::state::{ControlSet, InitialData, ModelParams, NewtonOptions, Problem};

/// Failure to read, parse or validate a run configuration.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("at `{path}`: {source}")]
    Parse { path: String, source: serde_json::Error },
    #[error("`{key}` violates {constraint}: {detail}")]
    Invalid { key: String, constraint: &'static str, detail: String },
}

fn invalid(key: impl Into<String>, constraint: &'static str, detail: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key: key.into(), constraint, detail: detail.into() }
}

/// A scalar quantity sampled at nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    Constant(f64),
    /// `below` left of `at` along `axis`, `above` right of it, their mean on it.
    Step {
        #[serde(default)]
        axis: usize,
        at: f64,
        below: f64,
        above: f64,
    },
    /// Piecewise-linear in one coordinate, held constant outside the table.
    Table {
        #[serde(default)]
        axis: usize,
        x: Vec<f64>,
        values: Vec<f64>,
    },
    /// One value per node in node order.
    Values(Vec<f64>),
    /// A binary snapshot, relative to the config file.
    File(PathBuf),
}

impl FieldSpec {
    fn sample(&self, key: &str, coords: &[[f64; 2]]) -> Result<Vec<f64>, ConfigError> {
        let axis_ok = |axis: usize| {
            if axis < 2 {
                Ok(axis)
            } else {
                Err(invalid(key, "axis in {0, 1}", format!("axis {axis}")))
            }
        };
        match self {
            FieldSpec::Constant(c) => Ok(vec![*c; coords.len()]),
            FieldSpec::Step { axis, at, below, above } => {
                let a = axis_ok(*axis)?;
                Ok(coords
                    .iter()
                    .map(|c| {
                        if c[a] < *at {
                            *below
                        } else if c[a] > *at {
                            *above
                        } else {
                            0.5 * (below + above)
                        }
                    })
                    .collect())
            }
            FieldSpec::Table { axis, x, values } => {
                let a = axis_ok(*axis)?;
                if x.is_empty() || x.len() != values.len() {
                    return Err(invalid(key, "table shape", format!("{} abscissae, {} values", x.len(), values.len())));
                }
                if x.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(invalid(key, "table shape", "abscissae must increase strictly"));
                }
                Ok(coords.iter().map(|c| interpolate(x, values, c[a])).collect())
            }
            FieldSpec::Values(v) => {
                if v.len() != coords.len() {
                    return Err(invalid(key, "field length", format!("expected {}, found {}", coords.len(), v.len())));
                }
                Ok(v.clone())
            }
            FieldSpec::File(p) => Err(invalid(key, "resolved file", format!("{} was not loaded", p.display()))),
        }
    }

    fn resolve(&mut self, key: &str, base: &Path, grid: &GridSpec) -> Result<(), ConfigError> {
        if let FieldSpec::File(p) = self {
            let path = base.join(&p);
            let snap = read_snapshot(&path).map_err(|source| ConfigError::Io { path: path.clone(), source })?;
            let counts = [grid.counts.first().copied().unwrap_or(0), grid.counts.get(1).copied().unwrap_or(1)];
            if snap.dim as usize != grid.dim || [snap.nx as usize, snap.ny as usize] != counts {
                return Err(invalid(key, "snapshot matches grid", format!("{} has a different shape", path.display())));
            }
            *self = FieldSpec::Values(snap.data);
        }
        Ok(())
    }
}

fn interpolate(x: &[f64], v: &[f64], t: f64) -> f64 {
    if t <= x[0] {
        return v[0];
    }
    let i = x.partition_point(|&xi| xi <= t);
    if i == x.len() {
        return v[i - 1];
    }
    let s = (t - x[i - 1]) / (x[i] - x[i - 1]);
    v[i - 1] + s * (v[i] - v[i - 1])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    pub t_final: f64,
    pub nt: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSpec {
    pub theta_c: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    /// Time-independent target; defaults to `θ_c`.
    pub theta_f: Option<FieldSpec>,
    /// One target per time level, overriding `theta_f`.
    pub theta_f_steps: Option<Vec<FieldSpec>>,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self { theta_c: 1.0, lambda1: 1.0, lambda2: 1.0, theta_f: None, theta_f_steps: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlphaSpec {
    /// Sampled at boundary nodes; `values` lists one entry per boundary node.
    pub value: FieldSpec,
    /// `[α_min, α_max]`; defaults to the range of the samples.
    pub bounds: Option<[f64; 2]>,
}

impl Default for AlphaSpec {
    fn default() -> Self {
        Self { value: FieldSpec::Constant(1.0), bounds: None }
    }
}

/// Time-independent starting controls; `u`, `v` default to box midpoints, `η` to 0.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StartSpec {
    pub u: Option<FieldSpec>,
    pub v: Option<FieldSpec>,
    pub eta: Option<FieldSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlSpec {
    pub u_bounds: [f64; 2],
    pub v_bounds: [f64; 2],
    #[serde(default)]
    pub start: StartSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub theta0: FieldSpec,
    pub phi0: FieldSpec,
}

/// Cost used by `optimize`, `gradcheck` and `sweep`. With `sigma`, the envelope stage is
/// anchored at the exact-`j` optimum for `eps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObjectiveSpec {
    /// `null` disables the interface term.
    pub eps: Option<f64>,
    pub sigma: Option<f64>,
    /// Selection from `[−1, 1]` used where `θ = θ_c`. `continue` always uses 0.
    pub at_kink: f64,
}

impl Default for ObjectiveSpec {
    fn default() -> Self {
        Self { eps: Some(0.1), sigma: None, at_kink: 0.0 }
    }
}

impl ObjectiveSpec {
    pub fn eps(&self) -> f64 {
        self.eps.unwrap_or(f64::INFINITY)
    }

    pub fn limit(&self) -> Objective {
        Objective { eps: self.eps(), mode: Mode::Limit { at_kink: self.at_kink } }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradcheckSpec {
    pub directions: usize,
    pub step: f64,
    pub tol: f64,
}

impl Default for GradcheckSpec {
    fn default() -> Self {
        Self { directions: 10, step: 1e-5, tol: 1e-6 }
    }
}

fn default_schedule() -> Schedule {
    Schedule { eps: vec![0.1], sigma: vec![] }
}

/// Everything a run needs. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub time: TimeSpec,
    #[serde(default)]
    pub model: ModelSpec,
    #[serde(default)]
    pub alpha: AlphaSpec,
    pub controls: ControlSpec,
    pub initial: InitialSpec,
    #[serde(default = "default_schedule")]
    pub schedule: Schedule,
    #[serde(default)]
    pub objective: ObjectiveSpec,
    #[serde(default)]
    pub optimizer: OptimizeOptions,
    #[serde(default)]
    pub newton: NewtonOptions,
    #[serde(default)]
    pub gradcheck: GradcheckSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

/// Parses JSON text, reporting the key path of the first error.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| ConfigError::Parse {
        path: e.path().to_string(),
        source: e.into_inner(),
    })
}

/// Reads, parses, inlines file-backed fields and validates.
pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_owned(), source })?;
    let mut cfg = parse_config(&text)?;
    cfg.resolve_files(path.parent().unwrap_or(Path::new(".")))?;
    cfg.build()?;
    Ok(cfg)
}

impl RunConfig {
    /// Replaces `file` fields by their values so the config stands alone.
    pub fn resolve_files(&mut self, base: &Path) -> Result<(), ConfigError> {
        let g = self.grid.clone();
        self.initial.theta0.resolve("initial.theta0", base, &g)?;
        self.initial.phi0.resolve("initial.phi0", base, &g)?;
        if let Some(f) = &mut self.model.theta_f {
            f.resolve("model.theta_f", base, &g)?;
        }
        for (n, f) in self.model.theta_f_steps.iter_mut().flatten().enumerate() {
            f.resolve(&format!("model.theta_f_steps[{n}]"), base, &g)?;
        }
        let start = &mut self.controls.start;
        for (key, f) in [("controls.start.u", &mut start.u), ("controls.start.eta", &mut start.eta)] {
            if let Some(f) = f {
                f.resolve(key, base, &g)?;
            }
        }
        Ok(())
    }

    /// Checks every constraint and assembles the problem and starting controls.
    pub fn build(&self) -> Result<(Problem, ControlSet), ConfigError> {
        let grid = Grid::new(&self.grid).map_err(|e| invalid("grid", "grid shape", e.to_string()))?;
        let TimeSpec { t_final, nt } = self.time;
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(invalid("time.t_final", "T > 0", format!("{t_final}")));
        }
        if nt < 1 {
            return Err(invalid("time.nt", "nt >= 1", "0"));
        }
        let m = &self.model;
        if !(m.theta_c > 0.0 && m.theta_c.is_finite()) {
            return Err(invalid("model.theta_c", "theta_c > 0", format!("{}", m.theta_c)));
        }
        for (key, l) in [("model.lambda1", m.lambda1), ("model.lambda2", m.lambda2)] {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(invalid(key, "nonnegative weight", format!("{l}")));
            }
        }
        let [um, u_max] = self.controls.u_bounds;
        if !(um <= u_max) {
            return Err(invalid("controls.u_bounds", "K1 (u_min <= u_max)", format!("[{um}, {u_max}]")));
        }
        let [vm, v_max] = self.controls.v_bounds;
        if !(vm <= v_max) {
            return Err(invalid("controls.v_bounds", "K2 (v_min <= v_max)", format!("[{vm}, {v_max}]")));
        }
        self.schedule.validate().map_err(|e| invalid("schedule", "strictly decreasing positive schedule", e.to_string()))?;
        if let Some(e) = self.objective.eps {
            if !(e > 0.0) {
                return Err(invalid("objective.eps", "eps > 0", format!("{e}")));
            }
        }
        if let Some(s) = self.objective.sigma {
            if !(s > 0.0 && s.is_finite()) {
                return Err(invalid("objective.sigma", "sigma > 0", format!("{s}")));
            }
        }
        if !(self.objective.at_kink.abs() <= 1.0) {
            return Err(invalid("objective.at_kink", "selection in [-1, 1]", format!("{}", self.objective.at_kink)));
        }
        let o = &self.optimizer;
        if !(o.tol > 0.0 && o.armijo_c > 0.0 && o.armijo_c < 1.0 && o.backtrack > 0.0 && o.backtrack < 1.0 && o.initial_step > 0.0) {
            return Err(invalid("optimizer", "positive tolerances, Armijo constants in (0, 1)", format!("{o:?}")));
        }
        if !(self.gradcheck.step > 0.0) {
            return Err(invalid("gradcheck.step", "step > 0", format!("{}", self.gradcheck.step)));
        }

        let nodes: Vec<[f64; 2]> = (0..grid.node_count()).map(|i| grid.coords(i)).collect();
        let bnodes: Vec<[f64; 2]> = grid.boundary_index().iter().map(|&i| grid.coords(i)).collect();

        let alpha = self.alpha.value.sample("alpha.value", &bnodes)?;
        let [a_min, a_max] = self.alpha.bounds.unwrap_or_else(|| {
            [alpha.iter().copied().fold(f64::INFINITY, f64::min), alpha.iter().copied().fold(f64::NEG_INFINITY, f64::max)]
        });
        if !(a_min > 0.0 && a_min <= a_max && a_max.is_finite()) || alpha.iter().any(|a| !(*a >= a_min && *a <= a_max)) {
            return Err(invalid(
                "alpha",
                "0 < alpha_min <= alpha <= alpha_max",
                format!("bounds [{a_min}, {a_max}], samples in [{}, {}]", alpha.iter().copied().fold(f64::INFINITY, f64::min), alpha.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
            ));
        }
        let robin = RobinOperator::new(&grid, BoundaryField(alpha), a_min, a_max)
            .map_err(|e| invalid("alpha", "0 < alpha_min <= alpha <= alpha_max", e.to_string()))?;

        let theta_f: Vec<ScalarField> = match (&m.theta_f_steps, &m.theta_f) {
            (Some(steps), _) => {
                if steps.len() != nt + 1 {
                    return Err(invalid("model.theta_f_steps", "one target per time level", format!("expected {}, found {}", nt + 1, steps.len())));
                }
                steps
                    .iter()
                    .enumerate()
                    .map(|(n, f)| f.sample(&format!("model.theta_f_steps[{n}]"), &nodes).map(ScalarField))
                    .collect::<Result<_, _>>()?
            }
            (None, Some(f)) => vec![ScalarField(f.sample("model.theta_f", &nodes)?); nt + 1],
            (None, None) => vec![ScalarField::constant(&grid, m.theta_c); nt + 1],
        };
        let far = theta_f.iter().map(|f| f.iter().map(|t| (t - m.theta_c).abs()).fold(0.0, f64::max)).fold(0.0, f64::max);
        if far > 0.5 * m.theta_c {
            warn!("target temperature reaches {far} away from theta_c");
        }

        let params = ModelParams {
            theta_c: m.theta_c,
            lambda1: m.lambda1,
            lambda2: m.lambda2,
            theta_f,
            u_bounds: (um, u_max),
            v_bounds: (vm, v_max),
            t_final,
            nt,
        };
        let theta0 = ScalarField(self.initial.theta0.sample("initial.theta0", &nodes)?);
        if let Some(t) = theta0.iter().find(|t| !(**t > 0.0)) {
            return Err(invalid("initial.theta0", "theta0 > 0", format!("{t}")));
        }
        let phi0 = ScalarField(self.initial.phi0.sample("initial.phi0", &nodes)?);
        let init = InitialData::new(&grid, theta0, phi0).map_err(|e| invalid("initial", "initial data", e.to_string()))?;
        let mut problem = Problem::new(grid, robin, params, init).map_err(|e| invalid("model", "model parameters", e.to_string()))?;
        problem.newton = self.newton;

        let start = &self.controls.start;
        let grid = &problem.grid;
        let mid = |a: f64, b: f64| FieldSpec::Constant(0.5 * (a + b));
        let u = start.u.clone().unwrap_or(mid(um, u_max)).sample("controls.start.u", &nodes)?;
        let v = start.v.clone().unwrap_or(mid(vm, v_max)).sample("controls.start.v", &bnodes)?;
        let eta = start.eta.clone().unwrap_or(FieldSpec::Constant(0.0)).sample("controls.start.eta", &nodes)?;
        if u.iter().any(|x| !(*x >= um && *x <= u_max)) {
            return Err(invalid("controls.start.u", "K1 (start inside the u box)", "value outside u_bounds"));
        }
        if v.iter().any(|x| !(*x >= vm && *x <= v_max)) {
            return Err(invalid("controls.start.v", "K2 (start inside the v box)", "value outside v_bounds"));
        }
        if eta.iter().any(|x| !(x.abs() <= 1.0)) {
            return Err(invalid("controls.start.eta", "|eta| <= 1", "value outside [-1, 1]"));
        }
        let controls = ControlSet {
            u: vec![ScalarField(u); nt],
            v: vec![BoundaryField(v); nt],
            eta: vec![ScalarField(eta); nt + 1],
        };
        debug_assert!(controls.check(grid, nt).is_ok());
        Ok((problem, controls))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "grid": {"dim": 1, "extents": [1.0], "counts": [9]},
        "time": {"t_final": 0.5, "nt": 4},
        "controls": {"u_bounds": [-1, 1], "v_bounds": [-0.5, 0.5]},
        "initial": {"theta0": {"constant": 0.9}, "phi0": {"constant": 0.0}}
    }"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.model, ModelSpec::default());
        assert_eq!(cfg.optimizer, OptimizeOptions::default());
        assert_eq!(cfg.seed, 0);
        let (pb, c) = cfg.build().unwrap();
        assert_eq!(pb.params.theta_f[3][0], 1.0);
        assert_eq!(c.u[0][0], 0.0);
        assert_eq!(pb.robin.bounds(), (1.0, 1.0));
    }

    #[test]
    fn parse_errors_carry_key_paths() {
        let bad = MINIMAL.replace("\"nt\": 4", "\"nt\": -4");
        match parse_config(&bad) {
            Err(ConfigError::Parse { path, .. }) => assert_eq!(path, "time.nt"),
            other => panic!("{other:?}"),
        }
        let bad = MINIMAL.replace("\"nt\": 4", "\"nt\": 4, \"dt\": 1");
        assert!(matches!(parse_config(&bad), Err(ConfigError::Parse { .. })));
    }

    #[test]
    fn named_constraints() {
        let mut cfg = parse_config(MINIMAL).unwrap();
        cfg.controls.u_bounds = [1.0, 0.0];
        let e = cfg.build().unwrap_err().to_string();
        assert!(e.contains("K1"), "{e}");

        let mut cfg = parse_config(MINIMAL).unwrap();
        cfg.alpha.value = FieldSpec::Constant(0.0);
        let e = cfg.build().unwrap_err().to_string();
        assert!(e.contains("0 < alpha_min"), "{e}");

        let mut cfg = parse_config(MINIMAL).unwrap();
        cfg.alpha.bounds = Some([0.5, 0.8]);
        assert!(cfg.build().unwrap_err().to_string().contains("alpha_max"));

        let mut cfg = parse_config(MINIMAL).unwrap();
        cfg.schedule.eps = vec![0.1, 0.2];
        assert!(matches!(cfg.build(), Err(ConfigError::Invalid { .. })));
    }

    #[test]
    fn field_specs() {
        let xs: Vec<[f64; 2]> = [0.0, 0.25, 0.5, 0.75, 1.0].iter().map(|&x| [x, 0.0]).collect();
        let step = FieldSpec::Step { axis: 0, at: 0.5, below: 0.9, above: 1.1 };
        assert_eq!(step.sample("k", &xs).unwrap(), vec![0.9, 0.9, 1.0, 1.1, 1.1]);
        let table = FieldSpec::Table { axis: 0, x: vec![0.25, 0.75], values: vec![1.0, 3.0] };
        assert_eq!(table.sample("k", &xs).unwrap(), vec![1.0, 1.0, 2.0, 3.0, 3.0]);
        assert!(FieldSpec::Values(vec![1.0]).sample("k", &xs).is_err());
    }
}
