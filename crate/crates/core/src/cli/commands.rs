use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::config::{ConfigError, RunConfig};
use super::io::{Cell, Snapshot, Table};
use crate::adjoint::{AdjointPair, Mode};
use crate::discretization::{BoundaryField, ScalarField};
use crate::optimizer::{
    continuation, evaluate, evaluate_cost, optimize, Objective, OptimizationResult, StageResult,
};
use crate::state::{ControlSet, Problem, StateTrajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Forward,
    Gradcheck,
    Optimize,
    Continue,
    Sweep,
}

/// Everything needed to rerun a command, plus what it produced.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub command: Command,
    pub version: String,
    pub config: RunConfig,
    pub summary: Value,
    /// Wall-clock seconds per phase.
    pub timings: Vec<(String, f64)>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("solver failure: {0}")]
    Solver(#[from] crate::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(ConfigError::Io { .. }) | CliError::Io { .. } => 4,
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
        }
    }
}

struct Out<'a> {
    dir: &'a Path,
}

impl Out<'_> {
    fn write(&self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|source| CliError::Io { path: parent.to_owned(), source })?;
        }
        std::fs::write(&path, bytes).map_err(|source| CliError::Io { path, source })
    }

    fn table(&self, name: &str, t: &Table) -> Result<(), CliError> {
        self.write(name, t.as_str().as_bytes())
    }

    fn sub(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }
}

/// Runs `command` and writes its artifacts and `manifest.json` under `out`.
pub fn run(command: Command, cfg: &RunConfig, out: &Path) -> Result<Manifest, CliError> {
    let (problem, start) = cfg.build()?;
    std::fs::create_dir_all(out).map_err(|source| CliError::Io { path: out.to_owned(), source })?;
    let o = Out { dir: out };
    let t0 = Instant::now();
    info!("{command:?} into {}", out.display());
    let summary = match command {
        Command::Forward => forward(&problem, &start, &o)?,
        Command::Gradcheck => gradcheck(cfg, &problem, &start, &o)?,
        Command::Optimize => optimize_cmd(cfg, &problem, &start, &o)?,
        Command::Continue => continue_cmd(cfg, &problem, &start, &o)?,
        Command::Sweep => sweep(cfg, &problem, &start, &o)?,
    };
    let manifest = Manifest {
        command,
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        summary,
        timings: vec![("total".into(), t0.elapsed().as_secs_f64())],
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    o.write("manifest.json", text.as_bytes())?;
    Ok(manifest)
}

/// Reruns the command recorded in a manifest.
pub fn replay(manifest: &Path, out: &Path) -> Result<Manifest, CliError> {
    let text = std::fs::read_to_string(manifest).map_err(|source| CliError::Io { path: manifest.to_owned(), source })?;
    let m: Manifest = serde_json::from_str(&text).map_err(|e| {
        CliError::Config(ConfigError::Parse { path: format!("{} (manifest)", manifest.display()), source: e })
    })?;
    run(m.command, &m.config, out)
}

fn forward(problem: &Problem, start: &ControlSet, o: &Out) -> Result<Value, CliError> {
    let state = problem.solve_state(start)?;
    write_state(problem, &state, "forward", o)?;
    write_controls(problem, start, "forward", o)?;
    let newton: usize = state.diagnostics.iter().map(|d| d.phi_newton.iterations + d.theta_newton.iterations).sum();
    Ok(json!({
        "min_theta": state.min_theta(),
        "max_theta": state.theta.iter().map(|f| f.max()).fold(f64::NEG_INFINITY, f64::max),
        "max_balance_residual": state.max_balance_residual(),
        "newton_iterations": newton,
    }))
}

fn gradcheck(cfg: &RunConfig, problem: &Problem, start: &ControlSet, o: &Out) -> Result<Value, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let obj = match cfg.objective.sigma {
        None => cfg.objective.limit(),
        Some(sigma) => Objective::penalized(cfg.objective.eps(), sigma, random_controls(problem, &mut rng)),
    };
    let ev = evaluate(problem, &obj, start)?;
    let (grid, params) = (&problem.grid, &problem.params);
    let h = cfg.gradcheck.step;
    let mut t = Table::new(&["direction", "slot", "finite_difference", "adjoint", "rel_err"]);
    let mut worst: f64 = 0.0;
    for d in 0..cfg.gradcheck.directions {
        for (slot, name) in ["u", "v", "eta"].iter().enumerate() {
            let dir = random_direction(problem, &mut rng, slot);
            let plus = evaluate_cost(problem, &obj, &start.axpy(h, &dir))?.1.total;
            let minus = evaluate_cost(problem, &obj, &start.axpy(-h, &dir))?.1.total;
            let fd = (plus - minus) / (2.0 * h);
            let ad = ev.gradient.dot(&dir, grid, params);
            let err = (fd - ad).abs() / fd.abs().max(ad.abs()).max(1e-300);
            worst = worst.max(err);
            t.row(&[Cell::Int(d), Cell::Text(name), Cell::Num(fd), Cell::Num(ad), Cell::Num(err)]);
        }
    }
    o.table("gradcheck.csv", &t)?;
    Ok(json!({ "max_rel_err": worst, "tol": cfg.gradcheck.tol, "pass": worst <= cfg.gradcheck.tol }))
}

fn random_controls(problem: &Problem, rng: &mut ChaCha8Rng) -> ControlSet {
    let (g, p) = (&problem.grid, &problem.params);
    let mut draw = |n: usize, (a, b): (f64, f64)| -> Vec<f64> { (0..n).map(|_| a + (b - a) * rng.gen::<f64>()).collect() };
    ControlSet {
        u: (0..p.nt).map(|_| ScalarField(draw(g.node_count(), p.u_bounds))).collect(),
        v: (0..p.nt).map(|_| BoundaryField(draw(g.boundary_count(), p.v_bounds))).collect(),
        eta: (0..=p.nt).map(|_| ScalarField(draw(g.node_count(), (-1.0, 1.0)))).collect(),
    }
}

fn random_direction(problem: &Problem, rng: &mut ChaCha8Rng, slot: usize) -> ControlSet {
    let (g, p) = (&problem.grid, &problem.params);
    let mut d = ControlSet::zeros(g, p.nt);
    let mut fill = |x: &mut [f64]| x.iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
    match slot {
        0 => d.u.iter_mut().for_each(|f| fill(&mut f.0)),
        1 => d.v.iter_mut().for_each(|f| fill(&mut f.0)),
        _ => d.eta.iter_mut().for_each(|f| fill(&mut f.0)),
    }
    d
}

/// The exact-`j` solve for `eps`, followed by the envelope solve anchored at
/// it when `sigma` is given.
fn solve_pair(
    cfg: &RunConfig,
    problem: &Problem,
    start: &ControlSet,
    eps: f64,
    sigma: Option<f64>,
) -> Result<Vec<(Option<f64>, OptimizationResult)>, CliError> {
    let limit = Objective { eps, mode: Mode::Limit { at_kink: cfg.objective.at_kink } };
    let first = optimize(problem, &limit, start, &cfg.optimizer)?;
    let mut runs = Vec::new();
    if let Some(sigma) = sigma {
        let obj = Objective::penalized(eps, sigma, first.controls.clone());
        let second = optimize(problem, &obj, &first.controls, &cfg.optimizer)?;
        runs.push((None, first));
        runs.push((Some(sigma), second));
    } else {
        runs.push((None, first));
    }
    Ok(runs)
}

fn optimize_cmd(cfg: &RunConfig, problem: &Problem, start: &ControlSet, o: &Out) -> Result<Value, CliError> {
    let eps = cfg.objective.eps();
    let runs = solve_pair(cfg, problem, start, eps, cfg.objective.sigma)?;
    write_runs(problem, eps, &runs, o)
}

fn write_runs(problem: &Problem, eps: f64, runs: &[(Option<f64>, OptimizationResult)], o: &Out) -> Result<Value, CliError> {
    let mut history = history_table();
    let mut stages = stages_table();
    for (i, (sigma, r)) in runs.iter().enumerate() {
        push_history(&mut history, i, r);
        let zeta = crate::optimizer::fenchel_gap_integral(problem, &r.state, &r.controls).ok();
        push_stage(&mut stages, i, eps, *sigma, r, zeta, None);
    }
    o.table("history.csv", &history)?;
    o.table("stages.csv", &stages)?;
    let last = &runs.last().expect("at least one run").1;
    write_result(problem, last, "opt", o)?;
    Ok(json!({ "stages": runs.iter().map(|(s, r)| summary(eps, *s, r)).collect::<Vec<_>>() }))
}

fn continue_cmd(cfg: &RunConfig, problem: &Problem, start: &ControlSet, o: &Out) -> Result<Value, CliError> {
    let st = continuation(problem, &cfg.schedule, start, &cfg.optimizer)?;
    let mut history = history_table();
    let mut stages = stages_table();
    for (i, s) in st.iter().enumerate() {
        push_history(&mut history, i, &s.result);
        push_stage(&mut stages, i, s.eps, s.sigma, &s.result, Some(s.zeta), s.drift);
    }
    o.table("history.csv", &history)?;
    o.table("stages.csv", &stages)?;
    let last: &StageResult = st.last().expect("schedule has a stage");
    write_result(problem, &last.result, "final", o)?;
    Ok(json!({
        "stages": st.iter().map(|s| {
            let mut v = summary(s.eps, s.sigma, &s.result);
            v["zeta"] = json!(s.zeta);
            v["drift"] = json!(s.drift);
            v
        }).collect::<Vec<_>>()
    }))
}

fn sweep(cfg: &RunConfig, problem: &Problem, start: &ControlSet, o: &Out) -> Result<Value, CliError> {
    let sig: Vec<Option<f64>> =
        if cfg.schedule.sigma.is_empty() { vec![None] } else { cfg.schedule.sigma.iter().copied().map(Some).collect() };
    let cells: Vec<(f64, Option<f64>)> = cfg.schedule.eps.iter().flat_map(|&e| sig.iter().map(move |&s| (e, s))).collect();
    let results: Vec<Result<Value, CliError>> = cells
        .par_iter()
        .enumerate()
        .map(|(i, &(eps, sigma))| {
            let dir = o.sub(&format!("cell_{i:03}"));
            let sub = Out { dir: &dir };
            let runs = solve_pair(cfg, problem, start, eps, sigma)?;
            write_runs(problem, eps, &runs, &sub)?;
            let last = &runs.last().expect("run").1;
            let zeta = crate::optimizer::fenchel_gap_integral(problem, &last.state, &last.controls)?;
            let mut v = summary(eps, sigma, last);
            v["cell"] = json!(format!("cell_{i:03}"));
            v["zeta"] = json!(zeta);
            Ok(v)
        })
        .collect();
    let cells: Vec<Value> = results.into_iter().collect::<Result<_, _>>()?;
    let mut t = Table::new(&["cell", "eps", "sigma", "iterations", "cost", "residual", "zeta", "violation_u", "violation_v", "violation_eta"]);
    for (i, c) in cells.iter().enumerate() {
        let f = |k: &str| c[k].as_f64();
        t.row(&[
            Cell::Int(i),
            Cell::Num(f("eps").unwrap()),
            Cell::Opt(f("sigma")),
            Cell::Int(c["iterations"].as_u64().unwrap() as usize),
            Cell::Num(f("cost").unwrap()),
            Cell::Num(f("residual").unwrap()),
            Cell::Num(f("zeta").unwrap()),
            Cell::Num(f("violation_u").unwrap()),
            Cell::Num(f("violation_v").unwrap()),
            Cell::Num(f("violation_eta").unwrap()),
        ]);
    }
    o.table("stages.csv", &t)?;
    Ok(json!({ "cells": cells }))
}

fn summary(eps: f64, sigma: Option<f64>, r: &OptimizationResult) -> Value {
    json!({
        "eps": if eps.is_finite() { Some(eps) } else { None },
        "sigma": sigma,
        "iterations": r.iterations(),
        "termination": format!("{:?}", r.termination),
        "cost": r.cost.total,
        "residual": r.residual,
        "violation_u": r.kkt.u.fraction(),
        "violation_v": r.kkt.v.fraction(),
        "violation_eta": r.kkt.eta.fraction(),
    })
}

fn history_table() -> Table {
    Table::new(&["stage", "iteration", "cost", "residual", "step"])
}

fn push_history(t: &mut Table, stage: usize, r: &OptimizationResult) {
    for h in &r.history {
        t.row(&[Cell::Int(stage), Cell::Int(h.iteration), Cell::Num(h.cost), Cell::Num(h.residual), Cell::Num(h.step)]);
    }
}

fn stages_table() -> Table {
    Table::new(&[
        "stage", "eps", "sigma", "iterations", "cost", "residual", "zeta", "drift", "violation_u", "violation_v", "violation_eta",
    ])
}

fn push_stage(
    t: &mut Table,
    i: usize,
    eps: f64,
    sigma: Option<f64>,
    r: &OptimizationResult,
    zeta: Option<f64>,
    drift: Option<f64>,
) {
    t.row(&[
        Cell::Int(i),
        Cell::Opt(Some(eps).filter(|e| e.is_finite())),
        Cell::Opt(sigma),
        Cell::Int(r.iterations()),
        Cell::Num(r.cost.total),
        Cell::Num(r.residual),
        Cell::Opt(zeta),
        Cell::Opt(drift),
        Cell::Num(r.kkt.u.fraction()),
        Cell::Num(r.kkt.v.fraction()),
        Cell::Num(r.kkt.eta.fraction()),
    ]);
}

fn write_result(problem: &Problem, r: &OptimizationResult, tag: &str, o: &Out) -> Result<(), CliError> {
    write_state(problem, &r.state, tag, o)?;
    write_controls(problem, &r.controls, tag, o)?;
    write_adjoint(problem, &r.adjoint, tag, o)
}

fn xy(problem: &Problem, i: usize) -> [Cell<'static>; 2] {
    let c = problem.grid.coords(i);
    [Cell::Num(c[0]), Cell::Num(c[1])]
}

fn write_state(problem: &Problem, st: &StateTrajectory, tag: &str, o: &Out) -> Result<(), CliError> {
    let mut t = Table::new(&["level", "t", "x", "y", "theta", "phi"]);
    for (n, (th, ph)) in st.theta.iter().zip(&st.phi).enumerate() {
        let time = problem.params.time(n);
        for i in 0..problem.grid.node_count() {
            let [x, y] = xy(problem, i);
            t.row(&[Cell::Int(n), Cell::Num(time), x, y, Cell::Num(th[i]), Cell::Num(ph[i])]);
        }
    }
    o.table(&format!("state_{tag}.csv"), &t)?;
    let last = st.theta.len() - 1;
    for (name, f) in [("theta", &st.theta[last]), ("phi", &st.phi[last])] {
        o.write(&format!("snapshots/{name}_{tag}_final.bin"), &Snapshot::of(&problem.grid, f).encode())?;
    }
    Ok(())
}

fn write_controls(problem: &Problem, c: &ControlSet, tag: &str, o: &Out) -> Result<(), CliError> {
    let g = &problem.grid;
    let mut t = Table::new(&["slot", "level", "t", "x", "y", "value"]);
    for (k, f) in c.u.iter().enumerate() {
        for i in 0..g.node_count() {
            let [x, y] = xy(problem, i);
            t.row(&[Cell::Text("u"), Cell::Int(k), Cell::Num(problem.params.time(k)), x, y, Cell::Num(f[i])]);
        }
    }
    for (k, f) in c.v.iter().enumerate() {
        for (s, &i) in g.boundary_index().iter().enumerate() {
            let [x, y] = xy(problem, i);
            t.row(&[Cell::Text("v"), Cell::Int(k), Cell::Num(problem.params.time(k)), x, y, Cell::Num(f[s])]);
        }
    }
    for (n, f) in c.eta.iter().enumerate() {
        for i in 0..g.node_count() {
            let [x, y] = xy(problem, i);
            t.row(&[Cell::Text("eta"), Cell::Int(n), Cell::Num(problem.params.time(n)), x, y, Cell::Num(f[i])]);
        }
    }
    o.table(&format!("controls_{tag}.csv"), &t)
}

fn write_adjoint(problem: &Problem, a: &AdjointPair, tag: &str, o: &Out) -> Result<(), CliError> {
    let mut t = Table::new(&["level", "t", "x", "y", "p", "q"]);
    for (n, (p, q)) in a.p.iter().zip(&a.q).enumerate() {
        for i in 0..problem.grid.node_count() {
            let [x, y] = xy(problem, i);
            t.row(&[Cell::Int(n), Cell::Num(problem.params.time(n)), x, y, Cell::Num(p[i]), Cell::Num(q[i])]);
        }
    }
    o.table(&format!("adjoint_{tag}.csv"), &t)
}
