//! Subcommand implementations for the `accelctl` binary.
//!
//! Each command turns a validated config into named artifacts; the binary
//! decides where they are written.

use std::fmt;

use accelctl::auxpb::{asymptotic_leading_term, classify, cost_i, inf_over_theta, AuxProblem};
use accelctl::config::{
    AsymptoticsConfig, AuxCostConfig, HjbResidualConfig, NdSingularityConfig, OracleConfig, PointsConfig,
    TrajectoryConfig, TrajectoryMethod, ValueFunction, ValueGridConfig,
};
use accelctl::costs::CostSpec;
use accelctl::directopt::{convergence_study, solve_direct, DirectProblem};
use accelctl::geometry::Domain;
use accelctl::io::{flow_table, fmt_f64, study_table, trajectory_table, Table};
use accelctl::mfg::{fictitious_play, MfgConfig};
use accelctl::oracle::{default_suite, run_suite};
use accelctl::valuefn1d::{
    hjb_residual, optimal_trajectory, optimal_trajectory_tilde, phi, phi_region, tilde_hjb_residual, tilde_phi,
    tilde_phi_region, State1D,
};
use accelctl::{ControlParams, Error};
use serde_json::Value;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_THRESHOLD: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;

#[derive(Debug)]
pub struct CmdError {
    pub code: i32,
    pub message: String,
}

impl fmt::Display for CmdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CmdError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NotConverged { .. } => EXIT_SOLVER,
            Error::Io(_) => EXIT_INTERNAL,
            _ => EXIT_USAGE,
        };
        CmdError { code, message: e.to_string() }
    }
}

pub type CmdResult<T> = std::result::Result<T, CmdError>;

pub fn usage(message: impl Into<String>) -> CmdError {
    CmdError { code: EXIT_USAGE, message: message.into() }
}

#[derive(Debug, Clone)]
pub enum Payload {
    Table(Table),
    Json(Value),
}

/// Named outputs plus an optional threshold breach to report after writing.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub files: Vec<(String, Payload)>,
    pub breach: Option<String>,
}

impl Artifacts {
    fn table(name: &str, table: Table) -> Self {
        Self { files: vec![(name.to_string(), Payload::Table(table))], breach: None }
    }
}

fn f(x: f64) -> String {
    fmt_f64(x)
}

pub fn aux_cost(cfg: &AuxCostConfig) -> CmdResult<Artifacts> {
    cfg.validate()?;
    let mut table = Table::new(&["theta", "w", "region", "I"]);
    for &theta in &cfg.theta {
        let params = ControlParams::new(cfg.q, theta)?;
        let prob = AuxProblem::new(cfg.x, cfg.v, cfg.w, theta, &params)?;
        let region = classify(&prob, &params)?;
        let value = cost_i(&prob, &params)?;
        table.push(vec![f(theta), f(cfg.w), region.tag().into(), f(value)]);
    }
    Ok(Artifacts::table("aux_cost", table))
}

fn value_row(function: ValueFunction, state: &State1D, params: &ControlParams) -> CmdResult<Vec<String>> {
    let (value, tag) = match function {
        ValueFunction::Phi => (phi(state, params)?, phi_region(state, params)?.tag()),
        ValueFunction::TildePhi => (tilde_phi(state, params)?, tilde_phi_region(state, params)?.tag()),
    };
    Ok(vec![f(state.t), f(state.x), f(state.v), f(value.as_f64()), tag.into()])
}

pub fn value_points(function: ValueFunction, cfg: &PointsConfig) -> CmdResult<Artifacts> {
    let params = cfg.params()?;
    let mut table = Table::new(&["t", "x", "v", "value", "branch"]);
    for &[t, x, v] in &cfg.points {
        table.push(value_row(function, &State1D::new(t, x, v), &params)?);
    }
    let name = match function {
        ValueFunction::Phi => "value_phi",
        ValueFunction::TildePhi => "value_tilde_phi",
    };
    Ok(Artifacts::table(name, table))
}

pub fn value_grid(cfg: &ValueGridConfig) -> CmdResult<Artifacts> {
    let params = cfg.params()?;
    let mut table = Table::new(&["t", "x", "v", "value", "branch"]);
    for x in cfg.x.points() {
        for v in cfg.v.points() {
            let state = State1D::new(cfg.t, x, v);
            match value_row(cfg.function, &state, &params) {
                Ok(row) => table.push(row),
                // Outside the state space of the chosen function.
                Err(CmdError { code: EXIT_USAGE, .. }) => {
                    table.push(vec![f(cfg.t), f(x), f(v), "inf".into(), "outside".into()])
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(Artifacts::table("value_grid", table))
}

pub fn hjb_sweep(cfg: &HjbResidualConfig) -> CmdResult<Artifacts> {
    let params = cfg.params()?;
    let mut table = Table::new(&["t", "x", "v", "branch", "value", "residual"]);
    let mut worst: f64 = 0.0;
    for t in cfg.t.points() {
        for x in cfg.x.points() {
            for v in cfg.v.points() {
                let state = State1D::new(t, x, v);
                let row = value_row(cfg.function, &state, &params);
                let Ok(row) = row else { continue };
                let value = row[3].parse::<f64>().unwrap_or(f64::INFINITY);
                let residual = if value.is_finite() && t < cfg.horizon {
                    match cfg.function {
                        ValueFunction::Phi => hjb_residual(&state, &params),
                        ValueFunction::TildePhi => tilde_hjb_residual(&state, &params),
                    }
                    .ok()
                } else {
                    None
                };
                if let Some(r) = residual {
                    worst = worst.max(r.abs() / (1.0 + value.abs()));
                }
                table.push(vec![row[0].clone(), row[1].clone(), row[2].clone(), row[4].clone(), row[3].clone(), residual.map_or(String::new(), f)]);
            }
        }
    }
    let mut out = Artifacts::table("hjb_residual", table);
    if let Some(th) = cfg.threshold {
        if worst > th {
            out.breach = Some(format!("largest relative residual {worst:.3e} exceeds {th:.3e}"));
        }
    }
    Ok(out)
}

pub fn oracle_compare(cfg: &OracleConfig) -> CmdResult<Artifacts> {
    let settings = cfg.settings()?;
    let cases = cfg.cases.clone().unwrap_or_else(default_suite);
    if cases.is_empty() {
        return Err(usage("no oracle cases"));
    }
    let mut table = Table::new(&["case", "closed_form", "oracle", "rel_err", "N"]);
    let mut worst: Option<(f64, String)> = None;
    for res in run_suite(&cases, &settings) {
        let r = res?;
        let name = r.case.clone();
        if worst.as_ref().is_none_or(|(w, _)| r.rel_err > *w) {
            worst = Some((r.rel_err, name.clone()));
        }
        table.push(vec![name, f(r.closed_form), f(r.oracle), f(r.rel_err), r.steps.to_string()]);
    }
    let mut out = Artifacts::table("oracle_compare", table);
    if let Some((w, name)) = worst {
        if !(w <= cfg.threshold) {
            out.breach = Some(format!("case {name} has relative error {w:.3e} above {:.3e}", cfg.threshold));
        }
    }
    Ok(out)
}

pub fn trajectory(cfg: &TrajectoryConfig) -> CmdResult<Artifacts> {
    let params = cfg.params()?;
    let mut study = None;
    let tr = match cfg.method {
        TrajectoryMethod::Direct => {
            let costs = CostSpec::constant(cfg.running_cost, cfg.terminal_cost);
            let prob = DirectProblem::new(cfg.domain, params, costs, cfg.t0, cfg.x0.clone(), cfg.v0.clone(), cfg.settings()?);
            if let Some(steps) = &cfg.study {
                study = Some(study_table(&convergence_study(&prob, steps)?));
            }
            solve_direct(&prob)?.trajectory
        }
        TrajectoryMethod::ClosedForm => {
            if cfg.study.is_some() {
                return Err(usage("a study needs the direct method"));
            }
            if cfg.running_cost != 0.0 || cfg.terminal_cost != 0.0 {
                return Err(usage("closed_form trajectories need zero running and terminal costs"));
            }
            let state = State1D::new(cfg.t0, cfg.x0[0], cfg.v0[0]);
            match cfg.domain {
                Domain::HalfLine => optimal_trajectory(&state, &params, cfg.steps)?,
                Domain::Interval => optimal_trajectory_tilde(&state, &params, cfg.steps)?,
                Domain::Ball { .. } => return Err(usage("closed_form trajectories exist on the half-line and the interval only")),
            }
        }
    };
    let mut out = Artifacts::table("trajectory", trajectory_table(&tr));
    if let Some(t) = study {
        out.files.push(("study".into(), Payload::Table(t)));
    }
    Ok(out)
}

pub fn asymptotics(cfg: &AsymptoticsConfig) -> CmdResult<Artifacts> {
    let params = cfg.params()?;
    let mut table = Table::new(&["i", "x", "v", "quantity", "leading", "ratio"]);
    for i in 1..=cfg.i_max {
        let x = -cfg.base.powi(-(i as i32));
        let (_, value) = inf_over_theta(x, cfg.v, cfg.w, &params)?;
        let lead = asymptotic_leading_term(x, cfg.v, &params);
        table.push(vec![i.to_string(), f(x), f(cfg.v), f(value), f(lead), f(value / lead)]);
    }
    Ok(Artifacts::table("asymptotics", table))
}

pub fn nd_singularity(cfg: &NdSingularityConfig) -> CmdResult<Artifacts> {
    let params = cfg.params()?;
    let settings = cfg.settings()?;
    let q = params.q();
    let domain = Domain::Ball { radius: cfg.radius };
    let mut table = Table::new(&["i", "delta", "x", "v", "quantity", "leading", "ratio"]);
    for &i in &cfg.exponents {
        let delta = cfg.base.powi(-(i as i32));
        if delta >= cfg.radius {
            return Err(usage(format!("delta = {delta} does not fit in the ball")));
        }
        let v = (cfg.product * delta.powf(q - 1.0)).powf(1.0 / (2.0 * q - 1.0));
        let x = vec![cfg.radius - delta, 0.0];
        let prob = DirectProblem::new(domain, params, CostSpec::zero(), 0.0, x.clone(), vec![v, 0.0], settings.clone());
        let cost = solve_direct(&prob)?.trajectory.cost;
        let lead = params.singular_constant() * v.powf(2.0 * q - 1.0) / delta.powf(q - 1.0);
        table.push(vec![i.to_string(), f(delta), f(x[0]), f(v), f(cost), f(lead), f(cost / lead)]);
    }
    Ok(Artifacts::table("nd_singularity", table))
}

pub fn mfg_run(cfg: &MfgConfig) -> CmdResult<Artifacts> {
    let result = fictitious_play(cfg)?;
    let mut files = Vec::new();
    let times = result.flow.times().len();
    let mut masses = Vec::with_capacity(times);
    for k in 0..times {
        masses.push(result.flow.cloud(k).mass());
        files.push((format!("flow_{k:03}"), Payload::Table(flow_table(&result.flow, k))));
    }
    let mut ex = Table::new(&["iter", "value"]);
    for (k, e) in result.history.iter().enumerate() {
        ex.push(vec![k.to_string(), f(*e)]);
    }
    files.push(("exploitability".into(), Payload::Table(ex)));
    let last = result.history.last().copied().unwrap_or(f64::NAN);
    files.push((
        "summary".into(),
        Payload::Json(serde_json::json!({
            "converged": result.converged,
            "iterations": result.history.len(),
            "exploitability": last,
            "history": result.history,
            "members": result.bundle.len(),
            "mass_exact": masses.iter().all(|&m| m == 1.0),
            "flagged": result.flagged,
            "particle_costs": result.particle_costs,
        })),
    ));
    let breach = (!result.converged)
        .then(|| format!("exploitability {last:.3e} above target {:.3e} after {} iterations", cfg.target_exploitability, result.history.len()));
    Ok(Artifacts { files, breach })
}
