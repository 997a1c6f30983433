//! Closed form versus direct solver on canonical cases.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::auxpb::{cost_i, AuxProblem};
use crate::costs::CostSpec;
use crate::directopt::{solve_direct, DirectProblem, SolveReport, SolverSettings};
use crate::error::{domain, Result};
use crate::geometry::Domain;
use crate::params::ControlParams;
use crate::valuefn1d::{tilde_phi, tilde_phi_region, State1D};

/// Below this magnitude the closed form is compared in absolute terms.
pub const ABSOLUTE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OracleCase {
    /// `I(θ, w)` against the half-line solver with horizon `θ`, velocity
    /// floor `w` and terminal velocity `w`.
    Aux { q: f64, x: f64, v: f64, w: f64, theta: f64 },
    /// `φ̃` on `[-1, 1]` with `tau` time left.
    Tilde { q: f64, x: f64, v: f64, tau: f64 },
}

impl OracleCase {
    pub fn name(&self) -> String {
        match *self {
            OracleCase::Aux { q, x, v, w, theta } => {
                let params = ControlParams::new(q, theta).ok();
                let region = params
                    .and_then(|p| AuxProblem::new(x, v, w, theta, &p).ok().and_then(|prob| crate::auxpb::classify(&prob, &p).ok()))
                    .map_or("invalid", |r| r.tag());
                format!("aux_{region}_q{q}_x{x}_v{v}_w{w}_theta{theta}")
            }
            OracleCase::Tilde { q, x, v, tau } => {
                let region = ControlParams::new(q, tau)
                    .ok()
                    .and_then(|p| tilde_phi_region(&State1D::new(0.0, x, v), &p).ok())
                    .map_or("invalid", |r| r.tag());
                format!("tilde_{region}_q{q}_x{x}_v{v}_tau{tau}")
            }
        }
    }

    pub fn closed_form(&self) -> Result<f64> {
        match *self {
            OracleCase::Aux { q, x, v, w, theta } => {
                let params = ControlParams::new(q, theta)?;
                cost_i(&AuxProblem::new(x, v, w, theta, &params)?, &params)
            }
            OracleCase::Tilde { q, x, v, tau } => {
                let params = ControlParams::new(q, tau)?;
                match tilde_phi(&State1D::new(0.0, x, v), &params)?.finite() {
                    Some(value) => Ok(value),
                    None => domain("the closed-form value is infinite"),
                }
            }
        }
    }

    pub fn problem(&self, settings: &SolverSettings) -> Result<DirectProblem> {
        Ok(match *self {
            OracleCase::Aux { q, x, v, w, theta } => {
                let params = ControlParams::new(q, theta)?;
                AuxProblem::new(x, v, w, theta, &params)?;
                DirectProblem::new(Domain::HalfLine, params, CostSpec::zero(), 0.0, vec![x], vec![v], settings.clone())
                    .with_velocity_floor(w)
                    .with_terminal_velocity(vec![w])
            }
            OracleCase::Tilde { q, x, v, tau } => {
                let params = ControlParams::new(q, tau)?;
                DirectProblem::new(Domain::Interval, params, CostSpec::zero(), 0.0, vec![x], vec![v], settings.clone())
            }
        })
    }
}

/// The shipped suite: every branch of `I` and of `φ̃`, `q ∈ {1.5, 2, 3}`.
pub fn default_suite() -> Vec<OracleCase> {
    use OracleCase::*;
    vec![
        Aux { q: 2.0, x: -1.0, v: 1.0, w: 0.5, theta: 1.0 },
        Aux { q: 2.0, x: -1.0, v: 1.0, w: 0.0, theta: 2.5 },
        Aux { q: 2.0, x: -1.0, v: 1.0, w: 0.0, theta: 4.0 },
        Aux { q: 1.5, x: -1.0, v: 1.0, w: 0.2, theta: 2.0 },
        Aux { q: 3.0, x: -1.0, v: 1.0, w: 0.1, theta: 3.0 },
        Tilde { q: 2.0, x: 0.0, v: 0.5, tau: 1.0 },
        Tilde { q: 1.5, x: 0.0, v: 2.0, tau: 1.0 },
        Tilde { q: 3.0, x: 0.2, v: 3.0, tau: 1.0 },
        Tilde { q: 2.0, x: 0.0, v: -4.0, tau: 1.0 },
        Tilde { q: 3.0, x: 0.3, v: -2.0, tau: 1.0 },
        Tilde { q: 1.5, x: -0.5, v: -3.0, tau: 1.0 },
        Tilde { q: 2.0, x: -1.0, v: 1.5, tau: 1.5 },
    ]
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseResult {
    pub case: String,
    pub closed_form: f64,
    pub oracle: f64,
    /// Relative error, or absolute error when the closed form is below
    /// [`ABSOLUTE_FLOOR`].
    pub rel_err: f64,
    pub steps: usize,
    pub report: SolveReport,
}

pub fn comparison_error(closed_form: f64, oracle: f64) -> f64 {
    let diff = (oracle - closed_form).abs();
    if closed_form.abs() < ABSOLUTE_FLOOR {
        diff
    } else {
        diff / closed_form.abs()
    }
}

pub fn run_case(case: &OracleCase, settings: &SolverSettings) -> Result<CaseResult> {
    let closed_form = case.closed_form()?;
    let sol = solve_direct(&case.problem(settings)?)?;
    let oracle = sol.trajectory.cost;
    Ok(CaseResult {
        case: case.name(),
        closed_form,
        oracle,
        rel_err: comparison_error(closed_form, oracle),
        steps: settings.steps,
        report: sol.report,
    })
}

/// Runs the cases in parallel; results keep the input order.
pub fn run_suite(cases: &[OracleCase], settings: &SolverSettings) -> Vec<Result<CaseResult>> {
    cases.par_iter().map(|c| run_case(c, settings)).collect()
}
