//! Direct discretized trajectory optimization, used as an oracle.
//!
//! The decision variables are the accelerations `α_k`, constant on each of
//! the `N` steps; positions and velocities follow the exact
//! double-integrator update. The objective
//!
//! ```text
//! (1/q) Σ |α_k|^q dt + Σ ℓ(ξ_k, η_k, t_k) dt + g(ξ_N, η_N)
//! ```
//!
//! is minimized under the state constraint, enforced at the grid points
//! and step midpoints by a quadratic penalty `ρ Σ d(·)_+²` with `ρ` grown
//! geometrically between rounds. For `q < 2` the control cost is replaced
//! by the smooth `((|α|² + ε²)^(q/2) − ε^q)/q`, with `ε` decreased
//! between rounds.
//!
//! Each round is solved by damped Newton iterations. Since the dynamics
//! are linear, the Newton step of the penalized objective is the solution
//! of a linear-quadratic regulator problem and is computed by a backward
//! Riccati sweep in `O(N)`.

use std::ops::AddAssign;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::costs::{CostSpec, Derivatives};
use crate::error::{domain, Error, Result};
use crate::geometry::Domain;
use crate::params::ControlParams;
use crate::trajectory::{norm, Trajectory};

/// Penalty continuation and stopping parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSettings {
    /// Number of time steps `N`.
    pub steps: usize,
    /// Initial penalty weight.
    pub rho0: f64,
    /// Penalty growth factor between rounds.
    pub growth: f64,
    pub max_rounds: usize,
    pub max_newton_iters: usize,
    /// Tolerance on `max_k |∂J/∂α_k| / dt`.
    pub grad_tol: f64,
    /// Tolerance on the largest constraint violation.
    pub constraint_tol: f64,
    /// Initial and final smoothing `ε` for `q < 2`.
    pub smoothing_start: f64,
    pub smoothing_end: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            steps: 2000,
            rho0: 10.0,
            growth: 10.0,
            max_rounds: 14,
            max_newton_iters: 200,
            grad_tol: 1e-6,
            constraint_tol: 1e-7,
            smoothing_start: 1e-2,
            smoothing_end: 1e-6,
        }
    }
}

impl SolverSettings {
    pub fn with_steps(mut self, steps: usize) -> Self {
        self.steps = steps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.steps >= 2
            && self.rho0 > 0.0
            && self.growth > 1.0
            && self.max_rounds >= 1
            && self.max_newton_iters >= 1
            && self.grad_tol > 0.0
            && self.constraint_tol > 0.0
            && self.smoothing_end > 0.0
            && self.smoothing_start >= self.smoothing_end;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid solver settings: {self:?}")))
        }
    }
}

/// A discretized control problem from the state `(x0, v0)` at time `t0`
/// to the horizon `T` of `params`.
#[derive(Debug, Clone)]
pub struct DirectProblem {
    pub domain: Domain,
    pub params: ControlParams,
    pub costs: CostSpec,
    pub t0: f64,
    pub x0: Vec<f64>,
    pub v0: Vec<f64>,
    pub settings: SolverSettings,
    /// One-dimensional lower bound on the velocity, `η ≥ floor`.
    pub velocity_floor: Option<f64>,
    /// Prescribed final velocity, enforced by the same penalty.
    pub terminal_velocity: Option<Vec<f64>>,
    /// Initial accelerations, `N · n` values.
    pub warm_start: Option<Vec<f64>>,
}

impl DirectProblem {
    pub fn new(
        domain: Domain,
        params: ControlParams,
        costs: CostSpec,
        t0: f64,
        x0: Vec<f64>,
        v0: Vec<f64>,
        settings: SolverSettings,
    ) -> Self {
        Self {
            domain,
            params,
            costs,
            t0,
            x0,
            v0,
            settings,
            velocity_floor: None,
            terminal_velocity: None,
            warm_start: None,
        }
    }

    pub fn with_velocity_floor(mut self, floor: f64) -> Self {
        self.velocity_floor = Some(floor);
        self
    }

    pub fn with_terminal_velocity(mut self, w: Vec<f64>) -> Self {
        self.terminal_velocity = Some(w);
        self
    }

    pub fn with_warm_start(mut self, accelerations: Vec<f64>) -> Self {
        self.warm_start = Some(accelerations);
        self
    }

    pub fn dim(&self) -> usize {
        self.x0.len()
    }

    pub fn dt(&self) -> f64 {
        (self.params.horizon() - self.t0) / self.settings.steps as f64
    }

    pub fn validate(&self) -> Result<()> {
        self.settings.validate()?;
        self.domain.validate()?;
        let n = self.dim();
        if self.v0.len() != n {
            return domain(format!("position has dimension {n}, velocity {}", self.v0.len()));
        }
        self.domain.check_dimension(n)?;
        if self.x0.iter().chain(&self.v0).any(|z| !z.is_finite()) {
            return domain("initial state must be finite");
        }
        if !(self.t0 >= 0.0 && self.t0 < self.params.horizon()) {
            return domain(format!("start time {} must lie in [0, T)", self.t0));
        }
        if !self.domain.is_admissible(&self.x0, &self.v0) {
            return domain(format!(
                "initial state x = {:?}, v = {:?} is not admissible for {:?}",
                self.x0, self.v0, self.domain
            ));
        }
        if self.velocity_floor.is_some() && n != 1 {
            return domain("a velocity floor is only defined in one dimension");
        }
        if let Some(w) = &self.terminal_velocity {
            if w.len() != n {
                return domain("terminal velocity has the wrong dimension");
            }
        }
        if let Some(u) = &self.warm_start {
            if u.len() != n * self.settings.steps {
                return domain(format!("warm start has {} values, expected {}", u.len(), n * self.settings.steps));
            }
        }
        Ok(())
    }
}

/// Audit trail of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub grad_norm: f64,
    pub max_violation: f64,
    pub rho: f64,
    /// Final smoothing, zero when none was used.
    pub smoothing: f64,
    pub rounds: usize,
    pub newton_iters: usize,
}

#[derive(Debug, Clone)]
pub struct DirectSolution {
    /// Trajectory whose `cost` is the unpenalized, unsmoothed objective.
    pub trajectory: Trajectory,
    pub report: SolveReport,
}

/// Current penalty and smoothing levels.
#[derive(Debug, Clone, Copy)]
struct Level {
    rho: f64,
    eps: f64,
}

/// First and second derivatives of one stage of the penalized objective.
struct StageDerivs {
    cs: DVector<f64>,
    cu: DVector<f64>,
    css: DMatrix<f64>,
    cuu: DMatrix<f64>,
    cus: DMatrix<f64>,
}

struct Solver<'a> {
    prob: &'a DirectProblem,
    n: usize,
    steps: usize,
    dt: f64,
    q: f64,
}

fn psd_clamp(h: DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(h);
    if eig.eigenvalues.iter().all(|&l| l >= 0.0) {
        return eig.recompose();
    }
    let mut eig = eig;
    eig.eigenvalues.iter_mut().for_each(|l| *l = l.max(0.0));
    eig.recompose()
}

impl<'a> Solver<'a> {
    fn new(prob: &'a DirectProblem) -> Self {
        Self {
            prob,
            n: prob.dim(),
            steps: prob.settings.steps,
            dt: prob.dt(),
            q: prob.params.q(),
        }
    }

    fn time(&self, k: usize) -> f64 {
        self.prob.t0 + self.dt * k as f64
    }

    fn rollout(&self, u: &[f64]) -> Trajectory {
        Trajectory::from_accelerations(self.prob.t0, self.dt, &self.prob.x0, &self.prob.v0, u.to_vec())
    }

    fn midpoint(&self, x: &[f64], v: &[f64], a: &[f64]) -> Vec<f64> {
        let h = 0.5 * self.dt;
        (0..self.n).map(|i| x[i] + v[i] * h + a[i] * h * h / 2.0).collect()
    }

    /// `(value, gradient, Hessian)` of the smoothed control cost per unit time.
    fn control(&self, a: &[f64], eps: f64, want_hess: bool) -> (f64, Vec<f64>, Option<DMatrix<f64>>) {
        let q = self.q;
        let r2 = a.iter().map(|x| x * x).sum::<f64>() + eps * eps;
        let value = (r2.powf(q / 2.0) - eps.powf(q)) / q;
        if r2 == 0.0 {
            let curv = if q == 2.0 { 1.0 } else { 0.0 };
            let hess = want_hess.then(|| DMatrix::identity(self.n, self.n) * curv);
            return (value, vec![0.0; self.n], hess);
        }
        let s1 = r2.powf(q / 2.0 - 1.0);
        let grad = a.iter().map(|x| s1 * x).collect();
        let hess = want_hess.then(|| {
            // (q−2) r2^(q/2−2) a aᵀ, written with the bounded a/√r2.
            let unit = DVector::from_column_slice(a) / r2.sqrt();
            DMatrix::identity(self.n, self.n) * s1 + &unit * unit.transpose() * (s1 * (q - 2.0))
        });
        (value, grad, hess)
    }

    /// Penalty `ρ d_+(y)²`: value, gradient and Hessian in `y`.
    fn penalty(&self, y: &[f64], rho: f64, want_derivs: bool) -> Option<(f64, DVector<f64>, DMatrix<f64>)> {
        let d = self.prob.domain.signed_distance(y);
        if !(d > 0.0) {
            return None;
        }
        let value = rho * d * d;
        if !want_derivs {
            return Some((value, DVector::zeros(0), DMatrix::zeros(0, 0)));
        }
        let g = self.prob.domain.grad_signed_distance(y).expect("gradient exists outside the domain");
        let h = self.prob.domain.hessian_signed_distance(y).expect("Hessian exists outside the domain");
        let gv = DVector::from_vec(g);
        let hm = DMatrix::from_row_slice(self.n, self.n, &h);
        let grad = &gv * (2.0 * rho * d);
        let hess = (&gv * gv.transpose() + hm * d) * (2.0 * rho);
        Some((value, grad, hess))
    }

    /// Penalized, smoothed objective.
    fn objective(&self, u: &[f64], level: Level) -> f64 {
        let tr = self.rollout(u);
        let mut total = 0.0;
        let costs = &self.prob.costs;
        for k in 0..self.steps {
            let (x, v, a) = (tr.position(k), tr.velocity(k), tr.acceleration(k));
            total += self.control(a, level.eps, false).0 * self.dt;
            if !costs.running.is_zero() {
                total += costs.running.value(x, v, self.time(k)) * self.dt;
            }
            if let Some((p, _, _)) = self.penalty(&self.midpoint(x, v, a), level.rho, false) {
                total += p;
            }
        }
        for k in 1..=self.steps {
            total += self.state_penalty_value(tr.position(k), tr.velocity(k), level.rho);
        }
        let (xn, vn) = (tr.position(self.steps), tr.velocity(self.steps));
        total += costs.terminal.value(xn, vn);
        if let Some(w) = &self.prob.terminal_velocity {
            total += level.rho * vn.iter().zip(w).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        }
        total
    }

    fn state_penalty_value(&self, x: &[f64], v: &[f64], rho: f64) -> f64 {
        let mut total = self.penalty(x, rho, false).map_or(0.0, |p| p.0);
        if let Some(floor) = self.prob.velocity_floor {
            let gap = (floor - v[0]).max(0.0);
            total += rho * gap * gap;
        }
        total
    }

    /// Adds the state penalty at `(x, v)` to a gradient/Hessian in `s = (x, v)`.
    fn add_state_penalty(&self, x: &[f64], v: &[f64], rho: f64, cs: &mut DVector<f64>, css: &mut DMatrix<f64>) {
        let n = self.n;
        if let Some((_, g, h)) = self.penalty(x, rho, true) {
            cs.rows_mut(0, n).add_assign(&g);
            css.view_mut((0, 0), (n, n)).add_assign(&h);
        }
        if let Some(floor) = self.prob.velocity_floor {
            let gap = floor - v[0];
            if gap > 0.0 {
                cs[n] -= 2.0 * rho * gap;
                css[(n, n)] += 2.0 * rho;
            }
        }
    }

    fn cost_derivatives(&self, d: Derivatives, scale: f64) -> (DVector<f64>, DMatrix<f64>) {
        let m = 2 * self.n;
        let g = DVector::from_vec(d.grad) * scale;
        let h = DMatrix::from_row_slice(m, m, &d.hess);
        let h = psd_clamp((&h + h.transpose()) * 0.5) * scale;
        (g, h)
    }

    fn stage_derivs(&self, tr: &Trajectory, k: usize, level: Level) -> StageDerivs {
        let n = self.n;
        let m = 2 * n;
        let dt = self.dt;
        let (x, v, a) = (tr.position(k), tr.velocity(k), tr.acceleration(k));
        let mut cs = DVector::zeros(m);
        let mut css = DMatrix::zeros(m, m);
        let (_, cg, ch) = self.control(a, level.eps, true);
        let mut cu = DVector::from_vec(cg) * dt;
        let mut cuu = ch.expect("requested") * dt;
        let mut cus = DMatrix::zeros(n, m);
        let costs = &self.prob.costs;
        if !costs.running.is_zero() {
            let (g, h) = self.cost_derivatives(costs.running.derivatives(x, v, self.time(k)), dt);
            cs += g;
            css += h;
        }
        if k >= 1 {
            self.add_state_penalty(x, v, level.rho, &mut cs, &mut css);
        }
        if let Some((_, g, h)) = self.penalty(&self.midpoint(x, v, a), level.rho, true) {
            // The midpoint is x + v dt/2 + a dt²/8.
            let (cv, ca) = (0.5 * dt, dt * dt / 8.0);
            cs.rows_mut(0, n).add_assign(&g);
            cs.rows_mut(n, n).add_assign(&(&g * cv));
            cu += &g * ca;
            css.view_mut((0, 0), (n, n)).add_assign(&h);
            css.view_mut((0, n), (n, n)).add_assign(&(&h * cv));
            css.view_mut((n, 0), (n, n)).add_assign(&(&h * cv));
            css.view_mut((n, n), (n, n)).add_assign(&(&h * (cv * cv)));
            cuu += &h * (ca * ca);
            cus.view_mut((0, 0), (n, n)).add_assign(&(&h * ca));
            cus.view_mut((0, n), (n, n)).add_assign(&(&h * (ca * cv)));
        }
        StageDerivs { cs, cu, css, cuu, cus }
    }

    fn terminal_derivs(&self, tr: &Trajectory, level: Level) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.n;
        let m = 2 * n;
        let (x, v) = (tr.position(self.steps), tr.velocity(self.steps));
        let mut vs = DVector::zeros(m);
        let mut vss = DMatrix::zeros(m, m);
        self.add_state_penalty(x, v, level.rho, &mut vs, &mut vss);
        let costs = &self.prob.costs;
        if !costs.terminal.is_zero() {
            let (g, h) = self.cost_derivatives(costs.terminal.derivatives(x, v), 1.0);
            vs += g;
            vss += h;
        }
        if let Some(w) = &self.prob.terminal_velocity {
            for i in 0..n {
                vs[n + i] += 2.0 * level.rho * (v[i] - w[i]);
                vss[(n + i, n + i)] += 2.0 * level.rho;
            }
        }
        (vs, vss)
    }

    fn dynamics(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let n = self.n;
        let dt = self.dt;
        let mut a = DMatrix::identity(2 * n, 2 * n);
        let mut b = DMatrix::zeros(2 * n, n);
        for i in 0..n {
            a[(i, n + i)] = dt;
            b[(i, i)] = dt * dt / 2.0;
            b[(n + i, i)] = dt;
        }
        (a, b)
    }

    /// Gradient of the objective with respect to every `α_k`, by the
    /// adjoint recursion.
    fn gradient(&self, stages: &[StageDerivs], terminal: &DVector<f64>, a: &DMatrix<f64>, b: &DMatrix<f64>) -> Vec<f64> {
        let n = self.n;
        let mut grad = vec![0.0; n * self.steps];
        let mut lambda = terminal.clone();
        for k in (0..self.steps).rev() {
            let st = &stages[k];
            let g = &st.cu + b.transpose() * &lambda;
            grad[k * n..(k + 1) * n].copy_from_slice(g.as_slice());
            lambda = &st.cs + a.transpose() * &lambda;
        }
        grad
    }

    /// Newton direction from a backward Riccati sweep with the given
    /// Levenberg shift on `Q_uu`. `None` if some `Q_uu` is not positive
    /// definite.
    fn newton_direction(
        &self,
        stages: &[StageDerivs],
        terminal: &(DVector<f64>, DMatrix<f64>),
        a: &DMatrix<f64>,
        b: &DMatrix<f64>,
        shift: f64,
    ) -> Option<Vec<f64>> {
        let n = self.n;
        let mut vs = terminal.0.clone();
        let mut vss = terminal.1.clone();
        let mut gains: Vec<(DMatrix<f64>, DVector<f64>)> = Vec::with_capacity(self.steps);
        let at = a.transpose();
        let bt = b.transpose();
        for k in (0..self.steps).rev() {
            let st = &stages[k];
            let vb = &vss * b;
            let qs = &st.cs + &at * &vs;
            let qu = &st.cu + &bt * &vs;
            let qss = &st.css + &at * &vss * a;
            let quu = &st.cuu + &bt * &vb + DMatrix::identity(n, n) * shift;
            let qus = &st.cus + vb.transpose() * a;
            let chol = quu.clone().cholesky()?;
            let gain = -chol.solve(&qus);
            let ff = -chol.solve(&qu);
            vs = qs + qus.transpose() * &ff;
            let next = qss + qus.transpose() * &gain;
            vss = (&next + next.transpose()) * 0.5;
            gains.push((gain, ff));
        }
        gains.reverse();
        let mut du = vec![0.0; n * self.steps];
        let mut ds = DVector::zeros(2 * n);
        for (k, (gain, ff)) in gains.iter().enumerate() {
            let step = ff + gain * &ds;
            ds = a * &ds + b * &step;
            du[k * n..(k + 1) * n].copy_from_slice(step.as_slice());
        }
        Some(du)
    }

    /// Minimizes the penalized objective at a fixed level. Returns the
    /// iterate, the final gradient norm, whether it converged and the
    /// number of Newton iterations.
    fn inner_solve(&self, mut u: Vec<f64>, level: Level) -> (Vec<f64>, f64, bool, usize) {
        let (a, b) = self.dynamics();
        let settings = &self.prob.settings;
        let mut value = self.objective(&u, level);
        let mut grad_norm = f64::INFINITY;
        for iter in 0..settings.max_newton_iters {
            let tr = self.rollout(&u);
            let stages: Vec<StageDerivs> = (0..self.steps).map(|k| self.stage_derivs(&tr, k, level)).collect();
            let terminal = self.terminal_derivs(&tr, level);
            let grad = self.gradient(&stages, &terminal.0, &a, &b);
            grad_norm = grad.iter().fold(0.0f64, |m, g| m.max(g.abs())) / self.dt;
            if grad_norm <= settings.grad_tol {
                return (u, grad_norm, true, iter);
            }
            let mut shift = 0.0;
            let mut direction = None;
            for _ in 0..30 {
                if let Some(du) = self.newton_direction(&stages, &terminal, &a, &b, shift) {
                    let slope: f64 = du.iter().zip(&grad).map(|(d, g)| d * g).sum();
                    if slope < 0.0 {
                        direction = Some((du, slope));
                        break;
                    }
                }
                shift = if shift == 0.0 { 1e-12 * self.dt } else { shift * 100.0 };
            }
            let (du, slope) = match direction {
                Some(d) => d,
                None => {
                    let du: Vec<f64> = grad.iter().map(|g| -g / self.dt).collect();
                    let slope = du.iter().zip(&grad).map(|(d, g)| d * g).sum();
                    (du, slope)
                }
            };
            // A Newton decrement at the round-off level of the objective
            // means the iterate is optimal to working precision. At large ρ
            // the penalty gradient has a floor near ρ·ulp(x), so the
            // gradient test alone may never pass.
            if -slope <= 1e-12 * value.abs().max(1.0) {
                return (u, grad_norm, true, iter);
            }
            let mut step = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let trial: Vec<f64> = u.iter().zip(&du).map(|(x, d)| x + step * d).collect();
                let trial_value = self.objective(&trial, level);
                if trial_value <= value + 1e-4 * step * slope {
                    u = trial;
                    value = trial_value;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                // No decrease representable in floating point.
                let tiny = -slope <= 1e-10 * value.abs().max(1.0);
                return (u, grad_norm, tiny, iter + 1);
            }
        }
        (u, grad_norm, false, settings.max_newton_iters)
    }

    fn max_violation(&self, tr: &Trajectory) -> f64 {
        let dom = &self.prob.domain;
        let mut worst: f64 = 0.0;
        for k in 1..=self.steps {
            worst = worst.max(dom.signed_distance(tr.position(k)));
            if let Some(floor) = self.prob.velocity_floor {
                worst = worst.max(floor - tr.velocity(k)[0]);
            }
        }
        for k in 0..self.steps {
            worst = worst.max(dom.signed_distance(&tr.midpoint(k)));
        }
        if let Some(w) = &self.prob.terminal_velocity {
            let vn = tr.velocity(self.steps);
            let gap: Vec<f64> = vn.iter().zip(w).map(|(a, b)| a - b).collect();
            worst = worst.max(norm(&gap));
        }
        worst
    }

    /// Unpenalized, unsmoothed cost.
    fn true_cost(&self, tr: &Trajectory) -> f64 {
        let costs = &self.prob.costs;
        let mut total = tr.control_cost(self.q);
        if !costs.running.is_zero() {
            total += (0..self.steps).map(|k| costs.running.value(tr.position(k), tr.velocity(k), self.time(k))).sum::<f64>() * self.dt;
        }
        total + costs.terminal.value(tr.position(self.steps), tr.velocity(self.steps))
    }

    fn smoothing_at(&self, round: usize) -> f64 {
        let s = &self.prob.settings;
        if self.q >= 2.0 {
            0.0
        } else {
            (s.smoothing_start * 0.1f64.powi(round as i32)).max(s.smoothing_end)
        }
    }

    fn solve(&self) -> Result<DirectSolution> {
        let settings = &self.prob.settings;
        let mut u = self.prob.warm_start.clone().unwrap_or_else(|| vec![0.0; self.n * self.steps]);
        let mut rho = settings.rho0;
        let mut iterations = 0;
        let mut last = None;
        for round in 0..settings.max_rounds {
            let level = Level { rho, eps: self.smoothing_at(round) };
            let (next, grad_norm, converged, iters) = self.inner_solve(u, level);
            u = next;
            iterations += iters;
            let mut tr = self.rollout(&u);
            tr.cost = self.true_cost(&tr);
            let violation = self.max_violation(&tr);
            let report = SolveReport {
                grad_norm,
                max_violation: violation,
                rho,
                smoothing: level.eps,
                rounds: round + 1,
                newton_iters: iterations,
            };
            let smoothing_done = level.eps <= settings.smoothing_end || self.q >= 2.0;
            if converged && violation <= settings.constraint_tol && smoothing_done {
                return Ok(DirectSolution { trajectory: tr, report });
            }
            if violation > settings.constraint_tol {
                rho *= settings.growth;
            }
            last = Some((tr, report));
        }
        let (tr, report) = last.expect("at least one round");
        Err(Error::NotConverged {
            violation: report.max_violation,
            grad_norm: report.grad_norm,
            best: Box::new(tr),
        })
    }
}

/// Solves the discretized problem.
pub fn solve_direct(prob: &DirectProblem) -> Result<DirectSolution> {
    prob.validate()?;
    Solver::new(prob).solve()
}

/// Solves independent problems in parallel; results keep the input order.
pub fn solve_batch(problems: &[DirectProblem]) -> Vec<Result<DirectSolution>> {
    problems.par_iter().map(solve_direct).collect()
}

/// Oracle estimate of the value `u(t, x, v)`.
pub fn value_u(
    t: f64,
    x: &[f64],
    v: &[f64],
    costs: &CostSpec,
    domain: &Domain,
    params: &ControlParams,
    settings: &SolverSettings,
) -> Result<f64> {
    let prob = DirectProblem::new(*domain, *params, costs.clone(), t, x.to_vec(), v.to_vec(), settings.clone());
    Ok(solve_direct(&prob)?.trajectory.cost)
}

/// One line of a convergence study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub steps: usize,
    pub cost: f64,
    pub violation: f64,
    pub grad_norm: f64,
}

/// Solves the same problem for each step count in `steps_list`.
pub fn convergence_study(prob: &DirectProblem, steps_list: &[usize]) -> Result<Vec<StudyRow>> {
    let problems: Vec<DirectProblem> = steps_list
        .iter()
        .map(|&steps| DirectProblem {
            settings: prob.settings.clone().with_steps(steps),
            warm_start: None,
            ..prob.clone()
        })
        .collect();
    solve_batch(&problems)
        .into_iter()
        .zip(steps_list)
        .map(|(res, &steps)| {
            let sol = res?;
            Ok(StudyRow {
                steps,
                cost: sol.trajectory.cost,
                violation: sol.report.max_violation,
                grad_norm: sol.report.grad_norm,
            })
        })
        .collect()
}
