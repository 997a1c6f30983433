//! Particle fictitious play for the constrained kinetic mean-field game.
//!
//! A relaxed equilibrium is a measure on trajectories supported on optimal
//! trajectories for the cost induced by its own flow of state
//! distributions. Here the measure is a finite weighted bundle of
//! trajectories. Each iteration computes a best response of every initial
//! particle against the current flow and averages it into the bundle with
//! weight `λ_k = 1/(k+1)`. Progress is measured by the exploitability: the
//! average cost a particle would save by switching to its best response.
//!
//! The running coupling is a Gaussian kernel convolution of the current
//! state distribution, `F[m](z) = c Σ_j w_j exp(−|z − z_j|² / (2σ²))` with
//! `z = (x, v)`. In one dimension it is tabulated per time step on a
//! regular `(x, v)` grid of spacing `σ/5` carrying exact nodal values and
//! derivatives, and evaluated by bicubic Hermite interpolation; the table
//! is linear in the measure and is updated incrementally. Outside the grid
//! and in higher dimensions the sum is evaluated directly.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::costs::{Constant, CostBounds, CostSpec, Derivatives, RunningCost, TerminalCost};
use crate::directopt::{solve_direct, DirectProblem, SolverSettings};
use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::params::ControlParams;
use crate::trajectory::Trajectory;

/// Normalizes nonnegative weights to sum to one, with the sequential
/// left-to-right sum exactly `1.0`.
pub fn normalize_exact(weights: &mut [f64]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::Config("a cloud needs at least one particle".into()));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::Config("weights must be finite and nonnegative".into()));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Config("weights must not all vanish".into()));
    }
    weights.iter_mut().for_each(|w| *w /= total);
    // Absorb the rounding error in the largest weight. Double rounding in
    // the later partial sums can make the total skip over 1.0; the trailing
    // weights only enter the last additions, so they always can hit it.
    let big = (0..weights.len()).fold(0, |b, i| if weights[i] > weights[b] { i } else { b });
    let n = weights.len();
    for i in std::iter::once(big).chain((0..n).rev().take(8)) {
        if settle(weights, i) {
            return Ok(());
        }
    }
    let sum: f64 = weights.iter().sum();
    Err(Error::Config(format!("could not normalize weights exactly (sum {sum})")))
}

/// Searches for a value of `weights[i]` giving a sequential sum of exactly
/// `1.0`. The sum is monotone in each weight, so bracket then bisect.
/// Leaves the weight unchanged on failure.
fn settle(weights: &mut [f64], i: usize) -> bool {
    let w0 = weights[i];
    let mut sum_with = |x: f64| {
        weights[i] = x;
        weights.iter().sum::<f64>()
    };
    let s0 = sum_with(w0);
    if s0 == 1.0 {
        return true;
    }
    let dir = if s0 < 1.0 { 1.0 } else { -1.0 };
    let crossed = |s: f64| (s - 1.0) * dir > 0.0;
    let (mut a, mut b) = (w0, w0);
    let mut step = (1.0 - s0).abs();
    let mut bracketed = false;
    for _ in 0..64 {
        b = (w0 + dir * step).max(0.0);
        let sb = sum_with(b);
        if sb == 1.0 {
            return true;
        }
        if crossed(sb) {
            bracketed = true;
            break;
        }
        a = b;
        step *= 2.0;
    }
    if bracketed {
        for _ in 0..128 {
            let m = a + (b - a) / 2.0;
            if m == a || m == b {
                break;
            }
            let sm = sum_with(m);
            if sm == 1.0 {
                return true;
            }
            if crossed(sm) {
                b = m;
            } else {
                a = m;
            }
        }
    }
    weights[i] = w0;
    false
}

/// Weighted empirical measure on states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleCloud {
    dim: usize,
    positions: Vec<f64>,
    velocities: Vec<f64>,
    weights: Vec<f64>,
}

impl ParticleCloud {
    /// Builds a cloud from rows `[x…, v…, weight]`, normalizing the weights.
    /// Every particle must be admissible for `domain`.
    pub fn from_rows(domain: &Domain, dim: usize, rows: &[Vec<f64>]) -> Result<Self> {
        domain.check_dimension(dim)?;
        let mut positions = Vec::with_capacity(rows.len() * dim);
        let mut velocities = Vec::with_capacity(rows.len() * dim);
        let mut weights = Vec::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            if row.len() != 2 * dim + 1 {
                return Err(Error::Config(format!(
                    "particle {i} has {} entries, expected {} (positions, velocities, weight)",
                    row.len(),
                    2 * dim + 1
                )));
            }
            if row.iter().any(|z| !z.is_finite()) {
                return Err(Error::Config(format!("particle {i} has a non-finite entry")));
            }
            let (x, v) = (&row[..dim], &row[dim..2 * dim]);
            if !domain.is_admissible(x, v) {
                return Err(Error::Domain(format!("particle {i} at x = {x:?}, v = {v:?} is not admissible")));
            }
            positions.extend_from_slice(x);
            velocities.extend_from_slice(v);
            weights.push(row[2 * dim]);
        }
        normalize_exact(&mut weights)?;
        Ok(Self { dim, positions, velocities, weights })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    pub fn velocity(&self, i: usize) -> &[f64] {
        &self.velocities[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Sequential sum of the weights.
    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Time-indexed push-forward of a weighted trajectory bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSnapshot {
    dim: usize,
    times: Vec<f64>,
    weights: Vec<f64>,
    /// `times.len()` blocks of `members · dim` positions.
    positions: Vec<f64>,
    velocities: Vec<f64>,
}

impl FlowSnapshot {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn members(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn offset(&self, k: usize, j: usize) -> usize {
        (k * self.members() + j) * self.dim
    }

    pub fn position(&self, k: usize, j: usize) -> &[f64] {
        let o = self.offset(k, j);
        &self.positions[o..o + self.dim]
    }

    pub fn velocity(&self, k: usize, j: usize) -> &[f64] {
        let o = self.offset(k, j);
        &self.velocities[o..o + self.dim]
    }

    /// The state distribution at grid time `k`.
    pub fn cloud(&self, k: usize) -> ParticleCloud {
        let m = self.members() * self.dim;
        let start = k * m;
        ParticleCloud {
            dim: self.dim,
            positions: self.positions[start..start + m].to_vec(),
            velocities: self.velocities[start..start + m].to_vec(),
            weights: self.weights.clone(),
        }
    }
}

/// Evaluates each trajectory of the bundle at every grid time.
pub fn push_flow(bundle: &[&Trajectory], weights: &[f64]) -> Result<FlowSnapshot> {
    let first = bundle.first().ok_or_else(|| Error::Config("empty trajectory bundle".into()))?;
    if weights.len() != bundle.len() {
        return Err(Error::Config(format!("{} weights for {} trajectories", weights.len(), bundle.len())));
    }
    for (j, tr) in bundle.iter().enumerate() {
        if !tr.same_grid(first) {
            return Err(Error::GridMismatch(format!(
                "trajectory {j} has {} steps of {} from {}, trajectory 0 has {} steps of {} from {}",
                tr.steps(),
                tr.dt(),
                tr.t0(),
                first.steps(),
                first.dt(),
                first.t0()
            )));
        }
    }
    let mut weights = weights.to_vec();
    normalize_exact(&mut weights)?;
    let steps = first.steps();
    let dim = first.dim();
    let mut positions = Vec::with_capacity((steps + 1) * bundle.len() * dim);
    let mut velocities = Vec::with_capacity(positions.capacity());
    for k in 0..=steps {
        for tr in bundle {
            positions.extend_from_slice(tr.position(k));
            velocities.extend_from_slice(tr.velocity(k));
        }
    }
    Ok(FlowSnapshot {
        dim,
        times: (0..=steps).map(|k| first.time(k)).collect(),
        weights,
        positions,
        velocities,
    })
}

/// Smooth bounded interaction kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    /// `strength · exp(−|Δz|² / (2 bandwidth²))` on `z = (x, v)`.
    Gaussian { bandwidth: f64, strength: f64 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        let KernelSpec::Gaussian { bandwidth, strength } = *self;
        if !(bandwidth.is_finite() && bandwidth > 0.0 && strength.is_finite() && strength >= 0.0) {
            return Err(Error::Config(format!("gaussian kernel needs bandwidth > 0 and strength >= 0, got {self:?}")));
        }
        Ok(())
    }

    fn parts(&self) -> (f64, f64) {
        let KernelSpec::Gaussian { bandwidth, strength } = *self;
        (bandwidth, strength)
    }

    /// Upper bound of the induced cost for a probability measure.
    pub fn bound(&self) -> f64 {
        self.parts().1
    }
}

/// Weighted point masses at one time.
#[derive(Debug, Clone, Default)]
struct Members {
    /// `(x…, v…)` per member.
    states: Vec<f64>,
    weights: Vec<f64>,
}

/// Direct kernel sum with analytic derivatives in `z = (x, v)`.
fn kernel_sum(kernel: &KernelSpec, members: &Members, z: &[f64], want: bool) -> Derivatives {
    let (sigma, c) = kernel.parts();
    let m = z.len();
    let inv = 1.0 / (sigma * sigma);
    let mut value = 0.0;
    let mut grad = vec![0.0; if want { m } else { 0 }];
    let mut hess = vec![0.0; if want { m * m } else { 0 }];
    let mut diff = vec![0.0; m];
    for (j, w) in members.weights.iter().enumerate() {
        let zj = &members.states[j * m..(j + 1) * m];
        let mut r2 = 0.0;
        for i in 0..m {
            diff[i] = z[i] - zj[i];
            r2 += diff[i] * diff[i];
        }
        let e = r2 * inv * 0.5;
        if e > 60.0 {
            continue;
        }
        let k = c * w * (-e).exp();
        value += k;
        if want {
            for a in 0..m {
                grad[a] -= diff[a] * inv * k;
                for b in 0..m {
                    let delta = if a == b { inv } else { 0.0 };
                    hess[a * m + b] += k * (diff[a] * diff[b] * inv * inv - delta);
                }
            }
        }
    }
    Derivatives { value, grad, hess }
}

/// Cubic Hermite basis on `[0, 1]`: values, first and second derivatives of
/// `(h00, h01, h10, h11)` (value at 0, value at 1, slope at 0, slope at 1).
fn hermite(s: f64) -> [[f64; 4]; 3] {
    let s2 = s * s;
    let s3 = s2 * s;
    [
        [2.0 * s3 - 3.0 * s2 + 1.0, -2.0 * s3 + 3.0 * s2, s3 - 2.0 * s2 + s, s3 - s2],
        [6.0 * s2 - 6.0 * s, -6.0 * s2 + 6.0 * s, 3.0 * s2 - 4.0 * s + 1.0, 3.0 * s2 - 2.0 * s],
        [12.0 * s - 6.0, -12.0 * s + 6.0, 6.0 * s - 4.0, 6.0 * s - 2.0],
    ]
}

/// One-dimensional kernel field on a regular `(x, v)` grid with nodal
/// values `f`, `f_x`, `f_v`, `f_xv`.
#[derive(Debug, Clone)]
struct GridField {
    x0: f64,
    v0: f64,
    h: f64,
    nx: usize,
    nv: usize,
    /// Four values per node, node-major, `v` fastest.
    data: Vec<[f64; 4]>,
}

impl GridField {
    fn new(xlo: f64, xhi: f64, vlo: f64, vhi: f64, h: f64) -> Self {
        let nx = ((xhi - xlo) / h).ceil() as usize + 1;
        let nv = ((vhi - vlo) / h).ceil() as usize + 1;
        Self { x0: xlo, v0: vlo, h, nx, nv, data: vec![[0.0; 4]; nx * nv] }
    }

    fn scale(&mut self, factor: f64) {
        for d in &mut self.data {
            d.iter_mut().for_each(|z| *z *= factor);
        }
    }

    /// Adds `c w exp(−|z − z_j|²/(2σ²))` at every node within `9σ`.
    fn add(&mut self, sigma: f64, c: f64, x: f64, v: f64, w: f64) {
        let inv = 1.0 / (sigma * sigma);
        let reach = 9.0 * sigma;
        let window = |lo: f64, n: usize, center: f64| -> (usize, usize) {
            let a = ((center - reach - lo) / self.h).floor().max(0.0) as usize;
            let b = (((center + reach - lo) / self.h).ceil().max(-1.0) + 1.0).min(n as f64) as usize;
            (a.min(n), b)
        };
        let (ia, ib) = window(self.x0, self.nx, x);
        let (ja, jb) = window(self.v0, self.nv, v);
        if ia >= ib || ja >= jb {
            return;
        }
        let factor = |lo: f64, i: usize, center: f64| -> (f64, f64) {
            let d = lo + self.h * i as f64 - center;
            let e = (-0.5 * d * d * inv).exp();
            (e, -d * inv * e)
        };
        let ev: Vec<(f64, f64)> = (ja..jb).map(|j| factor(self.v0, j, v)).collect();
        for i in ia..ib {
            let (ex, dex) = factor(self.x0, i, x);
            let row = i * self.nv;
            for (jj, &(e, de)) in ev.iter().enumerate() {
                let d = &mut self.data[row + ja + jj];
                let cw = c * w;
                d[0] += cw * ex * e;
                d[1] += cw * dex * e;
                d[2] += cw * ex * de;
                d[3] += cw * dex * de;
            }
        }
    }

    /// Interpolated value, gradient and Hessian, or `None` outside.
    fn eval(&self, x: f64, v: f64, want: bool) -> Option<Derivatives> {
        let sx = (x - self.x0) / self.h;
        let sv = (v - self.v0) / self.h;
        if !(sx >= 0.0 && sv >= 0.0 && sx <= (self.nx - 1) as f64 && sv <= (self.nv - 1) as f64) {
            return None;
        }
        let i = (sx.floor() as usize).min(self.nx - 2);
        let j = (sv.floor() as usize).min(self.nv - 2);
        let (s, u) = (sx - i as f64, sv - j as f64);
        let bx = hermite(s);
        let bv = hermite(u);
        let h = self.h;
        let mut out = [[0.0; 3]; 3]; // out[dx][dv]
        for (ci, di) in [(0usize, 0usize), (1, 1)] {
            for (cj, dj) in [(0usize, 0usize), (1, 1)] {
                let node = self.data[(i + di) * self.nv + j + dj];
                for ox in 0..3 {
                    if !want && ox > 0 {
                        break;
                    }
                    for ov in 0..(3 - ox) {
                        if !want && ov > 0 {
                            break;
                        }
                        let (px, pv) = (bx[ox], bv[ov]);
                        out[ox][ov] += node[0] * px[ci] * pv[cj]
                            + h * node[1] * px[2 + ci] * pv[cj]
                            + h * node[2] * px[ci] * pv[2 + cj]
                            + h * h * node[3] * px[2 + ci] * pv[2 + cj];
                    }
                }
            }
        }
        let (h1, h2) = (1.0 / h, 1.0 / (h * h));
        let value = out[0][0];
        if !want {
            return Some(Derivatives { value, grad: vec![], hess: vec![] });
        }
        let fxv = out[1][1] * h2;
        Some(Derivatives {
            value,
            grad: vec![out[1][0] * h1, out[0][1] * h1],
            hess: vec![out[2][0] * h2, fxv, fxv, out[0][2] * h2],
        })
    }
}

/// Running coupling field: per-time members and, in 1D, grids.
#[derive(Debug, Clone)]
struct CouplingField {
    kernel: KernelSpec,
    members: Vec<Members>,
    grids: Option<Vec<GridField>>,
}

impl CouplingField {
    fn empty(kernel: KernelSpec, times: usize, grid_box: Option<[f64; 4]>) -> Self {
        let (sigma, _) = kernel.parts();
        let grids = grid_box.map(|[xlo, xhi, vlo, vhi]| vec![GridField::new(xlo, xhi, vlo, vhi, sigma / 5.0); times]);
        Self { kernel, members: vec![Members::default(); times], grids }
    }

    fn scale(&mut self, factor: f64) {
        for m in &mut self.members {
            m.weights.iter_mut().for_each(|w| *w *= factor);
        }
        if let Some(grids) = &mut self.grids {
            grids.iter_mut().for_each(|g| g.scale(factor));
        }
    }

    fn add(&mut self, tr: &Trajectory, weight: f64) {
        let (sigma, c) = self.kernel.parts();
        for k in 0..self.members.len() {
            let m = &mut self.members[k];
            m.states.extend_from_slice(tr.position(k));
            m.states.extend_from_slice(tr.velocity(k));
            m.weights.push(weight);
            if let Some(grids) = &mut self.grids {
                grids[k].add(sigma, c, tr.position(k)[0], tr.velocity(k)[0], weight);
            }
        }
    }

    fn eval(&self, k: usize, x: &[f64], v: &[f64], want: bool) -> Derivatives {
        if let Some(grids) = &self.grids {
            if let Some(d) = grids[k].eval(x[0], v[0], want) {
                return d;
            }
        }
        let mut z = x.to_vec();
        z.extend_from_slice(v);
        kernel_sum(&self.kernel, &self.members[k], &z, want)
    }
}

/// `ℓ = L + F[m(t_k)]` with the nearest grid time `t_k`.
struct CoupledRunning {
    base: Arc<dyn RunningCost>,
    field: Option<Arc<CouplingField>>,
    t0: f64,
    dt: f64,
    steps: usize,
}

impl CoupledRunning {
    fn index(&self, t: f64) -> usize {
        (((t - self.t0) / self.dt).round().max(0.0) as usize).min(self.steps)
    }
}

impl RunningCost for CoupledRunning {
    fn value(&self, x: &[f64], v: &[f64], t: f64) -> f64 {
        let coupling = self.field.as_ref().map_or(0.0, |f| f.eval(self.index(t), x, v, false).value);
        coupling + self.base.value(x, v, t)
    }

    fn derivatives(&self, x: &[f64], v: &[f64], t: f64) -> Derivatives {
        let mut d = match &self.field {
            Some(f) => f.eval(self.index(t), x, v, true),
            None => {
                let m = 2 * x.len();
                Derivatives { value: 0.0, grad: vec![0.0; m], hess: vec![0.0; m * m] }
            }
        };
        if !self.base.is_zero() {
            let b = self.base.derivatives(x, v, t);
            d.value += b.value;
            d.grad.iter_mut().zip(&b.grad).for_each(|(a, b)| *a += b);
            d.hess.iter_mut().zip(&b.hess).for_each(|(a, b)| *a += b);
        }
        d
    }

    fn is_zero(&self) -> bool {
        self.field.is_none() && self.base.is_zero()
    }
}

/// `g = G[m(T)]`, evaluated directly.
struct CoupledTerminal {
    base: Arc<dyn TerminalCost>,
    kernel: Option<KernelSpec>,
    members: Members,
}

impl TerminalCost for CoupledTerminal {
    fn value(&self, x: &[f64], v: &[f64]) -> f64 {
        let mut z = x.to_vec();
        z.extend_from_slice(v);
        self.kernel.map_or(0.0, |k| kernel_sum(&k, &self.members, &z, false).value) + self.base.value(x, v)
    }

    fn derivatives(&self, x: &[f64], v: &[f64]) -> Derivatives {
        let mut z = x.to_vec();
        z.extend_from_slice(v);
        let m = z.len();
        let mut d = match &self.kernel {
            Some(k) => kernel_sum(k, &self.members, &z, true),
            None => Derivatives { value: 0.0, grad: vec![0.0; m], hess: vec![0.0; m * m] },
        };
        if !self.base.is_zero() {
            let b = self.base.derivatives(x, v);
            d.value += b.value;
            d.grad.iter_mut().zip(&b.grad).for_each(|(a, b)| *a += b);
            d.hess.iter_mut().zip(&b.hess).for_each(|(a, b)| *a += b);
        }
        d
    }

    fn is_zero(&self) -> bool {
        self.kernel.is_none() && self.base.is_zero()
    }
}

/// Couplings of the game: kernels for `F` and `G` and the base costs `L`
/// (running) and terminal.
#[derive(Clone, Debug)]
pub struct CouplingSpec {
    pub running: Option<KernelSpec>,
    pub terminal: Option<KernelSpec>,
    pub base: CostSpec,
}

impl CouplingSpec {
    pub fn decoupled() -> Self {
        Self { running: None, terminal: None, base: CostSpec::zero() }
    }
}

/// Current flow seen by a best response.
#[derive(Clone)]
pub struct FieldState {
    running: Option<Arc<CouplingField>>,
    terminal_members: Members,
}

impl FieldState {
    /// Field of a weighted bundle, tabulated in one dimension.
    fn build(couplings: &CouplingSpec, bundle: &[BundleMember], grid_box: Option<[f64; 4]>) -> Self {
        let steps = bundle[0].trajectory.steps();
        let running = couplings.running.map(|k| {
            let mut f = CouplingField::empty(k, steps + 1, grid_box);
            for m in bundle {
                f.add(&m.trajectory, m.weight);
            }
            Arc::new(f)
        });
        let mut terminal_members = Members::default();
        for m in bundle {
            let tr = &m.trajectory;
            terminal_members.states.extend_from_slice(tr.position(steps));
            terminal_members.states.extend_from_slice(tr.velocity(steps));
            terminal_members.weights.push(m.weight);
        }
        Self { running, terminal_members }
    }

    fn costs(&self, couplings: &CouplingSpec, t0: f64, dt: f64, steps: usize) -> CostSpec {
        let (run_hi, term_hi) = (
            couplings.running.map_or(0.0, |k| k.bound()),
            couplings.terminal.map_or(0.0, |k| k.bound()),
        );
        let b = couplings.base.bounds;
        CostSpec {
            running: Arc::new(CoupledRunning {
                base: couplings.base.running.clone(),
                field: self.running.clone(),
                t0,
                dt,
                steps,
            }),
            terminal: Arc::new(CoupledTerminal {
                base: couplings.base.terminal.clone(),
                kernel: couplings.terminal,
                members: self.terminal_members.clone(),
            }),
            bounds: CostBounds {
                running_lo: b.running_lo,
                running_hi: b.running_hi + run_hi,
                terminal_lo: b.terminal_lo,
                terminal_hi: b.terminal_hi + term_hi,
            },
        }
    }
}

/// One trajectory of the bundle, attached to its initial particle.
#[derive(Debug, Clone)]
pub struct BundleMember {
    pub particle: usize,
    pub weight: f64,
    pub trajectory: Arc<Trajectory>,
}

/// Settings shared by every best response.
#[derive(Debug, Clone)]
pub struct GameSetup {
    pub domain: Domain,
    pub params: ControlParams,
    pub couplings: CouplingSpec,
    pub solver: SolverSettings,
}

/// Full cost `J^μ` of a trajectory under the given costs.
pub fn trajectory_cost(tr: &Trajectory, costs: &CostSpec, q: f64) -> f64 {
    let mut total = tr.control_cost(q);
    if !costs.running.is_zero() {
        total += (0..tr.steps()).map(|k| costs.running.value(tr.position(k), tr.velocity(k), tr.time(k))).sum::<f64>() * tr.dt();
    }
    let n = tr.steps();
    total + costs.terminal.value(tr.position(n), tr.velocity(n))
}

/// Minimizer of `J^μ` for one particle.
#[derive(Debug, Clone)]
pub struct BestResponse {
    pub trajectory: Trajectory,
    pub cost: f64,
    /// Final penalty weight, reused to warm-start the next solve.
    pub rho: f64,
}

/// Best response of one particle against fixed costs, optionally started
/// from a previous trajectory and penalty weight.
pub fn best_response(
    setup: &GameSetup,
    costs: &CostSpec,
    x: &[f64],
    v: &[f64],
    warm: Option<(&Trajectory, f64)>,
) -> Result<BestResponse> {
    let mut prob = DirectProblem::new(setup.domain, setup.params, costs.clone(), 0.0, x.to_vec(), v.to_vec(), setup.solver.clone());
    if let Some((tr, rho)) = warm {
        prob.warm_start = Some(tr.accelerations().to_vec());
        prob.settings.rho0 = rho.max(setup.solver.rho0);
    }
    let sol = solve_direct(&prob)?;
    let cost = trajectory_cost(&sol.trajectory, costs, setup.params.q());
    Ok(BestResponse { trajectory: sol.trajectory, cost, rho: sol.report.rho })
}

/// `Σ_m w_m J(γ_m) − Σ_j w_j J(BR_j)`.
pub fn exploitability(bundle_costs: &[(f64, f64)], best_costs: &[(f64, f64)]) -> f64 {
    let current: f64 = bundle_costs.iter().map(|(w, c)| w * c).sum();
    let best: f64 = best_costs.iter().map(|(w, c)| w * c).sum();
    current - best
}

/// Run configuration, as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MfgConfig {
    pub domain: Domain,
    pub q: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "N")]
    pub steps: usize,
    /// Rows `[x…, v…, weight]`.
    pub particles: Vec<Vec<f64>>,
    #[serde(default)]
    pub kernel: Option<KernelSpec>,
    #[serde(default)]
    pub terminal_kernel: Option<KernelSpec>,
    pub fp_iters: usize,
    pub target_exploitability: f64,
    /// Particles with `(v·∇d)_+^(2q−1)/|d|^(q−1)` above this are flagged.
    #[serde(default)]
    pub r_cap: Option<f64>,
    #[serde(default)]
    pub solver: Option<SolverSettings>,
}

impl MfgConfig {
    pub fn dim(&self) -> usize {
        self.particles.first().map_or(0, |r| r.len().saturating_sub(1) / 2)
    }

    pub fn validate(&self) -> Result<ParticleCloud> {
        self.domain.validate()?;
        ControlParams::new(self.q, self.horizon)?;
        if self.steps < 2 {
            return Err(Error::Config("N must be at least 2".into()));
        }
        if self.fp_iters == 0 {
            return Err(Error::Config("fp_iters must be positive".into()));
        }
        if !(self.target_exploitability >= 0.0) {
            return Err(Error::Config("target_exploitability must be nonnegative".into()));
        }
        for k in self.kernel.iter().chain(&self.terminal_kernel) {
            k.validate()?;
        }
        if let Some(r) = self.r_cap {
            if !(r > 0.0) {
                return Err(Error::Config("r_cap must be positive".into()));
            }
        }
        let dim = self.dim();
        if dim == 0 || self.particles.iter().any(|r| r.len() != 2 * dim + 1) {
            return Err(Error::Config("particles must be rows [x..., v..., weight] of a common length 2n+1".into()));
        }
        ParticleCloud::from_rows(&self.domain, dim, &self.particles)
    }

    pub fn setup(&self) -> Result<GameSetup> {
        let mut solver = self.solver.clone().unwrap_or_default();
        solver.steps = self.steps;
        solver.validate()?;
        Ok(GameSetup {
            domain: self.domain,
            params: ControlParams::new(self.q, self.horizon)?,
            couplings: CouplingSpec { running: self.kernel, terminal: self.terminal_kernel, base: CostSpec::zero() },
            solver,
        })
    }
}

/// Outcome of a fictitious-play run.
#[derive(Debug, Clone)]
pub struct MfgResult {
    /// Exploitability of the bundle before iteration `k`'s update.
    pub history: Vec<f64>,
    pub converged: bool,
    pub cloud: ParticleCloud,
    pub bundle: Vec<BundleMember>,
    pub flow: FlowSnapshot,
    /// Indices of initial particles above the configured `r` cap.
    pub flagged: Vec<usize>,
    /// Mixed cost of each initial particle under the final flow.
    pub particle_costs: Vec<f64>,
}

fn grid_box(setup: &GameSetup, bundle: &[BundleMember]) -> Option<[f64; 4]> {
    let kernel = setup.couplings.running?;
    if bundle[0].trajectory.dim() != 1 {
        return None;
    }
    let (sigma, _) = kernel.parts();
    let (mut xlo, mut xhi, mut vlo, mut vhi) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for m in bundle {
        for &x in m.trajectory.positions() {
            xlo = xlo.min(x);
            xhi = xhi.max(x);
        }
        for &v in m.trajectory.velocities() {
            vlo = vlo.min(v);
            vhi = vhi.max(v);
        }
    }
    if let Domain::Interval = setup.domain {
        xlo = xlo.max(-1.0);
        xhi = xhi.min(1.0);
    }
    let margin = 3.0 * sigma;
    Some([xlo - margin, xhi + margin, vlo - margin, vhi + margin])
}

/// Runs fictitious play from the configuration.
pub fn fictitious_play(config: &MfgConfig) -> Result<MfgResult> {
    let cloud = config.validate()?;
    let setup = config.setup()?;
    let flagged = match config.r_cap {
        Some(r) => (0..cloud.len())
            .filter(|&i| setup.domain.theta_index(cloud.position(i), cloud.velocity(i), &setup.params) > r)
            .collect(),
        None => Vec::new(),
    };
    run(&setup, &cloud, config.fp_iters, config.target_exploitability, flagged)
}

/// Fictitious play on an explicit setup.
pub fn run(setup: &GameSetup, cloud: &ParticleCloud, fp_iters: usize, target: f64, flagged: Vec<usize>) -> Result<MfgResult> {
    let q = setup.params.q();
    let steps = setup.solver.steps;
    let dt = setup.params.horizon() / steps as f64;
    let decoupled = CostSpec {
        running: setup.couplings.base.running.clone(),
        terminal: setup.couplings.base.terminal.clone(),
        bounds: setup.couplings.base.bounds,
    };
    let initial: Vec<BestResponse> = (0..cloud.len())
        .into_par_iter()
        .map(|i| best_response(setup, &decoupled, cloud.position(i), cloud.velocity(i), None))
        .collect::<Result<_>>()?;
    let mut rhos: Vec<f64> = initial.iter().map(|b| b.rho).collect();
    let mut latest: Vec<Arc<Trajectory>> = initial.into_iter().map(|b| Arc::new(b.trajectory)).collect();
    let mut bundle: Vec<BundleMember> = latest
        .iter()
        .enumerate()
        .map(|(i, tr)| BundleMember { particle: i, weight: cloud.weight(i), trajectory: tr.clone() })
        .collect();
    let grid = grid_box(setup, &bundle);
    let mut field = FieldState::build(&setup.couplings, &bundle, grid);
    let mut history = Vec::new();
    let mut converged = false;
    for k in 1..=fp_iters {
        let costs = field.costs(&setup.couplings, 0.0, dt, steps);
        let responses: Vec<BestResponse> = (0..cloud.len())
            .into_par_iter()
            .map(|i| best_response(setup, &costs, cloud.position(i), cloud.velocity(i), Some((&latest[i], rhos[i]))))
            .collect::<Result<_>>()?;
        let bundle_costs: Vec<(f64, f64)> = bundle
            .par_iter()
            .map(|m| (m.weight, trajectory_cost(&m.trajectory, &costs, q)))
            .collect();
        let best_costs: Vec<(f64, f64)> =
            responses.iter().enumerate().map(|(i, b)| (cloud.weight(i), b.cost)).collect();
        let e = exploitability(&bundle_costs, &best_costs);
        history.push(e);
        drop(costs);
        if e <= target {
            converged = true;
            break;
        }
        if k == fp_iters {
            break;
        }
        let lambda = 1.0 / (k as f64 + 1.0);
        for m in &mut bundle {
            m.weight *= 1.0 - lambda;
        }
        let mut running = field.running.take().map(|f| Arc::try_unwrap(f).unwrap_or_else(|f| (*f).clone()));
        if let Some(f) = &mut running {
            f.scale(1.0 - lambda);
        }
        field.terminal_members.weights.iter_mut().for_each(|w| *w *= 1.0 - lambda);
        for (i, BestResponse { trajectory: tr, rho, .. }) in responses.into_iter().enumerate() {
            let add = lambda * cloud.weight(i);
            rhos[i] = rho;
            if let Some(f) = &mut running {
                f.add(&tr, add);
            }
            field.terminal_members.states.extend_from_slice(tr.position(steps));
            field.terminal_members.states.extend_from_slice(tr.velocity(steps));
            field.terminal_members.weights.push(add);
            let tr = Arc::new(tr);
            match bundle.iter_mut().find(|m| m.particle == i && *m.trajectory == *tr) {
                Some(m) => m.weight += add,
                None => bundle.push(BundleMember { particle: i, weight: add, trajectory: tr.clone() }),
            }
            latest[i] = tr;
        }
        field.running = running.map(Arc::new);
        let mut weights: Vec<f64> = bundle.iter().map(|m| m.weight).collect();
        normalize_exact(&mut weights)?;
        bundle.iter_mut().zip(weights).for_each(|(m, w)| m.weight = w);
    }
    let trajectories: Vec<&Trajectory> = bundle.iter().map(|m| m.trajectory.as_ref()).collect();
    let weights: Vec<f64> = bundle.iter().map(|m| m.weight).collect();
    let flow = push_flow(&trajectories, &weights)?;
    let costs = field.costs(&setup.couplings, 0.0, dt, steps);
    let mut particle_costs = vec![0.0; cloud.len()];
    for m in &bundle {
        particle_costs[m.particle] += m.weight / cloud.weight(m.particle) * trajectory_cost(&m.trajectory, &costs, q);
    }
    Ok(MfgResult {
        history,
        converged,
        cloud: cloud.clone(),
        bundle,
        flow,
        flagged,
        particle_costs,
    })
}

/// Convenience: constant base running cost `L ≡ c` as a [`CostSpec`].
pub fn constant_base(c: f64) -> CostSpec {
    CostSpec {
        running: Arc::new(Constant(c)),
        terminal: Arc::new(Constant(0.0)),
        bounds: CostBounds { running_lo: c, running_hi: c, terminal_lo: 0.0, terminal_hi: 0.0 },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_normalization() {
        let mut w = vec![0.1; 7];
        normalize_exact(&mut w).unwrap();
        assert_eq!(w.iter().sum::<f64>(), 1.0);
        let mut w: Vec<f64> = (1..=50).map(|i| 1.0 / i as f64).collect();
        normalize_exact(&mut w).unwrap();
        assert_eq!(w.iter().sum::<f64>(), 1.0);
        assert!(normalize_exact(&mut [0.0, 0.0]).is_err());
        assert!(normalize_exact(&mut [1.0, -0.5]).is_err());
        assert!(normalize_exact(&mut []).is_err());
    }

    #[test]
    fn cloud_rejects_inadmissible_particles() {
        let rows = vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.5, 1.0]];
        assert!(matches!(ParticleCloud::from_rows(&Domain::Interval, 1, &rows), Err(Error::Domain(_))));
        let rows = vec![vec![0.0, 1.0, 2.0], vec![1.0, -0.5, 2.0]];
        let c = ParticleCloud::from_rows(&Domain::Interval, 1, &rows).unwrap();
        assert_eq!(c.weights(), &[0.5, 0.5]);
        assert_eq!(c.mass(), 1.0);
    }

    #[test]
    fn push_flow_single_particle() {
        let tr = Trajectory::from_accelerations(0.0, 0.25, &[0.0], &[1.0], vec![-1.0; 4]);
        let flow = push_flow(&[&tr], &[3.0]).unwrap();
        assert_eq!(flow.times().len(), 5);
        for k in 0..5 {
            assert_eq!(flow.position(k, 0), tr.position(k));
            assert_eq!(flow.cloud(k).mass(), 1.0);
        }
        let other = Trajectory::from_accelerations(0.0, 0.5, &[0.0], &[1.0], vec![-1.0; 2]);
        assert!(matches!(push_flow(&[&tr, &other], &[1.0, 1.0]), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn grid_field_matches_direct_sum() {
        let kernel = KernelSpec::Gaussian { bandwidth: 0.2, strength: 1.3 };
        let (sigma, c) = kernel.parts();
        let mut grid = GridField::new(-1.5, 1.5, -2.0, 2.0, sigma / 5.0);
        let mut members = Members::default();
        for (x, v, w) in [(0.1, 0.3, 0.25), (-0.4, -1.0, 0.5), (0.9, 0.0, 0.25)] {
            grid.add(sigma, c, x, v, w);
            members.states.extend_from_slice(&[x, v]);
            members.weights.push(w);
        }
        for (x, v) in [(0.0, 0.0), (0.13, 0.31), (-0.55, -0.77), (1.2, 1.9)] {
            let g = grid.eval(x, v, true).unwrap();
            let d = kernel_sum(&kernel, &members, &[x, v], true);
            assert!((g.value - d.value).abs() < 1e-5, "{x} {v}");
            for i in 0..2 {
                assert!((g.grad[i] - d.grad[i]).abs() < 1e-3);
            }
            for i in 0..4 {
                assert!((g.hess[i] - d.hess[i]).abs() < 5e-2);
            }
        }
        assert!(grid.eval(2.0, 0.0, false).is_none());
    }

    #[test]
    fn kernel_sum_derivatives_match_differences() {
        let kernel = KernelSpec::Gaussian { bandwidth: 0.3, strength: 2.0 };
        let members = Members { states: vec![0.1, 0.2, -0.3, 0.5], weights: vec![0.4, 0.6] };
        let z = [0.05, 0.1];
        let d = kernel_sum(&kernel, &members, &z, true);
        let fd = crate::costs::finite_difference_derivatives(|z| kernel_sum(&kernel, &members, z, false).value, &z);
        for i in 0..2 {
            assert!((d.grad[i] - fd.grad[i]).abs() < 1e-6);
        }
        for i in 0..4 {
            assert!((d.hess[i] - fd.hess[i]).abs() < 1e-4);
        }
    }

    #[test]
    fn config_json_shape() {
        let text = r#"{"domain":{"type":"interval"},"q":2,"T":1,"N":20,
            "particles":[[0.0,0.5,1.0]],"kernel":{"type":"gaussian","bandwidth":0.2,"strength":1},
            "fp_iters":3,"target_exploitability":1e-6}"#;
        let cfg: MfgConfig = serde_json::from_str(text).unwrap();
        assert_eq!(cfg.dim(), 1);
        assert!(cfg.validate().is_ok());
        let bad = text.replace("\"fp_iters\"", "\"seed\":1,\"fp_iters\"");
        assert!(serde_json::from_str::<MfgConfig>(&bad).is_err());
    }
}
