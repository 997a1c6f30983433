//! The auxiliary one-dimensional braking problem.
//!
//! Starting at position `x < 0` with velocity `v > 0`, a velocity curve `η`
//! on `[0, θ]` must go from `v` to `w` while staying above `w` and without
//! crossing the origin (`x + ∫η ≤ 0`). Its cost is `(1/q) ∫ |η'|^q`. The
//! minimum `I(θ, w)` has three closed-form regimes:
//!
//! * **linear**: the straight ramp from `v` to `w` already stops short of
//!   the origin, `θ ≤ 2|x| / (v + w)`;
//! * **saturated**: the optimal curve brakes to `w` at a time `t̄ ≤ θ` and
//!   then coasts, `θ ≥ (2q−1)|x| / ((q−1)v + qw)`;
//! * **interior**: in between, the curve is a `q`-Laplacian arc whose shape
//!   is fixed by the root `X > 1` of `f(X) = −((2q−1)x/θ + (q−1)w + qv)/(v−w)`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::numeric::{bisect_increasing, scan_then_golden};
use crate::params::ControlParams;
use crate::trajectory::Trajectory;

/// Relative tolerance for branch comparisons on dimensionless ratios.
const BRANCH_RTOL: f64 = 1e-12;

/// `1 − (1 − 1/y)^a` for `y ≥ 1`, without cancellation for large `y`.
pub(crate) fn one_minus_pow(y: f64, a: f64) -> f64 {
    -(a * (-1.0 / y).ln_1p()).exp_m1()
}

/// The increasing bijection `f : [1, ∞) → [−1, −1/2)`,
/// `f(y) = −q / (1 − (1 − 1/y)^p) + (q − 1) y`.
pub fn f_eval(y: f64, params: &ControlParams) -> Result<f64> {
    if !(y >= 1.0) {
        return domain(format!("f is defined on [1, inf), got y = {y}"));
    }
    if y.is_infinite() {
        return Ok(-0.5);
    }
    Ok(f_unchecked(y, params.q()))
}

fn f_unchecked(y: f64, q: f64) -> f64 {
    let p = q / (q - 1.0);
    let d = one_minus_pow(y, p);
    let u = 1.0 / y;
    if u >= 1e-2 {
        return -q / d + (q - 1.0) * y;
    }
    // Both terms grow like (q−1)y; expand (q−1)·y·D − q in powers of 1/y
    // so the leading parts cancel exactly.
    let mut num = 0.0;
    let mut binom = p; // binom(p, k) for k = 1
    let mut upow = 1.0; // u^(k-1)
    for k in 2..=10 {
        binom *= (p - (k - 1) as f64) / k as f64;
        upow *= u;
        let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
        num += sign * binom * upow;
    }
    (q - 1.0) * num / d
}

/// Inverse of [`f_eval`], by bisection with a doubling bracket.
pub fn f_inverse(target: f64, params: &ControlParams) -> Result<f64> {
    if !(-1.0..-0.5).contains(&target) {
        return Err(Error::Range(format!(
            "f maps onto [-1, -0.5), target {target} is outside"
        )));
    }
    if target == -1.0 {
        return Ok(1.0);
    }
    let q = params.q();
    bisect_increasing(|y| f_unchecked(y, q), target, 1.0, 1.0, 1e-12)
        .ok_or_else(|| Error::Range(format!("no preimage found for target {target}")))
}

/// Data of the auxiliary problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuxProblem {
    pub x: f64,
    pub v: f64,
    pub w: f64,
    pub theta: f64,
}

impl AuxProblem {
    /// Validates `x < 0`, `v > 0`, `0 ≤ w < v` and `0 < θ ≤ T`.
    pub fn new(x: f64, v: f64, w: f64, theta: f64, params: &ControlParams) -> Result<Self> {
        let prob = Self { x, v, w, theta };
        prob.validate(params)?;
        Ok(prob)
    }

    pub fn validate(&self, params: &ControlParams) -> Result<()> {
        let Self { x, v, w, theta } = *self;
        if !(x.is_finite() && x < 0.0) {
            return domain(format!("position must satisfy x < 0, got x = {x}"));
        }
        if !(v.is_finite() && v > 0.0) {
            return domain(format!("initial velocity must satisfy v > 0, got v = {v}"));
        }
        if !(w >= 0.0 && w < v) {
            return domain(format!("terminal velocity must satisfy 0 <= w < v, got w = {w}, v = {v}"));
        }
        if !(theta > 0.0 && theta <= params.horizon() * (1.0 + BRANCH_RTOL)) {
            return domain(format!(
                "duration must satisfy 0 < theta <= T = {}, got theta = {theta}",
                params.horizon()
            ));
        }
        Ok(())
    }

    /// `θ(v + w) / (2|x|)`: at most 1 in the linear regime.
    fn linear_ratio(&self) -> f64 {
        self.theta * (self.v + self.w) / (2.0 * self.x.abs())
    }

    /// `θ((q−1)v + qw) / ((2q−1)|x|)`: at least 1 in the saturated regime.
    fn saturated_ratio(&self, q: f64) -> f64 {
        self.theta * ((q - 1.0) * self.v + q * self.w) / ((2.0 * q - 1.0) * self.x.abs())
    }
}

/// Which closed form of `I(θ, w)` applies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AuxRegion {
    Linear,
    /// Carries the root `X > 1`.
    Interior(f64),
    Saturated,
}

impl AuxRegion {
    pub fn tag(&self) -> &'static str {
        match self {
            AuxRegion::Linear => "linear",
            AuxRegion::Interior(_) => "interior",
            AuxRegion::Saturated => "saturated",
        }
    }
}

/// Region of the problem. Exact boundary points go to the closed branches.
pub fn classify(prob: &AuxProblem, params: &ControlParams) -> Result<AuxRegion> {
    prob.validate(params)?;
    let q = params.q();
    if prob.linear_ratio() <= 1.0 + BRANCH_RTOL {
        return Ok(AuxRegion::Linear);
    }
    if prob.saturated_ratio(q) >= 1.0 - BRANCH_RTOL {
        return Ok(AuxRegion::Saturated);
    }
    let AuxProblem { x, v, w, theta } = *prob;
    let rhs = -((2.0 * q - 1.0) * x / theta + (q - 1.0) * w + q * v) / (v - w);
    let rhs = rhs.clamp(-1.0, f64::from_bits((-0.5f64).to_bits() + 1));
    Ok(AuxRegion::Interior(f_inverse(rhs, params)?))
}

fn middle_constant(q: f64) -> f64 {
    q.powf(q - 1.0) / ((2.0 * q - 1.0) * (q - 1.0).powf(q - 1.0))
}

fn saturated_cost(prob: &AuxProblem, params: &ControlParams) -> Result<f64> {
    let AuxProblem { x, v, w, theta } = *prob;
    let room = x.abs() - theta * w;
    if !(room > 0.0) {
        return domain(format!(
            "no admissible curve: coasting at w = {w} for theta = {theta} already covers |x| = {}",
            x.abs()
        ));
    }
    let q = params.q();
    Ok(params.singular_constant() * (v - w).powf(2.0 * q - 1.0) / room.powf(q - 1.0))
}

/// The minimal cost `I(θ, w)`.
pub fn cost_i(prob: &AuxProblem, params: &ControlParams) -> Result<f64> {
    let q = params.q();
    let AuxProblem { v, w, theta, .. } = *prob;
    match classify(prob, params)? {
        AuxRegion::Linear => Ok((v - w).powf(q) / (q * theta.powf(q - 1.0))),
        AuxRegion::Interior(root) => {
            let p = params.p();
            let dp = one_minus_pow(root, p);
            let da = one_minus_pow(root, p + 1.0);
            Ok(middle_constant(q) * (v - w).powf(q) * (theta * root).powf(1.0 - q) * da / dp.powf(q))
        }
        AuxRegion::Saturated => saturated_cost(prob, params),
    }
}

/// Explicit interior cost for `q = 2`:
/// `6x²/θ³ + 6x(v+w)/θ² + 2(v² + vw + w²)/θ`.
pub fn cost_i_q2(prob: &AuxProblem) -> Result<f64> {
    let params = ControlParams::new(2.0, prob.theta)?;
    match classify(prob, &params)? {
        AuxRegion::Interior(_) => {}
        other => return domain(format!("explicit q = 2 formula needs the interior region, got {}", other.tag())),
    }
    let AuxProblem { x, v, w, theta } = *prob;
    Ok(6.0 * x * x / theta.powi(3) + 6.0 * x * (v + w) / theta.powi(2) + 2.0 * (v * v + v * w + w * w) / theta)
}

/// Closed form of the optimal velocity curve on `[0, θ]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VelocityProfile {
    /// `η(t) = v − (v − w) t / θ`.
    LinearRamp { v: f64, w: f64, theta: f64 },
    /// `η(t) = w + (v − w)(1 − t/t̄)_+^p`.
    PowerArc { v: f64, w: f64, theta: f64, t_bar: f64, p: f64 },
    /// `η(t) = v − (v − w)(1 − s^p) / (1 − (1 − 1/X)^p)` with
    /// `s = 1 − t/(Xθ)`; equivalently the flux `|η'|^(q−2) η'` is
    /// affine with value `|ζ|^(q−2) ζ` at 0 and slope `mu`.
    InteriorArc { v: f64, w: f64, theta: f64, zeta: f64, mu: f64, root: f64, p: f64 },
}

impl VelocityProfile {
    pub fn duration(&self) -> f64 {
        match *self {
            Self::LinearRamp { theta, .. } | Self::PowerArc { theta, .. } | Self::InteriorArc { theta, .. } => theta,
        }
    }

    pub fn initial_velocity(&self) -> f64 {
        match *self {
            Self::LinearRamp { v, .. } | Self::PowerArc { v, .. } | Self::InteriorArc { v, .. } => v,
        }
    }

    pub fn terminal_velocity(&self) -> f64 {
        match *self {
            Self::LinearRamp { w, .. } | Self::PowerArc { w, .. } | Self::InteriorArc { w, .. } => w,
        }
    }

    /// Velocity at time `t`, clamped to `[0, θ]`.
    pub fn velocity(&self, t: f64) -> f64 {
        let theta = self.duration();
        if t <= 0.0 {
            return self.initial_velocity();
        }
        if t >= theta {
            return self.terminal_velocity();
        }
        match *self {
            Self::LinearRamp { v, w, theta } => v - (v - w) * t / theta,
            Self::PowerArc { v, w, t_bar, p, .. } => {
                if t >= t_bar {
                    w
                } else {
                    w + (v - w) * (1.0 - t / t_bar).powf(p)
                }
            }
            Self::InteriorArc { v, w, theta, root, p, .. } => {
                let s = 1.0 - t / (root * theta);
                v - (v - w) * (1.0 - s.powf(p)) / one_minus_pow(root, p)
            }
        }
    }

    /// Acceleration `η'(t)` for `t` in `[0, θ)`.
    pub fn acceleration(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, self.duration());
        match *self {
            Self::LinearRamp { v, w, theta } => -(v - w) / theta,
            Self::PowerArc { v, w, t_bar, p, .. } => {
                if t >= t_bar {
                    0.0
                } else {
                    -(v - w) * p * (1.0 - t / t_bar).powf(p - 1.0) / t_bar
                }
            }
            Self::InteriorArc { v, w, theta, root, p, .. } => {
                let s = 1.0 - t / (root * theta);
                -(v - w) * p * s.powf(p - 1.0) / (root * theta * one_minus_pow(root, p))
            }
        }
    }

    /// `∫₀^t η`, for `t` clamped to `[0, θ]`.
    pub fn displacement(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, self.duration());
        match *self {
            Self::LinearRamp { v, w, theta } => v * t - (v - w) * t * t / (2.0 * theta),
            Self::PowerArc { v, w, t_bar, p, .. } => {
                let tau = t.min(t_bar);
                w * t + (v - w) * t_bar * (1.0 - (1.0 - tau / t_bar).powf(p + 1.0)) / (p + 1.0)
            }
            Self::InteriorArc { v, w, theta, root, p, .. } => {
                let len = root * theta;
                let s = 1.0 - t / len;
                v * t - (v - w) / one_minus_pow(root, p) * (t - len * (1.0 - s.powf(p + 1.0)) / (p + 1.0))
            }
        }
    }

    /// Multiplier of the position constraint: the constant derivative of the
    /// flux `|η'|^(q−2) η'` while the curve is strictly above `w`.
    pub fn multiplier(&self) -> f64 {
        match *self {
            Self::LinearRamp { .. } => 0.0,
            Self::PowerArc { v, w, t_bar, p, .. } => ((v - w) * p / t_bar).powf(1.0 / (p - 1.0)) / t_bar,
            Self::InteriorArc { mu, .. } => mu,
        }
    }

    /// `η'(0)`.
    pub fn initial_slope(&self) -> f64 {
        match *self {
            Self::InteriorArc { zeta, .. } => zeta,
            _ => self.acceleration(0.0),
        }
    }

    /// Exact `(1/q) ∫₀^θ |η'|^q`.
    pub fn cost(&self, q: f64) -> f64 {
        match *self {
            Self::LinearRamp { v, w, theta } => (v - w).powf(q) / (q * theta.powf(q - 1.0)),
            Self::PowerArc { v, w, t_bar, p, .. } => ((v - w) * p / t_bar).powf(q) * t_bar / ((p + 1.0) * q),
            Self::InteriorArc { v, w, theta, root, p, .. } => {
                let len = root * theta;
                let dp = one_minus_pow(root, p);
                let da = one_minus_pow(root, p + 1.0);
                ((v - w) * p / (len * dp)).powf(q) * len * da / ((p + 1.0) * q)
            }
        }
    }

    /// Samples the curve on `n` equal steps starting at `(t0, x0)`.
    /// The sampled acceleration on each step is the velocity increment over
    /// the step, so the trajectory follows the exact discrete dynamics.
    pub fn sample(&self, t0: f64, x0: f64, n: usize, q: f64) -> Trajectory {
        let n = n.max(1);
        let dt = self.duration() / n as f64;
        let samples: Vec<f64> = (0..=n).map(|k| self.velocity(dt * k as f64)).collect();
        let mut tr = Trajectory::from_velocity_samples(t0, dt, x0, &samples);
        tr.cost = tr.control_cost(q);
        tr
    }
}

/// The minimizer of the auxiliary problem.
pub fn optimal_profile(prob: &AuxProblem, params: &ControlParams) -> Result<VelocityProfile> {
    let AuxProblem { x, v, w, theta } = *prob;
    let q = params.q();
    let p = params.p();
    Ok(match classify(prob, params)? {
        AuxRegion::Linear => VelocityProfile::LinearRamp { v, w, theta },
        AuxRegion::Saturated => {
            saturated_cost(prob, params)?;
            let t_bar = -(2.0 * q - 1.0) * (x + theta * w) / ((q - 1.0) * (v - w));
            VelocityProfile::PowerArc { v, w, theta, t_bar: t_bar.min(theta), p }
        }
        AuxRegion::Interior(root) => {
            let len = root * theta;
            let dp = one_minus_pow(root, p);
            let zeta = -p * (v - w) / (len * dp);
            let mu = (p * (v - w)).powf(q - 1.0) * len.powf(-q) * dp.powf(1.0 - q);
            VelocityProfile::InteriorArc { v, w, theta, zeta, mu, root, p }
        }
    })
}

/// Minimum of `w ↦ I(θ, w)` for `θ` in `(|x|/v, (2q−1)|x|/((q−1)v)]`:
/// returns `(w_min, I_min)`.
pub fn w_star(x: f64, v: f64, theta: f64, params: &ControlParams) -> Result<(f64, f64)> {
    let q = params.q();
    if !(x < 0.0 && v > 0.0) {
        return domain(format!("need x < 0 and v > 0, got x = {x}, v = {v}"));
    }
    let lo = x.abs() / v;
    let hi = (2.0 * q - 1.0) * x.abs() / ((q - 1.0) * v);
    if !(theta > lo && theta <= hi * (1.0 + BRANCH_RTOL)) {
        return domain(format!("theta = {theta} must lie in ({lo}, {hi}]"));
    }
    let w_min = (((2.0 * q - 1.0) * x.abs() / theta - (q - 1.0) * v) / q).max(0.0);
    let i_min = params.intermediate_constant() * (v - x.abs() / theta).powf(q) / theta.powf(q - 1.0);
    Ok((w_min, i_min))
}

/// Minimizes `θ ↦ I(θ, w)` over `(0, T]`. Returns `(θ*, I*)`.
pub fn inf_over_theta(x: f64, v: f64, w: f64, params: &ControlParams) -> Result<(f64, f64)> {
    let q = params.q();
    let horizon = params.horizon();
    let t_lin = 2.0 * x.abs() / (v + w);
    let t_sat = (2.0 * q - 1.0) * x.abs() / ((q - 1.0) * v + q * w);
    let eval = |theta: f64| -> Result<f64> { cost_i(&AuxProblem::new(x, v, w, theta, params)?, params) };
    // Validates the data even on the shortcut paths.
    eval(horizon.min(t_lin))?;
    if w == 0.0 && horizon >= t_sat {
        return Ok((t_sat, asymptotic_leading_term(x, v, params)));
    }
    if horizon <= t_lin {
        // The linear cost decreases in θ.
        return Ok((horizon, eval(horizon)?));
    }
    let hi = horizon.min(t_sat);
    let cost = |theta: f64| eval(theta).unwrap_or(f64::INFINITY);
    let (mut theta, mut best) = scan_then_golden(cost, t_lin, hi, 64, 1e-13);
    if horizon >= t_sat {
        // Past t_sat the cost is non-decreasing in θ, so t_sat is the only
        // tail candidate.
        let tail = eval(t_sat)?;
        if tail <= best {
            theta = t_sat;
            best = tail;
        }
    }
    Ok((theta, best))
}

/// `q^(q−1)/(2q−1)^q · v^(2q−1)/|x|^(q−1)`.
pub fn asymptotic_leading_term(x: f64, v: f64, params: &ControlParams) -> f64 {
    let q = params.q();
    params.singular_constant() * v.powf(2.0 * q - 1.0) / x.abs().powf(q - 1.0)
}
