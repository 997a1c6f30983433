//! Closed-form value functions for `ℓ = g = 0` in one dimension.
//!
//! On the half-line `x ≤ 0`, with `τ = T − t` the remaining time, the value
//! `φ(t, x, v)` is
//!
//! * `0` if `vτ ≤ |x|` (drifting freely never reaches the origin);
//! * `C_int (v − |x|/τ)^q / τ^(q−1)` if `|x| < vτ < (2q−1)|x|/(q−1)`,
//!   with `C_int = (2q−1)^(q−1) / (q (q−1)^(q−1))`;
//! * `C_S v^(2q−1) / |x|^(q−1)` if `vτ ≥ (2q−1)|x|/(q−1)`,
//!   with `C_S = q^(q−1) / (2q−1)^q`.
//!
//! Writing `a = v − |x|/τ`, the partial derivatives of the intermediate
//! branch are
//!
//! ```text
//! ∂φ/∂v = C_int q a^(q−1) τ^(1−q)
//! ∂φ/∂x = C_int q a^(q−1) τ^(−q)
//! ∂φ/∂t = C_int τ^(−q) a^(q−1) ((q−1) a − q|x|/τ)
//! ```
//!
//! and those of the singular branch are `∂φ/∂t = 0`,
//! `∂φ/∂x = (q−1) C_S v^(2q−1) / |x|^q`,
//! `∂φ/∂v = (2q−1) C_S v^(2q−2) / |x|^(q−1)`.
//!
//! On `[-1, 1]` the value `φ̃` only sees the endpoint the velocity points
//! to: `φ̃(t, x, v) = φ(t, x − 1, v)` for `v > 0`, `φ(t, −x − 1, −v)` for
//! `v < 0`, and `0` for `v = 0`.

use std::fmt;

use serde::{Deserialize, Serialize, Serializer};

use crate::auxpb::{optimal_profile, w_star, AuxProblem, VelocityProfile};
use crate::costs::CostSpec;
use crate::directopt::{value_u, SolverSettings};
use crate::error::{domain, Result};
use crate::geometry::Domain;
use crate::params::ControlParams;
use crate::trajectory::Trajectory;

/// A time-position-velocity triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State1D {
    pub t: f64,
    pub x: f64,
    pub v: f64,
}

impl State1D {
    pub fn new(t: f64, x: f64, v: f64) -> Self {
        Self { t, x, v }
    }
}

/// A value in `[0, +∞]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedValue {
    Finite(f64),
    Infinite,
}

impl ExtendedValue {
    pub fn is_finite(&self) -> bool {
        matches!(self, ExtendedValue::Finite(_))
    }

    /// The value as an `f64`, with `+∞` for [`ExtendedValue::Infinite`].
    pub fn as_f64(&self) -> f64 {
        match *self {
            ExtendedValue::Finite(v) => v,
            ExtendedValue::Infinite => f64::INFINITY,
        }
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            ExtendedValue::Finite(v) => Some(v),
            ExtendedValue::Infinite => None,
        }
    }
}

impl fmt::Display for ExtendedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedValue::Finite(v) => write!(f, "{v}"),
            ExtendedValue::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for ExtendedValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            ExtendedValue::Finite(v) => s.serialize_f64(v),
            ExtendedValue::Infinite => s.serialize_str("inf"),
        }
    }
}

/// Branch of `φ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiRegion {
    Zero,
    Intermediate,
    Singular,
    /// `x = 0` with `v > 0` and time left.
    Blowup,
}

impl PhiRegion {
    pub fn tag(&self) -> &'static str {
        match self {
            PhiRegion::Zero => "zero",
            PhiRegion::Intermediate => "intermediate",
            PhiRegion::Singular => "singular",
            PhiRegion::Blowup => "blowup",
        }
    }
}

/// Branch of `φ̃`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TildePhiRegion {
    NegSingular,
    NegIntermediate,
    Zero,
    PosIntermediate,
    PosSingular,
    /// `x = 1, v > 0` or `x = −1, v < 0`.
    Blowup,
}

impl TildePhiRegion {
    pub fn tag(&self) -> &'static str {
        match self {
            TildePhiRegion::NegSingular => "neg_singular",
            TildePhiRegion::NegIntermediate => "neg_intermediate",
            TildePhiRegion::Zero => "zero",
            TildePhiRegion::PosIntermediate => "pos_intermediate",
            TildePhiRegion::PosSingular => "pos_singular",
            TildePhiRegion::Blowup => "blowup",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        Some(match tag {
            "neg_singular" => TildePhiRegion::NegSingular,
            "neg_intermediate" => TildePhiRegion::NegIntermediate,
            "zero" => TildePhiRegion::Zero,
            "pos_intermediate" => TildePhiRegion::PosIntermediate,
            "pos_singular" => TildePhiRegion::PosSingular,
            "blowup" => TildePhiRegion::Blowup,
            _ => return None,
        })
    }
}

/// Partial derivatives `(∂/∂t, ∂/∂x, ∂/∂v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Partials {
    pub dt: f64,
    pub dx: f64,
    pub dv: f64,
}

fn remaining_time(t: f64, params: &ControlParams) -> Result<f64> {
    let horizon = params.horizon();
    if !(t.is_finite() && t <= horizon && t >= 0.0) {
        return domain(format!("time must lie in [0, T] = [0, {horizon}], got {t}"));
    }
    Ok(horizon - t)
}

/// Branch of `φ` at a state with `x ≤ 0`.
pub fn phi_region(state: &State1D, params: &ControlParams) -> Result<PhiRegion> {
    let State1D { t, x, v } = *state;
    if !(x <= 0.0) || !v.is_finite() {
        return domain(format!("half-line value needs x <= 0 and finite v, got x = {x}, v = {v}"));
    }
    let tau = remaining_time(t, params)?;
    if x == 0.0 {
        return Ok(if v > 0.0 && tau > 0.0 { PhiRegion::Blowup } else { PhiRegion::Zero });
    }
    let reach = v * tau / x.abs();
    Ok(if reach <= 1.0 {
        PhiRegion::Zero
    } else if reach >= params.braking_ratio() {
        PhiRegion::Singular
    } else {
        PhiRegion::Intermediate
    })
}

/// Value function on the half-line `x ≤ 0`.
pub fn phi(state: &State1D, params: &ControlParams) -> Result<ExtendedValue> {
    let region = phi_region(state, params)?;
    let State1D { t, x, v } = *state;
    let q = params.q();
    Ok(match region {
        PhiRegion::Zero => ExtendedValue::Finite(0.0),
        PhiRegion::Blowup => ExtendedValue::Infinite,
        PhiRegion::Singular => ExtendedValue::Finite(params.singular_constant() * v.powf(2.0 * q - 1.0) / x.abs().powf(q - 1.0)),
        PhiRegion::Intermediate => {
            let tau = params.horizon() - t;
            let a = v - x.abs() / tau;
            ExtendedValue::Finite(params.intermediate_constant() * a.powf(q) / tau.powf(q - 1.0))
        }
    })
}

/// Analytic partial derivatives of `φ` at `x < 0`.
pub fn phi_partials(state: &State1D, params: &ControlParams) -> Result<Partials> {
    let State1D { t, x, v } = *state;
    if !(x < 0.0) {
        return domain(format!("partial derivatives need x < 0, got x = {x}"));
    }
    let q = params.q();
    Ok(match phi_region(state, params)? {
        PhiRegion::Zero => Partials { dt: 0.0, dx: 0.0, dv: 0.0 },
        PhiRegion::Singular => {
            let cs = params.singular_constant();
            let d = x.abs();
            Partials {
                dt: 0.0,
                dx: (q - 1.0) * cs * v.powf(2.0 * q - 1.0) / d.powf(q),
                dv: (2.0 * q - 1.0) * cs * v.powf(2.0 * q - 2.0) / d.powf(q - 1.0),
            }
        }
        PhiRegion::Intermediate => {
            let c = params.intermediate_constant();
            let tau = params.horizon() - t;
            let d = x.abs();
            let a = v - d / tau;
            let a1 = a.powf(q - 1.0);
            Partials {
                dt: c * tau.powf(-q) * a1 * ((q - 1.0) * a - q * d / tau),
                dx: c * q * a1 * tau.powf(-q),
                dv: c * q * a1 * tau.powf(1.0 - q),
            }
        }
        PhiRegion::Blowup => unreachable!("x < 0 excludes the blow-up set"),
    })
}

fn residual(d: &Partials, v: f64, params: &ControlParams) -> f64 {
    let p = params.p();
    -d.dt - v * d.dx + d.dv.abs().powf(p) / p
}

/// `−∂φ/∂t − v ∂φ/∂x + (1/p)|∂φ/∂v|^p` from the analytic partials.
pub fn hjb_residual(state: &State1D, params: &ControlParams) -> Result<f64> {
    Ok(residual(&phi_partials(state, params)?, state.v, params))
}

/// Half-line state seen from the endpoint the velocity points to, and the
/// orientation sign (`+1` towards `x = 1`, `−1` towards `x = −1`).
fn to_half_line(state: &State1D) -> (State1D, f64) {
    let State1D { t, x, v } = *state;
    if v < 0.0 {
        (State1D::new(t, -x - 1.0, -v), -1.0)
    } else {
        (State1D::new(t, x - 1.0, v), 1.0)
    }
}

fn check_interval(state: &State1D) -> Result<()> {
    if !(state.x.abs() <= 1.0) || !state.v.is_finite() {
        return domain(format!("interval value needs |x| <= 1 and finite v, got x = {}, v = {}", state.x, state.v));
    }
    Ok(())
}

/// Branch of `φ̃` at a state with `|x| ≤ 1`.
pub fn tilde_phi_region(state: &State1D, params: &ControlParams) -> Result<TildePhiRegion> {
    check_interval(state)?;
    if state.v == 0.0 {
        remaining_time(state.t, params)?;
        return Ok(TildePhiRegion::Zero);
    }
    let (half, sign) = to_half_line(state);
    let positive = sign > 0.0;
    Ok(match phi_region(&half, params)? {
        PhiRegion::Zero => TildePhiRegion::Zero,
        PhiRegion::Blowup => TildePhiRegion::Blowup,
        PhiRegion::Intermediate if positive => TildePhiRegion::PosIntermediate,
        PhiRegion::Intermediate => TildePhiRegion::NegIntermediate,
        PhiRegion::Singular if positive => TildePhiRegion::PosSingular,
        PhiRegion::Singular => TildePhiRegion::NegSingular,
    })
}

/// Value function on `[-1, 1]`.
pub fn tilde_phi(state: &State1D, params: &ControlParams) -> Result<ExtendedValue> {
    check_interval(state)?;
    if state.v == 0.0 {
        remaining_time(state.t, params)?;
        return Ok(ExtendedValue::Finite(0.0));
    }
    phi(&to_half_line(state).0, params)
}

/// Analytic partial derivatives of `φ̃` at `|x| < 1`.
pub fn tilde_phi_partials(state: &State1D, params: &ControlParams) -> Result<Partials> {
    check_interval(state)?;
    if state.x.abs() == 1.0 {
        return domain("partial derivatives need |x| < 1");
    }
    if state.v == 0.0 {
        remaining_time(state.t, params)?;
        return Ok(Partials { dt: 0.0, dx: 0.0, dv: 0.0 });
    }
    let (half, sign) = to_half_line(state);
    let d = phi_partials(&half, params)?;
    Ok(Partials { dt: d.dt, dx: sign * d.dx, dv: sign * d.dv })
}

/// HJB residual of `φ̃` from the analytic partials.
pub fn tilde_hjb_residual(state: &State1D, params: &ControlParams) -> Result<f64> {
    Ok(residual(&tilde_phi_partials(state, params)?, state.v, params))
}

/// The minimizing trajectory for `φ`, sampled on `steps` equal steps of
/// `[t, T]`, with its sampled control cost.
pub fn optimal_trajectory(state: &State1D, params: &ControlParams, steps: usize) -> Result<Trajectory> {
    let region = phi_region(state, params)?;
    let State1D { t, x, v } = *state;
    let q = params.q();
    let tau = params.horizon() - t;
    let steps = steps.max(1);
    let profile = match region {
        PhiRegion::Blowup => return domain("no admissible trajectory: the value is infinite"),
        _ if tau == 0.0 => return domain("no time left: the trajectory is a single point"),
        PhiRegion::Zero => VelocityProfile::LinearRamp { v, w: v, theta: tau },
        PhiRegion::Singular => {
            let local = params.with_horizon(tau)?;
            optimal_profile(&AuxProblem::new(x, v, 0.0, tau, &local)?, &local)?
        }
        PhiRegion::Intermediate => {
            // Brake all the way to the origin, arriving at T with the
            // terminal velocity minimizing the auxiliary cost.
            let local = params.with_horizon(tau)?;
            let (w_hat, _) = w_star(x, v, tau, &local)?;
            VelocityProfile::PowerArc { v, w: w_hat, theta: tau, t_bar: tau, p: params.p() }
        }
    };
    Ok(profile.sample(t, x, steps, q))
}

/// The minimizing trajectory for `φ̃` on `steps` equal steps of `[t, T]`.
pub fn optimal_trajectory_tilde(state: &State1D, params: &ControlParams, steps: usize) -> Result<Trajectory> {
    check_interval(state)?;
    if state.v == 0.0 {
        let tau = remaining_time(state.t, params)?;
        if tau == 0.0 {
            return domain("no time left: the trajectory is a single point");
        }
        let steps = steps.max(1);
        let mut tr = Trajectory::from_accelerations(state.t, tau / steps as f64, &[state.x], &[0.0], vec![0.0; steps]);
        tr.cost = 0.0;
        return Ok(tr);
    }
    let (half, sign) = to_half_line(state);
    let tr = optimal_trajectory(&half, params, steps)?;
    Ok(tr.reflect_shift(sign, sign))
}

/// `(lower, upper)` bounds on the value with general bounded costs on
/// `[-1, 1]`: `φ̃ + L_lo τ + c_lo ≤ u ≤ φ̃ + L_hi τ + c_hi`.
pub fn u_bounds(state: &State1D, costs: &CostSpec, params: &ControlParams) -> Result<(f64, f64)> {
    let base = match tilde_phi(state, params)? {
        ExtendedValue::Finite(v) => v,
        ExtendedValue::Infinite => return domain("state admits no admissible trajectory"),
    };
    let tau = params.horizon() - state.t;
    let b = &costs.bounds;
    Ok((base + b.running_lo * tau + b.terminal_lo, base + b.running_hi * tau + b.terminal_hi))
}

/// Behaviour of the value near `x = 1` for `v ≥ 0`: the leading singular
/// term `C_S v^(2q−1) / (1 − x)^(q−1)` and the offset `u(t, 1, 0)`, the
/// latter estimated with the direct solver.
pub fn singular_expansion(
    state: &State1D,
    costs: &CostSpec,
    params: &ControlParams,
    settings: &SolverSettings,
) -> Result<(f64, f64)> {
    check_interval(state)?;
    let State1D { t, x, v } = *state;
    if !(v >= 0.0 && x < 1.0) {
        return domain(format!("expansion needs x < 1 and v >= 0, got x = {x}, v = {v}"));
    }
    let q = params.q();
    let leading = params.singular_constant() * v.powf(2.0 * q - 1.0) / (1.0 - x).powf(q - 1.0);
    let offset = value_u(t, &[1.0], &[0.0], costs, &Domain::Interval, params, settings)?;
    Ok((leading, offset))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pr(q: f64) -> ControlParams {
        ControlParams::new(q, 1.0).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn phi_examples() {
        let p = pr(2.0);
        assert_eq!(phi(&State1D::new(0.0, -1.0, 0.5), &p).unwrap(), ExtendedValue::Finite(0.0));
        assert!(close(phi(&State1D::new(0.0, -1.0, 2.0), &p).unwrap().as_f64(), 1.5, 1e-15));
        assert!(close(phi(&State1D::new(0.0, -1.0, 4.0), &p).unwrap().as_f64(), 128.0 / 9.0, 1e-15));
        assert_eq!(phi(&State1D::new(0.0, 0.0, 1.0), &p).unwrap(), ExtendedValue::Infinite);
        assert_eq!(phi(&State1D::new(1.0, 0.0, 1.0), &p).unwrap(), ExtendedValue::Finite(0.0));
        assert!(phi(&State1D::new(0.0, 0.1, 1.0), &p).is_err());
        assert!(phi(&State1D::new(1.5, -1.0, 1.0), &p).is_err());
    }

    #[test]
    fn singular_partials_and_residual() {
        let p = pr(2.0);
        let s = State1D::new(0.0, -1.0, 4.0);
        let d = phi_partials(&s, &p).unwrap();
        assert!(close(d.dv, 32.0 / 3.0, 1e-14));
        assert!(close(d.dx, 128.0 / 9.0, 1e-14));
        assert_eq!(d.dt, 0.0);
        assert!(hjb_residual(&s, &p).unwrap().abs() < 1e-12);
        assert_eq!(hjb_residual(&State1D::new(0.0, -1.0, 0.5), &p).unwrap(), 0.0);
        assert!(phi_partials(&State1D::new(0.0, 0.0, 1.0), &p).is_err());
    }

    #[test]
    fn tilde_phi_examples() {
        let p = pr(2.0);
        assert!(close(tilde_phi(&State1D::new(0.0, 0.0, 4.0), &p).unwrap().as_f64(), 128.0 / 9.0, 1e-15));
        assert!(close(tilde_phi(&State1D::new(0.0, 0.0, -4.0), &p).unwrap().as_f64(), 128.0 / 9.0, 1e-15));
        assert_eq!(tilde_phi(&State1D::new(0.0, 0.0, 0.0), &p).unwrap(), ExtendedValue::Finite(0.0));
        assert_eq!(tilde_phi(&State1D::new(0.0, 1.0, 0.1), &p).unwrap(), ExtendedValue::Infinite);
        assert_eq!(tilde_phi(&State1D::new(0.0, -1.0, -0.1), &p).unwrap(), ExtendedValue::Infinite);
        assert_eq!(tilde_phi(&State1D::new(0.0, 1.0, 0.0), &p).unwrap(), ExtendedValue::Finite(0.0));
        assert!(tilde_phi(&State1D::new(0.0, 1.1, 0.0), &p).is_err());
        let tags: Vec<_> = [-4.0, -1.5, 0.5, 1.5, 4.0]
            .iter()
            .map(|&v| tilde_phi_region(&State1D::new(0.0, 0.0, v), &p).unwrap().tag())
            .collect();
        assert_eq!(tags, ["neg_singular", "neg_intermediate", "zero", "pos_intermediate", "pos_singular"]);
    }

    #[test]
    fn trajectory_examples() {
        let p = pr(2.0);
        let tr = optimal_trajectory(&State1D::new(0.0, -2.0, 1.0), &p, 10).unwrap();
        assert_eq!(tr.cost, 0.0);
        assert!(close(tr.position(10)[0], -1.0, 1e-15));

        let p4 = ControlParams::new(2.0, 4.0).unwrap();
        let n = 4000;
        let tr = optimal_trajectory(&State1D::new(0.0, -1.0, 1.0), &p4, n).unwrap();
        assert!(tr.position(n)[0].abs() < 1e-6);
        assert!(tr.velocity(n)[0].abs() < 1e-12);
        assert!(close(tr.cost, 2.0 / 9.0, 5.0 / n as f64));

        let tr = optimal_trajectory(&State1D::new(0.0, -1.0, 2.0), &p, n).unwrap();
        assert!(close(tr.velocity(n)[0], 0.5, 1e-15));
        assert!(close(tr.cost, 1.5, 5.0 / n as f64));
        assert!(tr.position(n)[0].abs() < 1e-6);
    }

    #[test]
    fn tilde_trajectories_are_mirrored() {
        let p = pr(2.0);
        let n = 1000;
        let up = optimal_trajectory_tilde(&State1D::new(0.0, 0.2, 3.0), &p, n).unwrap();
        let down = optimal_trajectory_tilde(&State1D::new(0.0, -0.2, -3.0), &p, n).unwrap();
        for k in [0, 10, n] {
            assert!(close(up.position(k)[0], -down.position(k)[0], 1e-15));
            assert!(close(up.velocity(k)[0], -down.velocity(k)[0], 1e-15));
        }
        assert!(up.position(n)[0] <= 1.0 + 1e-6);
        let rest = optimal_trajectory_tilde(&State1D::new(0.5, 0.3, 0.0), &p, 4).unwrap();
        assert_eq!(rest.position(4)[0], 0.3);
        assert_eq!(rest.cost, 0.0);
    }

    #[test]
    fn bounds_examples() {
        let p = pr(1.0 + 1.0);
        let (lo, hi) = u_bounds(&State1D::new(0.0, 0.0, 0.0), &CostSpec::constant(1.0, 2.0), &p).unwrap();
        assert_eq!((lo, hi), (3.0, 3.0));
        let s = State1D::new(0.0, 0.0, 1.5);
        let (lo, hi) = u_bounds(&s, &CostSpec::zero(), &p).unwrap();
        assert_eq!(lo, tilde_phi(&s, &p).unwrap().as_f64());
        assert_eq!(lo, hi);
        assert!(u_bounds(&State1D::new(0.0, 1.0, 1.0), &CostSpec::zero(), &p).is_err());
    }

    #[test]
    fn extended_value_serialization() {
        assert_eq!(serde_json::to_string(&ExtendedValue::Infinite).unwrap(), "\"inf\"");
        assert_eq!(serde_json::to_string(&ExtendedValue::Finite(1.5)).unwrap(), "1.5");
        assert_eq!(ExtendedValue::Infinite.to_string(), "inf");
    }
}
