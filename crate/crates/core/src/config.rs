//! JSON run configurations. Unknown keys are rejected everywhere.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::directopt::SolverSettings;
use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::oracle::OracleCase;
use crate::params::ControlParams;

/// Parses a config document.
pub fn parse<T: DeserializeOwned>(text: &str) -> Result<T> {
    Ok(serde_json::from_str(text)?)
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Config(msg()))
    }
}

/// `n` evenly spaced points from `min` to `max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Axis {
    pub fn validate(&self) -> Result<()> {
        check(self.min.is_finite() && self.max.is_finite() && self.min <= self.max && self.n >= 1 && self.n <= 1_000_000, || {
            format!("invalid axis {self:?}")
        })
    }

    pub fn points(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.min];
        }
        let h = (self.max - self.min) / (self.n - 1) as f64;
        (0..self.n).map(|i| if i + 1 == self.n { self.max } else { self.min + h * i as f64 }).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueFunction {
    /// Half-line value function.
    Phi,
    /// Value function on `[-1, 1]`.
    #[default]
    TildePhi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuxCostConfig {
    pub x: f64,
    pub v: f64,
    pub w: f64,
    pub q: f64,
    pub theta: Vec<f64>,
}

impl AuxCostConfig {
    pub fn validate(&self) -> Result<()> {
        ControlParams::new(self.q, 1.0)?;
        check(!self.theta.is_empty(), || "theta list is empty".into())
    }
}

/// Pointwise evaluation at states `[t, x, v]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointsConfig {
    pub q: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub points: Vec<[f64; 3]>,
}

impl PointsConfig {
    pub fn params(&self) -> Result<ControlParams> {
        check(!self.points.is_empty(), || "no points given".into())?;
        ControlParams::new(self.q, self.horizon)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValueGridConfig {
    pub q: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(default)]
    pub function: ValueFunction,
    #[serde(default)]
    pub t: f64,
    pub x: Axis,
    pub v: Axis,
}

impl ValueGridConfig {
    pub fn params(&self) -> Result<ControlParams> {
        self.x.validate()?;
        self.v.validate()?;
        check(self.t.is_finite() && self.t <= self.horizon, || format!("t = {} must not exceed T", self.t))?;
        ControlParams::new(self.q, self.horizon)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HjbResidualConfig {
    pub q: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(default)]
    pub function: ValueFunction,
    pub t: Axis,
    pub x: Axis,
    pub v: Axis,
    /// Bound on `|residual| / (1 + value)`; exceeding it is a breach.
    #[serde(default)]
    pub threshold: Option<f64>,
}

impl HjbResidualConfig {
    pub fn params(&self) -> Result<ControlParams> {
        for a in [&self.t, &self.x, &self.v] {
            a.validate()?;
        }
        check(self.t.max <= self.horizon, || "t axis exceeds T".into())?;
        ControlParams::new(self.q, self.horizon)
    }
}

fn default_oracle_steps() -> usize {
    2000
}

fn default_threshold() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    /// Defaults to the shipped suite.
    #[serde(default)]
    pub cases: Option<Vec<OracleCase>>,
    #[serde(rename = "N", default = "default_oracle_steps")]
    pub steps: usize,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub solver: Option<SolverSettings>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { cases: None, steps: default_oracle_steps(), threshold: default_threshold(), solver: None }
    }
}

impl OracleConfig {
    pub fn settings(&self) -> Result<SolverSettings> {
        check(self.threshold > 0.0, || "threshold must be positive".into())?;
        let s = self.solver.clone().unwrap_or_default().with_steps(self.steps);
        s.validate()?;
        Ok(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryMethod {
    #[default]
    Direct,
    /// Closed-form optimal trajectory, 1D with zero costs only.
    ClosedForm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryConfig {
    pub domain: Domain,
    pub q: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(default)]
    pub t0: f64,
    pub x0: Vec<f64>,
    pub v0: Vec<f64>,
    #[serde(rename = "N", default = "default_oracle_steps")]
    pub steps: usize,
    #[serde(default)]
    pub method: TrajectoryMethod,
    /// Constant running cost `ℓ ≡ c`.
    #[serde(default)]
    pub running_cost: f64,
    /// Constant terminal cost `g ≡ c`.
    #[serde(default)]
    pub terminal_cost: f64,
    #[serde(default)]
    pub solver: Option<SolverSettings>,
    /// Step counts for an additional convergence study of the direct solve.
    #[serde(default)]
    pub study: Option<Vec<usize>>,
}

impl TrajectoryConfig {
    pub fn params(&self) -> Result<ControlParams> {
        self.domain.validate()?;
        self.domain.check_dimension(self.x0.len())?;
        check(self.x0.len() == self.v0.len(), || "x0 and v0 differ in length".into())?;
        check(self.running_cost.is_finite() && self.terminal_cost.is_finite(), || "costs must be finite".into())?;
        check(self.t0.is_finite() && self.t0 < self.horizon, || "t0 must be before T".into())?;
        ControlParams::new(self.q, self.horizon)
    }

    pub fn settings(&self) -> Result<SolverSettings> {
        let s = self.solver.clone().unwrap_or_default().with_steps(self.steps);
        s.validate()?;
        Ok(s)
    }
}

fn two() -> f64 {
    2.0
}

fn one() -> f64 {
    1.0
}

fn four() -> f64 {
    4.0
}

fn eight() -> u32 {
    8
}

/// Sequence `x_i = −base^{−i}` at fixed `v`, `w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsymptoticsConfig {
    #[serde(default = "two")]
    pub q: f64,
    #[serde(default = "one")]
    pub v: f64,
    #[serde(default)]
    pub w: f64,
    #[serde(default = "four")]
    pub base: f64,
    #[serde(default = "eight")]
    pub i_max: u32,
}

impl Default for AsymptoticsConfig {
    fn default() -> Self {
        Self { q: 2.0, v: 1.0, w: 0.0, base: 4.0, i_max: 8 }
    }
}

impl AsymptoticsConfig {
    pub fn params(&self) -> Result<ControlParams> {
        check(self.v > 0.0 && self.v.is_finite(), || "v must be positive".into())?;
        check(self.w >= 0.0 && self.w < self.v, || "w must lie in [0, v)".into())?;
        check(self.base > 1.0 && self.base.is_finite(), || "base must exceed 1".into())?;
        check((1..=40).contains(&self.i_max), || "i_max must lie in 1..=40".into())?;
        ControlParams::new(self.q, 1.0)
    }
}

fn default_exponents() -> Vec<u32> {
    vec![1, 2, 3, 4]
}

fn nd_steps() -> usize {
    4000
}

/// Ball states `y = (R − δ) e₁`, `w = v e₁` with `v^{2q−1}/δ^{q−1}` fixed
/// and `δ = base^{−i}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NdSingularityConfig {
    #[serde(default = "one")]
    pub radius: f64,
    #[serde(default = "two")]
    pub q: f64,
    #[serde(default = "four")]
    pub base: f64,
    #[serde(default = "default_exponents")]
    pub exponents: Vec<u32>,
    #[serde(default = "one")]
    pub product: f64,
    #[serde(rename = "N", default = "nd_steps")]
    pub steps: usize,
    #[serde(default)]
    pub solver: Option<SolverSettings>,
}

impl Default for NdSingularityConfig {
    fn default() -> Self {
        Self { radius: 1.0, q: 2.0, base: 4.0, exponents: default_exponents(), product: 1.0, steps: nd_steps(), solver: None }
    }
}

impl NdSingularityConfig {
    pub fn params(&self) -> Result<ControlParams> {
        Domain::Ball { radius: self.radius }.validate()?;
        check(self.base > 1.0 && self.base.is_finite(), || "base must exceed 1".into())?;
        check(!self.exponents.is_empty() && self.exponents.iter().all(|&i| i <= 30), || "exponents must lie in 0..=30".into())?;
        check(self.product > 0.0 && self.product.is_finite(), || "product must be positive".into())?;
        ControlParams::new(self.q, 1.0)
    }

    pub fn settings(&self) -> Result<SolverSettings> {
        let s = self.solver.clone().unwrap_or_default().with_steps(self.steps);
        s.validate()?;
        Ok(s)
    }
}
