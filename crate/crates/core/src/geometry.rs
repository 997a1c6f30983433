//! Convex constraint domains with closed-form signed distance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ControlParams;
use crate::trajectory::{dot, norm};

/// Closed convex region in which positions must stay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DomainSpec", into = "DomainSpec")]
pub enum Domain {
    /// `x ≤ 0` on the real line.
    HalfLine,
    /// `[-1, 1]`.
    Interval,
    /// Closed ball of radius `radius` centered at the origin, any dimension.
    Ball { radius: f64 },
}

/// Wire form: `{"type":"ball","radius":1.0}`, `{"type":"interval"}`,
/// `{"type":"half_line"}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DomainSpec {
    #[serde(rename = "type")]
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    radius: Option<f64>,
}

impl TryFrom<DomainSpec> for Domain {
    type Error = Error;

    fn try_from(spec: DomainSpec) -> Result<Self> {
        let dom = match (spec.kind.as_str(), spec.radius) {
            ("half_line", None) => Domain::HalfLine,
            ("interval", None) => Domain::Interval,
            ("ball", Some(radius)) => Domain::Ball { radius },
            ("ball", None) => return Err(Error::Config("ball domain needs a radius".into())),
            ("half_line" | "interval", Some(_)) => {
                return Err(Error::Config(format!("domain type {} takes no radius", spec.kind)))
            }
            (other, _) => return Err(Error::Config(format!("unknown domain type {other:?}"))),
        };
        dom.validate()?;
        Ok(dom)
    }
}

impl From<Domain> for DomainSpec {
    fn from(dom: Domain) -> Self {
        let (kind, radius) = match dom {
            Domain::HalfLine => ("half_line", None),
            Domain::Interval => ("interval", None),
            Domain::Ball { radius } => ("ball", Some(radius)),
        };
        Self { kind: kind.into(), radius }
    }
}

impl Domain {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Domain::Ball { radius } if !(radius.is_finite() && radius > 0.0) => {
                Err(Error::Config(format!("ball radius must be positive, got {radius}")))
            }
            _ => Ok(()),
        }
    }

    /// Required state dimension, `None` for any.
    pub fn dimension(&self) -> Option<usize> {
        match self {
            Domain::HalfLine | Domain::Interval => Some(1),
            Domain::Ball { .. } => None,
        }
    }

    pub fn check_dimension(&self, n: usize) -> Result<()> {
        match self.dimension() {
            Some(d) if d != n => Err(Error::Domain(format!("domain is {d}-dimensional, state has dimension {n}"))),
            _ if n == 0 => Err(Error::Domain("state dimension must be positive".into())),
            _ => Ok(()),
        }
    }

    /// Signed distance to the boundary: negative inside, zero on the boundary.
    pub fn signed_distance(&self, x: &[f64]) -> f64 {
        match *self {
            Domain::HalfLine => x[0],
            Domain::Interval => x[0].abs() - 1.0,
            Domain::Ball { radius } => norm(x) - radius,
        }
    }

    /// Gradient of the signed distance (outward unit normal on the boundary).
    pub fn grad_signed_distance(&self, x: &[f64]) -> Result<Vec<f64>> {
        match *self {
            Domain::HalfLine => Ok(vec![1.0]),
            Domain::Interval => {
                if x[0] == 0.0 {
                    Err(Error::UndefinedGradient(x.to_vec()))
                } else {
                    Ok(vec![x[0].signum()])
                }
            }
            Domain::Ball { .. } => {
                let r = norm(x);
                if r == 0.0 {
                    Err(Error::UndefinedGradient(x.to_vec()))
                } else {
                    Ok(x.iter().map(|xi| xi / r).collect())
                }
            }
        }
    }

    /// Hessian of the signed distance, row-major `n × n`. Zero in 1D;
    /// `(I − n nᵀ)/|x|` for the ball.
    pub fn hessian_signed_distance(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = x.len();
        match *self {
            Domain::HalfLine | Domain::Interval => Ok(vec![0.0; n * n]),
            Domain::Ball { .. } => {
                let r = norm(x);
                if r == 0.0 {
                    return Err(Error::UndefinedGradient(x.to_vec()));
                }
                let mut h = vec![0.0; n * n];
                for i in 0..n {
                    for j in 0..n {
                        let delta = if i == j { 1.0 } else { 0.0 };
                        h[i * n + j] = (delta - x[i] * x[j] / (r * r)) / r;
                    }
                }
                Ok(h)
            }
        }
    }

    /// A state admits a trajectory staying in the domain iff the position is
    /// in the closed domain and, on the boundary, the velocity does not
    /// point outward.
    pub fn is_admissible(&self, x: &[f64], v: &[f64]) -> bool {
        let d = self.signed_distance(x);
        if !(d <= 0.0) {
            return false;
        }
        if d < 0.0 {
            return true;
        }
        match self.grad_signed_distance(x) {
            Ok(n) => dot(v, &n) <= 0.0,
            Err(_) => true,
        }
    }

    /// `(v·∇d)_+^(2q−1) / |d|^(q−1)`, the quantity bounded by `r` on `Θ_r`.
    ///
    /// On the interval both endpoints are taken into account: the velocity
    /// is measured against the distance to the endpoint it is heading to.
    /// The quotient is `0` when the numerator vanishes (including on the
    /// boundary with a non-outward velocity) and `+∞` outside the domain or
    /// for a positive numerator on the boundary.
    pub fn theta_index(&self, x: &[f64], v: &[f64], params: &ControlParams) -> f64 {
        let q = params.q();
        let d = self.signed_distance(x);
        if !(d <= 0.0) {
            return f64::INFINITY;
        }
        let quotient = |speed: f64, dist: f64| -> f64 {
            if speed <= 0.0 {
                0.0
            } else if dist <= 0.0 {
                f64::INFINITY
            } else {
                speed.powf(2.0 * q - 1.0) / dist.powf(q - 1.0)
            }
        };
        match *self {
            Domain::Interval => {
                let (x, v) = (x[0], v[0]);
                if v >= 0.0 {
                    quotient(v, 1.0 - x)
                } else {
                    quotient(-v, 1.0 + x)
                }
            }
            Domain::HalfLine => quotient(v[0], -d),
            Domain::Ball { radius } => match self.grad_signed_distance(x) {
                Ok(n) => quotient(dot(v, &n), -d),
                // At the center every direction is a normal direction.
                Err(_) => quotient(norm(v), radius),
            },
        }
    }

    /// Membership in `Θ_r`.
    pub fn in_theta_r(&self, x: &[f64], v: &[f64], r: f64, params: &ControlParams) -> bool {
        self.theta_index(x, v, params) <= r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distances() {
        let ball = Domain::Ball { radius: 1.0 };
        assert_eq!(ball.signed_distance(&[0.5, 0.0]), -0.5);
        assert!((ball.signed_distance(&[1.2, 0.0]) - 0.2).abs() < 1e-15);
        assert_eq!(Domain::Interval.signed_distance(&[1.0]), 0.0);
        assert_eq!(Domain::HalfLine.signed_distance(&[-2.0]), -2.0);
    }

    #[test]
    fn gradients() {
        let ball = Domain::Ball { radius: 1.0 };
        assert_eq!(ball.grad_signed_distance(&[0.0, 0.5]).unwrap(), vec![0.0, 1.0]);
        assert_eq!(Domain::Interval.grad_signed_distance(&[-0.3]).unwrap(), vec![-1.0]);
        assert!(matches!(ball.grad_signed_distance(&[0.0, 0.0]), Err(Error::UndefinedGradient(_))));
        assert!(ball.hessian_signed_distance(&[0.0, 0.0]).is_err());
        let h = ball.hessian_signed_distance(&[0.0, 2.0]).unwrap();
        assert_eq!(h, vec![0.5, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn admissibility() {
        assert!(Domain::Interval.is_admissible(&[1.0], &[-0.1]));
        assert!(!Domain::Interval.is_admissible(&[1.0], &[0.1]));
        assert!(!Domain::Interval.is_admissible(&[1.1], &[-0.1]));
        let ball = Domain::Ball { radius: 1.0 };
        assert!(ball.is_admissible(&[1.0, 0.0], &[0.0, 1.0]));
        assert!(!ball.is_admissible(&[1.0, 0.0], &[0.1, 1.0]));
        assert!(Domain::HalfLine.is_admissible(&[0.0], &[0.0]));
        assert!(!Domain::HalfLine.is_admissible(&[0.0], &[1.0]));
    }

    #[test]
    fn theta_r_examples() {
        let q2 = ControlParams::new(2.0, 1.0).unwrap();
        assert!(Domain::Interval.in_theta_r(&[0.9], &[0.1], 1.0, &q2));
        assert!(Domain::Interval.in_theta_r(&[1.0], &[0.0], 1e-9, &q2));
        assert!(!Domain::Interval.in_theta_r(&[0.999], &[1.0], 1.0, &q2));
        assert!(!Domain::Interval.in_theta_r(&[-0.999], &[-1.0], 1.0, &q2));
        assert!(!Domain::Interval.in_theta_r(&[1.0], &[0.1], 1e9, &q2));
        let ball = Domain::Ball { radius: 1.0 };
        assert!(ball.in_theta_r(&[1.0, 0.0], &[-1.0, 3.0], 1e-9, &q2));
        assert!(ball.in_theta_r(&[0.0, 0.0], &[1.0, 0.0], 1.0, &q2));
        assert!(!ball.in_theta_r(&[0.0, 0.0], &[2.0, 0.0], 1.0, &q2));
    }

    #[test]
    fn json_shape() {
        let d: Domain = serde_json::from_str(r#"{"type":"ball","radius":1.0}"#).unwrap();
        assert_eq!(d, Domain::Ball { radius: 1.0 });
        let d: Domain = serde_json::from_str(r#"{"type":"interval"}"#).unwrap();
        assert_eq!(d, Domain::Interval);
        assert!(serde_json::from_str::<Domain>(r#"{"type":"interval","radius":1}"#).is_err());
        assert!(serde_json::from_str::<Domain>(r#"{"type":"ellipse"}"#).is_err());
        assert!(serde_json::from_str::<Domain>(r#"{"type":"ball","radius":-1}"#).is_err());
        assert!(serde_json::from_str::<Domain>(r#"{"type":"ball","radius":1,"x":0}"#).is_err());
        let back = serde_json::to_string(&Domain::Ball { radius: 2.0 }).unwrap();
        assert_eq!(back, r#"{"type":"ball","radius":2.0}"#);
        assert_eq!(serde_json::to_string(&Domain::HalfLine).unwrap(), r#"{"type":"half_line"}"#);
    }
}
