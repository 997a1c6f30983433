use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Global problem parameters: the exponent on the acceleration and the
/// time horizon. The conjugate exponent is always derived from `q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlParams {
    q: f64,
    horizon: f64,
}

impl ControlParams {
    pub fn new(q: f64, horizon: f64) -> Result<Self> {
        if !(q.is_finite() && q > 1.0) {
            return domain(format!("exponent q must satisfy q > 1, got {q}"));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return domain(format!("horizon T must be positive, got {horizon}"));
        }
        Ok(Self { q, horizon })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// Conjugate exponent `q / (q - 1)`.
    pub fn p(&self) -> f64 {
        self.q / (self.q - 1.0)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn with_horizon(&self, horizon: f64) -> Result<Self> {
        Self::new(self.q, horizon)
    }

    /// `q^(q-1) / (2q-1)^q`, the constant in front of the boundary
    /// singularity `v^(2q-1) / |x|^(q-1)`.
    pub fn singular_constant(&self) -> f64 {
        let q = self.q;
        q.powf(q - 1.0) / (2.0 * q - 1.0).powf(q)
    }

    /// `(2q-1)^(q-1) / (q (q-1)^(q-1))`, the constant of the intermediate
    /// value-function branch and of the minimal auxiliary cost over `w`.
    pub fn intermediate_constant(&self) -> f64 {
        let q = self.q;
        (2.0 * q - 1.0).powf(q - 1.0) / (q * (q - 1.0).powf(q - 1.0))
    }

    /// `(2q-1)/(q-1)`: the braking-distance ratio separating the
    /// intermediate and singular regimes.
    pub fn braking_ratio(&self) -> f64 {
        (2.0 * self.q - 1.0) / (self.q - 1.0)
    }
}
