//! Uniformly sampled double-integrator trajectories.
//!
//! Accelerations are piecewise constant on each step and positions and
//! velocities are propagated with the exact update
//! `x' = x + v dt + a dt²/2`, `v' = v + a dt`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    dim: usize,
    t0: f64,
    dt: f64,
    /// `(N + 1) * dim` entries, step-major.
    positions: Vec<f64>,
    velocities: Vec<f64>,
    /// `N * dim` entries.
    accelerations: Vec<f64>,
    /// Cost attached by whoever produced the trajectory.
    pub cost: f64,
}

#[inline]
pub(crate) fn step_position(x: f64, v: f64, a: f64, dt: f64) -> f64 {
    x + v * dt + a * (dt * dt) / 2.0
}

#[inline]
pub(crate) fn step_velocity(v: f64, a: f64, dt: f64) -> f64 {
    v + a * dt
}

impl Trajectory {
    /// Rolls out the exact double-integrator dynamics from `(x0, v0)`.
    pub fn from_accelerations(t0: f64, dt: f64, x0: &[f64], v0: &[f64], accelerations: Vec<f64>) -> Self {
        let dim = x0.len();
        assert_eq!(v0.len(), dim);
        assert!(dim > 0 && accelerations.len() % dim == 0);
        let steps = accelerations.len() / dim;
        let mut positions = Vec::with_capacity((steps + 1) * dim);
        let mut velocities = Vec::with_capacity((steps + 1) * dim);
        positions.extend_from_slice(x0);
        velocities.extend_from_slice(v0);
        for k in 0..steps {
            for i in 0..dim {
                let x = positions[k * dim + i];
                let v = velocities[k * dim + i];
                let a = accelerations[k * dim + i];
                positions.push(step_position(x, v, a, dt));
                velocities.push(step_velocity(v, a, dt));
            }
        }
        Self {
            dim,
            t0,
            dt,
            positions,
            velocities,
            accelerations,
            cost: f64::NAN,
        }
    }

    /// One-dimensional trajectory whose velocity interpolates `samples`
    /// at the grid times; the acceleration on each step is the slope
    /// between consecutive samples.
    pub fn from_velocity_samples(t0: f64, dt: f64, x0: f64, samples: &[f64]) -> Self {
        assert!(samples.len() >= 2);
        let acc: Vec<f64> = samples.windows(2).map(|w| (w[1] - w[0]) / dt).collect();
        Self::from_accelerations(t0, dt, &[x0], &[samples[0]], acc)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn steps(&self) -> usize {
        self.accelerations.len() / self.dim
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + self.dt * k as f64
    }

    pub fn final_time(&self) -> f64 {
        self.time(self.steps())
    }

    pub fn position(&self, k: usize) -> &[f64] {
        &self.positions[k * self.dim..(k + 1) * self.dim]
    }

    pub fn velocity(&self, k: usize) -> &[f64] {
        &self.velocities[k * self.dim..(k + 1) * self.dim]
    }

    pub fn acceleration(&self, k: usize) -> &[f64] {
        &self.accelerations[k * self.dim..(k + 1) * self.dim]
    }

    pub fn accelerations(&self) -> &[f64] {
        &self.accelerations
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn velocities(&self) -> &[f64] {
        &self.velocities
    }

    /// Position at the midpoint of step `k`.
    pub fn midpoint(&self, k: usize) -> Vec<f64> {
        let h = 0.5 * self.dt;
        (0..self.dim)
            .map(|i| step_position(self.position(k)[i], self.velocity(k)[i], self.acceleration(k)[i], h))
            .collect()
    }

    /// `(1/q) Σ |α_k|^q dt` with the Euclidean norm of each acceleration.
    pub fn control_cost(&self, q: f64) -> f64 {
        (0..self.steps())
            .map(|k| norm(self.acceleration(k)).powf(q))
            .sum::<f64>()
            * self.dt
            / q
    }

    /// `(Σ |α_k|^q dt)^(1/q)`.
    pub fn acceleration_lq_norm(&self, q: f64) -> f64 {
        (self.control_cost(q) * q).powf(1.0 / q)
    }

    /// Largest Euclidean velocity norm over the grid.
    pub fn max_speed(&self) -> f64 {
        (0..=self.steps()).map(|k| norm(self.velocity(k))).fold(0.0, f64::max)
    }

    /// Largest absolute residual of the exact discrete update. Zero for any
    /// trajectory built by [`Trajectory::from_accelerations`].
    pub fn dynamics_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..self.steps() {
            for i in 0..self.dim {
                let x = self.position(k)[i];
                let v = self.velocity(k)[i];
                let a = self.acceleration(k)[i];
                worst = worst
                    .max((self.position(k + 1)[i] - step_position(x, v, a, self.dt)).abs())
                    .max((self.velocity(k + 1)[i] - step_velocity(v, a, self.dt)).abs());
            }
        }
        worst
    }

    /// Image under `x ↦ sign·x + offset` (so velocities and accelerations
    /// are multiplied by `sign`). Used to map half-line solutions onto the
    /// interval.
    pub fn reflect_shift(&self, sign: f64, offset: f64) -> Self {
        Self {
            dim: self.dim,
            t0: self.t0,
            dt: self.dt,
            positions: self.positions.iter().map(|x| sign * x + offset).collect(),
            velocities: self.velocities.iter().map(|v| sign * v).collect(),
            accelerations: self.accelerations.iter().map(|a| sign * a).collect(),
            cost: self.cost,
        }
    }

    pub fn same_grid(&self, other: &Trajectory) -> bool {
        self.dim == other.dim && self.steps() == other.steps() && self.t0 == other.t0 && self.dt == other.dt
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
