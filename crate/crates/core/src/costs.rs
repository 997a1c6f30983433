//! Running and terminal cost plug-ins with declared bounds.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Value, gradient and Hessian of a cost with respect to the stacked state
/// `z = (x, v)` of length `2n`. The Hessian is row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivatives {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
}

/// Central finite differences of `f` at `z`.
pub fn finite_difference_derivatives<F: Fn(&[f64]) -> f64>(f: F, z: &[f64]) -> Derivatives {
    let m = z.len();
    let value = f(z);
    let mut grad = vec![0.0; m];
    let mut hess = vec![0.0; m * m];
    let mut zz = z.to_vec();
    let steps: Vec<f64> = z.iter().map(|zi| 1e-4 * zi.abs().max(1.0)).collect();
    for i in 0..m {
        let h = steps[i];
        zz[i] = z[i] + h;
        let fp = f(&zz);
        zz[i] = z[i] - h;
        let fm = f(&zz);
        zz[i] = z[i];
        grad[i] = (fp - fm) / (2.0 * h);
        hess[i * m + i] = (fp - 2.0 * value + fm) / (h * h);
    }
    for i in 0..m {
        for j in (i + 1)..m {
            let (hi, hj) = (steps[i], steps[j]);
            let mut corner = |si: f64, sj: f64| {
                zz[i] = z[i] + si * hi;
                zz[j] = z[j] + sj * hj;
                let out = f(&zz);
                zz[i] = z[i];
                zz[j] = z[j];
                out
            };
            let mixed = (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0) + corner(-1.0, -1.0)) / (4.0 * hi * hj);
            hess[i * m + j] = mixed;
            hess[j * m + i] = mixed;
        }
    }
    Derivatives { value, grad, hess }
}

fn stack(x: &[f64], v: &[f64]) -> Vec<f64> {
    let mut z = x.to_vec();
    z.extend_from_slice(v);
    z
}

/// Running cost `ℓ(x, v, s)`. Implementations must be safe to evaluate
/// from several threads at once.
pub trait RunningCost: Send + Sync {
    fn value(&self, x: &[f64], v: &[f64], t: f64) -> f64;

    fn derivatives(&self, x: &[f64], v: &[f64], t: f64) -> Derivatives {
        let n = x.len();
        finite_difference_derivatives(|z| self.value(&z[..n], &z[n..], t), &stack(x, v))
    }

    /// Lets solvers skip evaluation entirely.
    fn is_zero(&self) -> bool {
        false
    }
}

/// Terminal cost `g(x, v)`.
pub trait TerminalCost: Send + Sync {
    fn value(&self, x: &[f64], v: &[f64]) -> f64;

    fn derivatives(&self, x: &[f64], v: &[f64]) -> Derivatives {
        let n = x.len();
        finite_difference_derivatives(|z| self.value(&z[..n], &z[n..]), &stack(x, v))
    }

    fn is_zero(&self) -> bool {
        false
    }
}

/// A constant cost; doubles as running and terminal cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant(pub f64);

fn constant_derivatives(c: f64, m: usize) -> Derivatives {
    Derivatives { value: c, grad: vec![0.0; m], hess: vec![0.0; m * m] }
}

impl RunningCost for Constant {
    fn value(&self, _: &[f64], _: &[f64], _: f64) -> f64 {
        self.0
    }
    fn derivatives(&self, x: &[f64], _: &[f64], _: f64) -> Derivatives {
        constant_derivatives(self.0, 2 * x.len())
    }
    fn is_zero(&self) -> bool {
        self.0 == 0.0
    }
}

impl TerminalCost for Constant {
    fn value(&self, _: &[f64], _: &[f64]) -> f64 {
        self.0
    }
    fn derivatives(&self, x: &[f64], _: &[f64]) -> Derivatives {
        constant_derivatives(self.0, 2 * x.len())
    }
    fn is_zero(&self) -> bool {
        self.0 == 0.0
    }
}

/// Running cost backed by a closure; derivatives by finite differences.
pub struct FnRunning<F>(pub F);

impl<F: Fn(&[f64], &[f64], f64) -> f64 + Send + Sync> RunningCost for FnRunning<F> {
    fn value(&self, x: &[f64], v: &[f64], t: f64) -> f64 {
        (self.0)(x, v, t)
    }
}

/// Terminal cost backed by a closure; derivatives by finite differences.
pub struct FnTerminal<F>(pub F);

impl<F: Fn(&[f64], &[f64]) -> f64 + Send + Sync> TerminalCost for FnTerminal<F> {
    fn value(&self, x: &[f64], v: &[f64]) -> f64 {
        (self.0)(x, v)
    }
}

/// Declared bounds `L_lo ≤ ℓ ≤ L_hi`, `c_lo ≤ g ≤ c_hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostBounds {
    pub running_lo: f64,
    pub running_hi: f64,
    pub terminal_lo: f64,
    pub terminal_hi: f64,
}

/// Running and terminal costs together with their bounds.
#[derive(Clone)]
pub struct CostSpec {
    pub running: Arc<dyn RunningCost>,
    pub terminal: Arc<dyn TerminalCost>,
    pub bounds: CostBounds,
}

impl fmt::Debug for CostSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CostSpec").field("bounds", &self.bounds).finish_non_exhaustive()
    }
}

impl CostSpec {
    pub fn new(running: Arc<dyn RunningCost>, terminal: Arc<dyn TerminalCost>, bounds: CostBounds) -> Result<Self> {
        let b = bounds;
        let ok = [b.running_lo, b.running_hi, b.terminal_lo, b.terminal_hi].iter().all(|x| x.is_finite())
            && b.running_lo <= b.running_hi
            && b.terminal_lo <= b.terminal_hi;
        if !ok {
            return Err(Error::Config(format!("cost bounds must be finite and ordered, got {bounds:?}")));
        }
        Ok(Self { running, terminal, bounds })
    }

    /// `ℓ ≡ 0`, `g ≡ 0`.
    pub fn zero() -> Self {
        Self::constant(0.0, 0.0)
    }

    /// `ℓ ≡ running`, `g ≡ terminal`, with tight bounds.
    pub fn constant(running: f64, terminal: f64) -> Self {
        Self {
            running: Arc::new(Constant(running)),
            terminal: Arc::new(Constant(terminal)),
            bounds: CostBounds {
                running_lo: running,
                running_hi: running,
                terminal_lo: terminal,
                terminal_hi: terminal,
            },
        }
    }

    pub fn is_zero(&self) -> bool {
        self.running.is_zero() && self.terminal.is_zero()
    }

    /// `sup|g| + sup|ℓ|` according to the declared bounds.
    pub fn sup_norm(&self) -> f64 {
        let b = &self.bounds;
        b.terminal_lo.abs().max(b.terminal_hi.abs()) + b.running_lo.abs().max(b.running_hi.abs())
    }

    /// Checks the declared bounds against evaluations at the given
    /// `(x, v, t)` samples.
    pub fn spot_check(&self, samples: &[(Vec<f64>, Vec<f64>, f64)]) -> Result<()> {
        let b = &self.bounds;
        for (x, v, t) in samples {
            let l = self.running.value(x, v, *t);
            if !(l >= b.running_lo && l <= b.running_hi) {
                return Err(Error::Config(format!("running cost {l} at {x:?}, {v:?}, {t} violates its bounds")));
            }
            let g = self.terminal.value(x, v);
            if !(g >= b.terminal_lo && g <= b.terminal_hi) {
                return Err(Error::Config(format!("terminal cost {g} at {x:?}, {v:?} violates its bounds")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finite_differences_of_a_quadratic() {
        let f = |z: &[f64]| 1.5 * z[0] * z[0] + z[0] * z[1] - 2.0 * z[1] + 0.25 * z[1] * z[1];
        let d = finite_difference_derivatives(f, &[0.3, -1.2]);
        assert!((d.grad[0] - (3.0 * 0.3 - 1.2)).abs() < 1e-8);
        assert!((d.grad[1] - (0.3 - 2.0 - 0.6)).abs() < 1e-8);
        for (h, e) in d.hess.iter().zip([3.0, 1.0, 1.0, 0.5]) {
            assert!((h - e).abs() < 1e-5, "{h} vs {e}");
        }
    }

    #[test]
    fn bounds_checks() {
        let spec = CostSpec::new(
            Arc::new(FnRunning(|x: &[f64], _: &[f64], _: f64| x[0].sin())),
            Arc::new(Constant(2.0)),
            CostBounds { running_lo: -1.0, running_hi: 1.0, terminal_lo: 2.0, terminal_hi: 2.0 },
        )
        .unwrap();
        assert_eq!(spec.sup_norm(), 3.0);
        assert!(spec.spot_check(&[(vec![0.4], vec![1.0], 0.0)]).is_ok());
        let bad = CostSpec { bounds: CostBounds { running_hi: 0.1, ..spec.bounds }, ..spec.clone() };
        assert!(bad.spot_check(&[(vec![1.0], vec![0.0], 0.0)]).is_err());
        assert!(CostSpec::zero().is_zero());
        assert!(!CostSpec::constant(1.0, 0.0).is_zero());
    }
}
