//! Scalar root finding and line minimization used by the closed-form modules.

/// Solves `f(y) = target` for a continuous increasing `f` on `[lo, ∞)`.
///
/// The bracket starts at `[lo, lo + width]` and its right end is moved
/// geometrically (the width doubles) until `f(hi) > target`. Bisection then
/// runs until the bracket is narrower than `tol * max(1, |y|)` or can no
/// longer be split in floating point.
pub fn bisect_increasing<F>(f: F, target: f64, lo: f64, width: f64, tol: f64) -> Option<f64>
where
    F: Fn(f64) -> f64,
{
    let mut a = lo;
    let mut step = width;
    let mut b = lo + step;
    let mut grow = 0;
    while f(b) <= target {
        a = b;
        step *= 2.0;
        b = lo + step;
        grow += 1;
        if grow > 2000 || !b.is_finite() {
            return None;
        }
    }
    loop {
        let m = 0.5 * (a + b);
        if m <= a || m >= b || (b - a) <= tol * m.abs().max(1.0) {
            return Some(m);
        }
        if f(m) <= target {
            a = m;
        } else {
            b = m;
        }
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section minimization of a unimodal `f` on `[a, b]`.
/// Returns `(argmin, min)`.
pub fn golden_section_min<F>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol * (a.abs() + b.abs()).max(1e-300) {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        if c >= d {
            break;
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Scans `n + 1` equispaced points of `[a, b]`, then refines around the best
/// one with golden section. Guards against a non-unimodal objective.
pub fn scan_then_golden<F>(f: F, a: f64, b: f64, n: usize, tol: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let n = n.max(2);
    let h = (b - a) / n as f64;
    let mut best = (a, f(a));
    let mut best_i = 0;
    for i in 1..=n {
        let t = if i == n { b } else { a + h * i as f64 };
        let ft = f(t);
        if ft < best.1 {
            best = (t, ft);
            best_i = i;
        }
    }
    let lo = if best_i == 0 { a } else { a + h * (best_i - 1) as f64 };
    let hi = if best_i == n { b } else { (a + h * (best_i + 1) as f64).min(b) };
    let refined = golden_section_min(&f, lo, hi, tol);
    if refined.1 < best.1 {
        refined
    } else {
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisection_finds_sqrt2() {
        let y = bisect_increasing(|y| y * y, 2.0, 0.0, 1.0, 1e-14).unwrap();
        assert!((y - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn bisection_grows_bracket() {
        let y = bisect_increasing(|y| y, 1e6, 1.0, 1.0, 1e-14).unwrap();
        assert!((y - 1e6).abs() < 1e-7);
    }

    #[test]
    fn bisection_gives_up_on_unreachable_target() {
        assert!(bisect_increasing(|y| -1.0 / y, 0.5, 1.0, 1.0, 1e-12).is_none());
    }

    #[test]
    fn golden_section_parabola() {
        let (x, fx) = golden_section_min(|x| (x - 0.3) * (x - 0.3) + 1.0, -2.0, 5.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-6);
        assert!((fx - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scan_handles_boundary_minimum() {
        let (x, _) = scan_then_golden(|x| x, 1.0, 2.0, 16, 1e-12);
        assert_eq!(x, 1.0);
    }
}
