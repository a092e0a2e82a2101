//! Scalar root finding and one-dimensional maximisation.

use crate::error::{Error, Result};

/// Safeguarded Newton iteration for `f(x) = 0` with derivative `df`.
///
/// Newton steps are taken from `x0`; whenever a step leaves the current
/// bracket (once one is known) or fails to reduce `|f|`, the iteration falls
/// back to bisection. Converges when `|f(x)| ≤ ftol` or the step is below
/// `xtol·max(1,|x|)`.
pub fn safeguarded_newton<F, D>(
    f: F,
    df: D,
    x0: f64,
    ftol: f64,
    xtol: f64,
    max_iter: usize,
    operation: &'static str,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let mut x = x0;
    let mut fx = f(x);
    let mut lo: Option<f64> = None;
    let mut hi: Option<f64> = None;
    for _ in 0..max_iter {
        if fx.abs() <= ftol {
            return Ok(x);
        }
        if fx < 0.0 {
            lo = Some(x);
        } else {
            hi = Some(x);
        }
        let d = df(x);
        let mut next = if d != 0.0 && d.is_finite() { x - fx / d } else { f64::NAN };
        if let (Some(a), Some(b)) = (lo, hi) {
            let (l, r) = if a < b { (a, b) } else { (b, a) };
            if !(next > l && next < r) {
                next = 0.5 * (l + r);
            }
        } else if !next.is_finite() {
            return Err(Error::NoConvergence { operation, iterations: 0 });
        }
        let step = (next - x).abs();
        let fnext = f(next);
        if fnext.abs() > fx.abs() {
            if let (Some(a), Some(b)) = (lo, hi) {
                let mid = 0.5 * (a + b);
                x = mid;
                fx = f(mid);
                continue;
            }
        }
        x = next;
        fx = fnext;
        if step <= xtol * x.abs().max(1.0) && fx.abs() <= ftol.max(1e3 * f64::EPSILON) {
            return Ok(x);
        }
    }
    if fx.abs() <= ftol {
        Ok(x)
    } else {
        Err(Error::NoConvergence { operation, iterations: max_iter })
    }
}

/// Golden-section search for a maximum of a unimodal `f` on `[a, b]`.
///
/// Returns `(argmax, max)` and never reports a value below the endpoints.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, xtol: f64) -> (f64, f64) {
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (a.min(b), a.max(b));
    let mut best = (a, f(a));
    let fb = f(b);
    if fb > best.1 {
        best = (b, fb);
    }
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() <= xtol {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    for (x, v) in [(c, fc), (d, fd)] {
        if v > best.1 {
            best = (x, v);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn newton_finds_square_root() {
        let r = safeguarded_newton(|x| x * x - 2.0, |x| 2.0 * x, 1.0, 1e-15, 1e-16, 100, "t")
            .unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn golden_section_locates_peak() {
        let (x, v) = golden_section_max(|x| -(x - 0.3).powi(2) + 1.0, 0.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-8);
        assert!((v - 1.0).abs() < 1e-14);
    }
}
