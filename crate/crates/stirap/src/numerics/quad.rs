//! Quadrature rules.
//!
//! [`integrate`] is a globally adaptive Gauss–Kronrod (7/15) integrator for
//! definite integrals of smooth functions. [`CumulativeIntegral`] tabulates a
//! running integral on fixed Gauss–Legendre panels so that `∫_a^t f` can be
//! evaluated cheaply at arbitrary `t` many times over.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

// ============================================================================
// Gauss–Kronrod 7/15
// ============================================================================

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One Gauss–Kronrod panel: (Kronrod estimate, |Kronrod − Gauss|).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Adaptive Gauss–Kronrod integral of `f` over `[a, b]`.
///
/// Subdivides the panel with the largest error estimate until the summed
/// estimate falls below `max(abs_tol, rel_tol·|I|)` or 4000 panels exist.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (value, error) = gk15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value, error });
    let mut total = value;
    let mut total_err = error;
    while total_err > abs_tol.max(rel_tol * total.abs()) && heap.len() < 4000 {
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        let (v1, e1) = gk15(&f, worst.a, mid);
        let (v2, e2) = gk15(&f, mid, worst.b);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2 });
    }
    // Re-sum to remove accumulated cancellation from the running updates.
    heap.iter().map(|p| p.value).sum()
}

// ============================================================================
// Cumulative Gauss–Legendre table
// ============================================================================

const GL8_X: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL8_W: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Eight-point Gauss–Legendre rule on `[a, b]`.
pub fn gauss_legendre8<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut s = 0.0;
    for j in 0..4 {
        s += GL8_W[j] * (f(c - h * GL8_X[j]) + f(c + h * GL8_X[j]));
    }
    s * h
}

/// Running integral `t ↦ ∫_a^t f` of several integrands tabulated on equal
/// Gauss–Legendre panels.
///
/// The integrand returns a fixed-size array so that related phases (for
/// example `∫Ω` and the two dynamic-phase rates) share every evaluation.
#[derive(Debug, Clone)]
pub struct CumulativeIntegral<const N: usize> {
    a: f64,
    b: f64,
    h: f64,
    prefix: Vec<[f64; N]>,
}

impl<const N: usize> CumulativeIntegral<N> {
    /// Tabulates the running integrals of `f` over `[a, b]` on `panels` panels.
    pub fn new<F: Fn(f64) -> [f64; N]>(f: &F, a: f64, b: f64, panels: usize) -> Self {
        let panels = panels.max(1);
        let h = (b - a) / panels as f64;
        let mut prefix = Vec::with_capacity(panels + 1);
        let mut acc = [0.0; N];
        prefix.push(acc);
        for i in 0..panels {
            let lo = a + i as f64 * h;
            let hi = if i + 1 == panels { b } else { lo + h };
            let piece = Self::panel(f, lo, hi);
            for k in 0..N {
                acc[k] += piece[k];
            }
            prefix.push(acc);
        }
        Self { a, b, h, prefix }
    }

    fn panel<F: Fn(f64) -> [f64; N]>(f: &F, lo: f64, hi: f64) -> [f64; N] {
        let c = 0.5 * (lo + hi);
        let hh = 0.5 * (hi - lo);
        let mut s = [0.0; N];
        for j in 0..4 {
            let fm = f(c - hh * GL8_X[j]);
            let fp = f(c + hh * GL8_X[j]);
            for k in 0..N {
                s[k] += GL8_W[j] * (fm[k] + fp[k]);
            }
        }
        s.map(|v| v * hh)
    }

    /// Lower end of the tabulated interval.
    pub fn start(&self) -> f64 {
        self.a
    }

    /// Upper end of the tabulated interval.
    pub fn end(&self) -> f64 {
        self.b
    }

    /// Whether `t` lies inside the tabulated interval (with rounding slack).
    pub fn contains(&self, t: f64) -> bool {
        let slack = 1e-12 * (self.b - self.a).abs().max(1.0);
        t >= self.a - slack && t <= self.b + slack
    }

    /// Evaluates `∫_a^t f` by completing the partial panel containing `t`.
    ///
    /// `f` must be the integrand used at construction.
    pub fn value<F: Fn(f64) -> [f64; N]>(&self, f: &F, t: f64) -> [f64; N] {
        let panels = self.prefix.len() - 1;
        if self.h == 0.0 {
            return [0.0; N];
        }
        let x = ((t - self.a) / self.h).floor();
        let i = if x < 0.0 {
            0
        } else {
            (x as usize).min(panels - 1)
        };
        let lo = self.a + i as f64 * self.h;
        let mut out = self.prefix[i];
        if t != lo {
            let piece = Self::panel(f, lo, t);
            for k in 0..N {
                out[k] += piece[k];
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_kronrod_polynomial_and_oscillatory() {
        let v = integrate(|x| x.powi(5) - 2.0 * x, 0.0, 2.0, 1e-14, 1e-14);
        assert!((v - (64.0 / 6.0 - 4.0)).abs() < 1e-12);
        let v = integrate(|x| (50.0 * x).cos(), 0.0, 1.0, 1e-13, 1e-13);
        assert!((v - (50.0f64).sin() / 50.0).abs() < 1e-12);
    }

    #[test]
    fn cumulative_matches_closed_form() {
        let f = |t: f64| [t.cos(), 2.0 * t];
        let table = CumulativeIntegral::new(&f, 0.0, 3.0, 64);
        for &t in &[0.0, 0.3, 1.234, 2.999, 3.0] {
            let v = table.value(&f, t);
            assert!((v[0] - t.sin()).abs() < 1e-14);
            assert!((v[1] - t * t).abs() < 1e-13);
        }
    }
}
