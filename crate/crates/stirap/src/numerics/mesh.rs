//! Calculus on uniform time meshes.
//!
//! Derivatives use fourth-order stencils: the interior five-point formula is
//! the Richardson extrapolation of the centered differences at spacings `h`
//! and `2h`; the two points at each end use one-sided five-point formulas.
//! Running integrals use a fourth-order cubic-interpolation rule per panel.

use num_complex::Complex64;

/// A uniform mesh `t_i = t0 + i·h`, `i = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformMesh {
    /// First mesh point.
    pub t0: f64,
    /// Spacing.
    pub h: f64,
    /// Number of points.
    pub n: usize,
}

impl UniformMesh {
    /// Mesh with `n ≥ 5` points spanning `[a, b]` inclusively.
    pub fn new(a: f64, b: f64, n: usize) -> Self {
        let n = n.max(5);
        Self {
            t0: a,
            h: (b - a) / (n - 1) as f64,
            n,
        }
    }

    /// The `i`-th mesh point.
    pub fn t(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.t0 + self.h * (self.n - 1) as f64
        } else {
            self.t0 + self.h * i as f64
        }
    }

    /// All mesh points.
    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.t(i)).collect()
    }
}

/// Fourth-order derivative of mesh samples with spacing `h`.
pub fn derivative(f: &[Complex64], h: f64) -> Vec<Complex64> {
    let n = f.len();
    assert!(n >= 5, "derivative needs at least five samples");
    let s = 1.0 / (12.0 * h);
    let mut d = vec![Complex64::new(0.0, 0.0); n];
    d[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) * s;
    d[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) * s;
    for i in 2..n - 2 {
        d[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) * s;
    }
    d[n - 2] = (3.0 * f[n - 1] + 10.0 * f[n - 2] - 18.0 * f[n - 3] + 6.0 * f[n - 4] - f[n - 5]) * s;
    d[n - 1] =
        (25.0 * f[n - 1] - 48.0 * f[n - 2] + 36.0 * f[n - 3] - 16.0 * f[n - 4] + 3.0 * f[n - 5]) * s;
    d
}

/// Running integral `∫_{t0}^{t_i} f` of mesh samples with spacing `h`.
pub fn cumulative(f: &[Complex64], h: f64) -> Vec<Complex64> {
    let n = f.len();
    assert!(n >= 4, "cumulative integral needs at least four samples");
    let s = h / 24.0;
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..n - 1 {
        let piece = if i == 0 {
            (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]) * s
        } else if i == n - 2 {
            (9.0 * f[n - 1] + 19.0 * f[n - 2] - 5.0 * f[n - 3] + f[n - 4]) * s
        } else {
            (-f[i - 1] + 13.0 * f[i] + 13.0 * f[i + 1] - f[i + 2]) * s
        };
        out[i + 1] = out[i] + piece;
    }
    out
}

/// Promotes real samples to complex.
pub fn complexify(f: &[f64]) -> Vec<Complex64> {
    f.iter().map(|&x| Complex64::new(x, 0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_and_integral_are_fourth_order() {
        let mesh = UniformMesh::new(0.0, 2.0, 401);
        let f: Vec<Complex64> = mesh
            .points()
            .iter()
            .map(|&t| Complex64::new(t.sin(), (2.0 * t).cos()))
            .collect();
        let d = derivative(&f, mesh.h);
        let c = cumulative(&f, mesh.h);
        for (i, &t) in mesh.points().iter().enumerate() {
            let exact_d = Complex64::new(t.cos(), -2.0 * (2.0 * t).sin());
            let exact_c = Complex64::new(1.0 - t.cos(), 0.5 * (2.0 * t).sin());
            assert!((d[i] - exact_d).norm() < 1e-8, "derivative at {t}");
            assert!((c[i] - exact_c).norm() < 1e-10, "integral at {t}");
        }
    }
}
