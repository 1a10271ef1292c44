//! Small numerical kernels shared by the analytic, dynamics and detection
//! modules: divided differences of the exponential, a fixed-step RK4 for
//! constant complex linear systems, and composite Simpson quadrature.

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;

/// Denominators below this magnitude switch to the removable-singularity
/// limit lim_{x→0} (e^{xt} − 1)/x = t.
pub const SINGULAR_THRESHOLD: f64 = 1e-9;

pub(crate) const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// e^z − 1 without cancellation for small |z|.
pub fn expm1(z: Complex64) -> Complex64 {
    let (x, y) = (z.re, z.im);
    let half_sin = (0.5 * y).sin();
    Complex64::new(
        x.exp_m1() * y.cos() - 2.0 * half_sin * half_sin,
        x.exp() * y.sin(),
    )
}

/// First divided difference of z ↦ e^{zt} at the nodes x, y:
/// (e^{xt} − e^{yt})/(x − y), with limit t e^{yt} when |x − y| < 1e-9.
///
/// The node with the larger real part is factored out, so the remaining
/// `expm1` argument never has a positive real part.
pub fn exp_divided_difference(x: Complex64, y: Complex64, t: f64) -> Complex64 {
    let d = x - y;
    if d.norm() < SINGULAR_THRESHOLD {
        return t * (y * t).exp();
    }
    if x.re >= y.re {
        -(x * t).exp() * expm1(-d * t) / d
    } else {
        (y * t).exp() * expm1(d * t) / d
    }
}

/// Divided differences F[z₀], F[z₀,z₁], F[z₀,z₁,z₂], F[z₀,…,z₃] of
/// z ↦ e^{zt}, valid for arbitrarily close or coincident nodes.
///
/// Uses the fact that for the bidiagonal matrix with the nodes on the
/// diagonal and ones on the superdiagonal, the first row of its exponential
/// holds exactly these divided differences.
pub fn exp_divided_differences_confluent(nodes: [Complex64; 4], t: f64) -> [Complex64; 4] {
    let mut m = Matrix4::<Complex64>::zeros();
    for (k, z) in nodes.iter().enumerate() {
        m[(k, k)] = z * t;
        if k + 1 < 4 {
            m[(k, k + 1)] = Complex64::new(t, 0.0);
        }
    }
    let e = m.exp();
    [e[(0, 0)], e[(0, 1)], e[(0, 2)], e[(0, 3)]]
}

/// Induced ∞-norm (maximum absolute row sum).
pub fn inf_norm(m: &Matrix4<Complex64>) -> f64 {
    (0..4)
        .map(|r| (0..4).map(|c| m[(r, c)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// One classical fourth-order Runge-Kutta step of x' = M x.
pub fn rk4_step(m: &Matrix4<Complex64>, x: &Vector4<Complex64>, h: f64) -> Vector4<Complex64> {
    let half = Complex64::new(0.5 * h, 0.0);
    let k1 = m * x;
    let k2 = m * (x + k1 * half);
    let k3 = m * (x + k2 * half);
    let k4 = m * (x + k3 * Complex64::new(h, 0.0));
    let two = Complex64::new(2.0, 0.0);
    x + (k1 + k2 * two + k3 * two + k4) * Complex64::new(h / 6.0, 0.0)
}

/// Number of equal sub-intervals of width at most `h` covering `len`,
/// rounded up to an even count.
pub fn even_panels(len: f64, h: f64) -> usize {
    let n = ((len / h).ceil() as usize).max(2);
    n + (n % 2)
}

/// Composite Simpson rule for a vector-valued integrand on [a, b] with
/// `n` (even) sub-intervals.
pub fn simpson<const N: usize>(f: impl Fn(f64) -> [f64; N], a: f64, b: f64, n: usize) -> [f64; N] {
    assert!(n >= 2 && n.is_multiple_of(2), "Simpson needs an even panel count");
    let mut acc = [0.0; N];
    if b == a {
        return acc;
    }
    let h = (b - a) / n as f64;
    for i in 0..=n {
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let t = if i == n { b } else { a + i as f64 * h };
        let v = f(t);
        for k in 0..N {
            acc[k] += w * v[k];
        }
    }
    acc.map(|s| s * h / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn expm1_small_argument() {
        let z = c(1e-12, -2e-12);
        let v = expm1(z);
        assert!((v - z - z * z / 2.0).norm() < 1e-27);
        let z = c(0.3, 1.1);
        assert!((expm1(z) - (z.exp() - 1.0)).norm() < 1e-15);
    }

    #[test]
    fn divided_difference_matches_definition() {
        let (x, y, t) = (c(-0.2, 0.4), c(-0.7, -0.1), 3.0);
        let direct = ((x * t).exp() - (y * t).exp()) / (x - y);
        assert!((exp_divided_difference(x, y, t) - direct).norm() < 1e-15);
        assert!((exp_divided_difference(y, x, t) - direct).norm() < 1e-15);
    }

    #[test]
    fn divided_difference_limit() {
        let x = c(-0.3, 0.2);
        let t = 7.0;
        let lim = t * (x * t).exp();
        assert_eq!(exp_divided_difference(x, x, t), lim);
        // Just above the threshold the regular branch agrees with the limit.
        let y = x + c(2e-9, 0.0);
        assert!((exp_divided_difference(y, x, t) - lim).norm() < 1e-7);
    }

    #[test]
    fn no_overflow_for_large_times() {
        let v = exp_divided_difference(c(-0.1, 0.0), c(-0.9, 0.3), 1e4);
        assert!(v.is_finite());
        assert!(v.norm() < 1e-300);
    }

    #[test]
    fn confluent_matches_distinct_nodes() {
        let z = [c(-0.1, 0.3), c(-0.4, -0.2), c(-0.25, 0.05), c(-0.6, 0.6)];
        let t = 2.5;
        let f = exp_divided_differences_confluent(z, t);
        let f01 = exp_divided_difference(z[0], z[1], t);
        let f12 = exp_divided_difference(z[1], z[2], t);
        let f23 = exp_divided_difference(z[2], z[3], t);
        let f012 = (f01 - f12) / (z[0] - z[2]);
        let f123 = (f12 - f23) / (z[1] - z[3]);
        let f0123 = (f012 - f123) / (z[0] - z[3]);
        assert!((f[0] - (z[0] * t).exp()).norm() < 1e-13);
        assert!((f[1] - f01).norm() < 1e-13);
        assert!((f[2] - f012).norm() < 1e-12);
        assert!((f[3] - f0123).norm() < 1e-12);
    }

    #[test]
    fn confluent_coincident_nodes() {
        let z = c(-0.3, 0.1);
        let t = 4.0;
        let f = exp_divided_differences_confluent([z; 4], t);
        let e = (z * t).exp();
        assert!((f[3] - e * t.powi(3) / 6.0).norm() < 1e-13);
        assert!((f[2] - e * t * t / 2.0).norm() < 1e-13);
    }

    #[test]
    fn simpson_exact_for_cubics() {
        let [v] = simpson(|t| [t * t * t - 2.0 * t + 1.0], 0.0, 2.0, 4);
        assert!((v - (4.0 - 4.0 + 2.0)).abs() < 1e-14);
    }

    #[test]
    fn even_panel_count() {
        assert_eq!(even_panels(1.0, 0.1), 10);
        assert_eq!(even_panels(1.05, 0.1), 12);
        assert_eq!(even_panels(0.0, 0.1), 2);
    }

    #[test]
    fn rk4_scalar_decay() {
        let mut m = Matrix4::<Complex64>::zeros();
        m[(0, 0)] = c(-1.0, 2.0);
        let mut x = Vector4::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0));
        let h = 1e-3;
        for _ in 0..1000 {
            x = rk4_step(&m, &x, h);
        }
        assert!((x[0] - c(-1.0, 2.0).exp()).norm() < 1e-12);
    }
}
