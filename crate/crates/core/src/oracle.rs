//! Slow, independent reference implementations.
//!
//! None of these share code with [`crate::specfun`] or [`crate::corrmat`];
//! they exist to cross-check the production routines in tests and in the
//! acceptance runner.

use num_complex::Complex64;
use std::f64::consts::PI;

/// `K_ν(x) = ∫_0^∞ e^{-x cosh t} cosh(νt) dt`, by the trapezoid rule on the
/// whole real line (the integrand is even and decays doubly exponentially).
pub fn bessel_k_integral(nu: f64, x: f64) -> f64 {
    assert!(x > 0.0, "x must be positive");
    let h = 0.01;
    let t_max = (2.0 * 800.0 / x).ln().max(1.0) + nu.abs();
    let steps = (t_max / h).ceil() as usize;
    let f = |t: f64| (-x * t.cosh()).exp() * (nu * t).cosh();
    let mut s = 0.5 * f(0.0);
    for k in 1..=steps {
        s += f(k as f64 * h);
    }
    s * h
}

/// `∫_0^∞ f(x) dx` with the exp-sinh substitution `x = exp(π/2 sinh t)`.
pub fn exp_sinh<F: Fn(f64) -> f64>(f: F, h: f64) -> f64 {
    let g = |t: f64| {
        let x = (0.5 * PI * t.sinh()).exp();
        let w = 0.5 * PI * t.cosh() * x;
        if x == 0.0 || !x.is_finite() || w == 0.0 {
            0.0
        } else {
            let v = f(x) * w;
            if v.is_finite() {
                v
            } else {
                0.0
            }
        }
    };
    let mut s = g(0.0);
    let mut k = 1;
    loop {
        let t = k as f64 * h;
        let (a, b) = (g(t), g(-t));
        s += a + b;
        if t > 4.5 && a.abs() + b.abs() <= 1e-18 * s.abs() {
            break;
        }
        if t > 7.0 {
            break;
        }
        k += 1;
    }
    s * h
}

/// `E1(x) = e^{-x} ∫_0^∞ e^{-xs} / (1 + s) ds` for `x > 0`.
pub fn e1_integral(x: f64) -> f64 {
    assert!(x > 0.0, "x must be positive");
    (-x).exp() * exp_sinh(|s| (-x * s).exp() / (1.0 + s), 1.0 / 256.0)
}

/// `Ei(x) = -E1(-x)` for `x < 0`.
pub fn ei_negative(x: f64) -> f64 {
    -e1_integral(-x)
}

/// Euler–Mascheroni constant from `H_n - ln n` with Euler–Maclaurin tail
/// corrections through `n^{-8}`.
pub fn euler_gamma() -> f64 {
    let n = 10_000usize;
    let mut sum = 0.0;
    let mut comp = 0.0;
    for k in (1..=n).rev() {
        let y = 1.0 / k as f64 - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    let nf = n as f64;
    let n2 = nf * nf;
    sum - nf.ln() - 1.0 / (2.0 * nf) + 1.0 / (12.0 * n2) - 1.0 / (120.0 * n2 * n2)
        + 1.0 / (252.0 * n2 * n2 * n2)
        - 1.0 / (240.0 * n2 * n2 * n2 * n2)
}

/// `ψ(k)` for integer `k >= 1`, built on [`euler_gamma`].
pub fn digamma_int(k: u32) -> f64 {
    assert!(k >= 1);
    (1..k).map(|m| 1.0 / m as f64).sum::<f64>() - euler_gamma()
}

/// Eigenvalues of a 3×3 Hermitian matrix from the roots of its
/// characteristic polynomial (trigonometric form), in descending order.
pub fn eigenvalues_3x3(a: &[[Complex64; 3]; 3]) -> [f64; 3] {
    let a11 = a[0][0].re;
    let a22 = a[1][1].re;
    let a33 = a[2][2].re;
    let p1 = a[0][1].norm_sqr() + a[0][2].norm_sqr() + a[1][2].norm_sqr();
    let q = (a11 + a22 + a33) / 3.0;
    if p1 == 0.0 {
        let mut v = [a11, a22, a33];
        v.sort_by(|x, y| y.total_cmp(x));
        return v;
    }
    let p2 = (a11 - q).powi(2) + (a22 - q).powi(2) + (a33 - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    // B = (A - qI) / p; r = det(B) / 2
    let mut b = *a;
    for (i, row) in b.iter_mut().enumerate() {
        for (j, e) in row.iter_mut().enumerate() {
            if i == j {
                *e -= q;
            }
            *e /= p;
        }
    }
    let det = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1])
        - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
        + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    let r = (0.5 * det.re).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let e1 = q + 2.0 * p * phi.cos();
    let e3 = q + 2.0 * p * (phi + 2.0 * PI / 3.0).cos();
    let e2 = 3.0 * q - e1 - e3;
    [e1, e2, e3]
}

/// Capacity kernel through the substitution `v = 2√(zx)`:
/// `G(z) = ∫_0^∞ 2 v² K1(v) / (4z + v²) dv`, exp-sinh quadrature over
/// [`bessel_k_integral`].
pub fn capacity_kernel(z: f64) -> f64 {
    assert!(z > 0.0);
    let f = |v: f64| {
        if v > 750.0 {
            return 0.0;
        }
        // v K1(v) -> 1 as v -> 0; the trapezoid oracle would need very long ranges there.
        let vk1 = if v < 1e-9 { 1.0 } else { v * bessel_k_integral(1.0, v) };
        2.0 * v * vk1 / (4.0 * z + v * v)
    };
    exp_sinh(f, 1.0 / 64.0)
}
