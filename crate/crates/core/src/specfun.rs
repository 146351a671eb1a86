//! Scalar special functions used by the closed-form expressions.
//!
//! * digamma at positive integers,
//! * `Ei(x)` on the negative axis (power series near the origin, modified
//!   Lentz continued fraction beyond),
//! * modified Bessel functions `K0`, `K1` (ascending series for `x <= 2`,
//!   Temme's continued fraction beyond),
//! * the capacity kernel `G^{3,1}_{1,3}(z | 0; 0, 1, 0)`, evaluated through its
//!   defining integral rather than a Mellin–Barnes contour.

use crate::error::{Error, Result};
use crate::quad::{integrate, integrate_semi_infinite, Quadrature};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_606_512_090_082_402_43;

const EI_SERIES_LIMIT: f64 = 1.0;
const BESSEL_SERIES_LIMIT: f64 = 2.0;
const MAX_ITER: usize = 10_000;

/// `ψ(k) = -γ + Σ_{m=1}^{k-1} 1/m` for integer `k >= 1`.
pub fn digamma_int(k: i64) -> Result<f64> {
    if k < 1 {
        return Err(Error::param("k", format!("digamma_int needs k >= 1, got {k}")));
    }
    let harmonic: f64 = (1..k).map(|m| 1.0 / m as f64).sum();
    Ok(harmonic - EULER_GAMMA)
}

/// Partial harmonic sum `H_n = Σ_{l=1}^{n} 1/l` (zero for `n = 0`).
pub fn harmonic(n: usize) -> f64 {
    (1..=n).map(|l| 1.0 / l as f64).sum()
}

/// `E1(y)` for `y > 0`, scaled by `e^{y}` on the continued-fraction branch.
///
/// Returns `(value, scaled)` where `scaled` tells whether `value = e^y E1(y)`.
fn e1_parts(y: f64) -> (f64, bool) {
    if y <= EI_SERIES_LIMIT {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..MAX_ITER {
            term *= -y / k as f64;
            let contrib = term / k as f64;
            sum += contrib;
            if contrib.abs() < 1e-18 * sum.abs().max(1e-300) {
                break;
            }
        }
        (-EULER_GAMMA - y.ln() - sum, false)
    } else {
        // E1(y) = e^{-y} / (y + 1 - 1/(y + 3 - 4/(y + 5 - ...)))
        let tiny = 1e-300;
        let mut b = y + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..MAX_ITER {
            let a = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (a * d + b);
            c = b + a / c;
            let delta = c * d;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        (h, true)
    }
}

/// Exponential integral `Ei(x)` for `x < 0` (equal to `-E1(-x)`).
pub fn expint_ei(x: f64) -> Result<f64> {
    if !(x < 0.0) {
        return Err(Error::param("x", format!("Ei is only provided for x < 0, got {x}")));
    }
    let y = -x;
    let (v, scaled) = e1_parts(y);
    Ok(if scaled { -v * (-y).exp() } else { -v })
}

/// `e^{-x} Ei(x)` for `x < 0`; finite for arguments where `Ei` itself underflows.
pub fn expint_ei_scaled(x: f64) -> Result<f64> {
    if !(x < 0.0) {
        return Err(Error::param("x", format!("Ei is only provided for x < 0, got {x}")));
    }
    let y = -x;
    let (v, scaled) = e1_parts(y);
    Ok(if scaled { -v } else { -v * y.exp() })
}

/// `(e^x K0(x), e^x K1(x))` for `x > 0`.
fn bessel_k01_scaled(x: f64) -> (f64, f64) {
    if x <= BESSEL_SERIES_LIMIT {
        let (k0, k1) = bessel_k01_series(x);
        let e = x.exp();
        (k0 * e, k1 * e)
    } else {
        bessel_k01_temme_cf(x)
    }
}

fn bessel_k01_series(x: f64) -> (f64, f64) {
    let q = 0.25 * x * x;
    let ln_half = (0.5 * x).ln();
    // k = 0 terms
    let mut t0 = 1.0; // q^k / (k!)^2
    let mut t1 = 1.0; // q^k / (k! (k+1)!)
    let mut i0 = 1.0;
    let mut i1 = 1.0;
    let mut psi_k1 = -EULER_GAMMA; // ψ(k+1)
    let mut s0 = psi_k1 * t0;
    let mut s1 = (psi_k1 + psi_k1 + 1.0) * t1; // ψ(1) + ψ(2)
    for k in 1..MAX_ITER {
        let kf = k as f64;
        t0 *= q / (kf * kf);
        t1 *= q / (kf * (kf + 1.0));
        psi_k1 += 1.0 / kf;
        let psi_k2 = psi_k1 + 1.0 / (kf + 1.0);
        i0 += t0;
        i1 += t1;
        let d0 = psi_k1 * t0;
        let d1 = (psi_k1 + psi_k2) * t1;
        s0 += d0;
        s1 += d1;
        if t0 < 1e-18 * i0 && d1.abs() < 1e-18 * s1.abs().max(1e-300) {
            break;
        }
    }
    let i1 = 0.5 * x * i1;
    let k0 = -ln_half * i0 + s0;
    let k1 = 1.0 / x + ln_half * i1 - 0.25 * x * s1;
    (k0, k1)
}

// Steed/Temme continued fraction for K_0 and K_1, x >= 2.
fn bessel_k01_temme_cf(x: f64) -> (f64, f64) {
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 1..MAX_ITER {
        let fi = i as f64;
        a -= 2.0 * fi;
        c = -a * c / (fi + 1.0);
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-17 {
            break;
        }
    }
    let h = a1 * h;
    let k0 = (std::f64::consts::PI / (2.0 * x)).sqrt() / s;
    let k1 = k0 * (x + 0.5 - h) / x;
    (k0, k1)
}

/// `K0(x)`; NaN for `x <= 0`.
pub fn k0(x: f64) -> f64 {
    if !(x > 0.0) {
        return f64::NAN;
    }
    bessel_k01_scaled(x).0 * (-x).exp()
}

/// `K1(x)`; NaN for `x <= 0`.
pub fn k1(x: f64) -> f64 {
    if !(x > 0.0) {
        return f64::NAN;
    }
    bessel_k01_scaled(x).1 * (-x).exp()
}

/// `x K1(x)` with its limit value 1 at `x = 0`.
pub fn x_k1(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else if x > 0.0 {
        x * k1(x)
    } else {
        f64::NAN
    }
}

/// Modified Bessel function of the second kind, orders 0 and 1.
pub fn bessel_k(order: u32, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::param("x", format!("K_n needs x > 0, got {x}")));
    }
    match order {
        0 => Ok(k0(x)),
        1 => Ok(k1(x)),
        n => Err(Error::param("order", format!("only orders 0 and 1 supported, got {n}"))),
    }
}

/// Exponentially scaled `e^x K_n(x)`, orders 0 and 1.
pub fn bessel_k_scaled(order: u32, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::param("x", format!("K_n needs x > 0, got {x}")));
    }
    let (s0, s1) = bessel_k01_scaled(x);
    match order {
        0 => Ok(s0),
        1 => Ok(s1),
        n => Err(Error::param("order", format!("only orders 0 and 1 supported, got {n}"))),
    }
}

/// `G^{3,1}_{1,3}(z | 0; 0, 1, 0) = ∫_0^∞ 2√(zx) K1(2√(zx)) / (1 + x) dx`.
///
/// This is the kernel of `E[ln(1 + γ)]` for a product of two unit exponentials
/// scaled by `1/z`. The range is split at `1` and `1/z`, where the rational
/// factor and the Bessel decay respectively set the scale.
pub fn capacity_kernel(z: f64, q: &Quadrature) -> Result<f64> {
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::param("z", format!("capacity kernel needs z > 0, got {z}")));
    }
    let f = |x: f64| x_k1(2.0 * (z * x).sqrt()) / (1.0 + x);
    let lo = (1.0 / z).min(1.0);
    let hi = (1.0 / z).max(1.0);
    let mut total = integrate(f, 0.0, lo, q)?.value;
    if hi > lo {
        total += integrate(f, lo, hi, q)?.value;
    }
    total += integrate_semi_infinite(f, hi, q)?.value;
    Ok(total)
}
