use super::hypoexp::{partial_fraction_weights, Hypoexponential};
use super::{check_inputs, Asymptotic, OutageCoefficients};
use crate::channel::SystemParams;
use crate::error::{Error, Result};
use crate::quad::{geometric_points, integrate, integrate_pieces, integrate_semi_infinite, Quadrature};
use crate::specfun::{harmonic, x_k1, EULER_GAMMA};

/// Breakpoints `0, v0, 10 v0, ..., hi` for integrands with a boundary layer
/// of unknown width next to the origin.
fn layer_points(v0: f64, hi: f64) -> Vec<f64> {
    let v0 = v0.max(1e-300);
    let mut pts = vec![0.0];
    if v0 < hi {
        pts.extend(geometric_points(v0, hi, 10.0));
    } else {
        pts.push(hi);
    }
    pts
}

/// Exact outage probability with instantaneous CSI.
///
/// Evaluated as `F_X(d/c) + ∫_{d/c}^∞ f_X(x) F_Y(t(x)) dx`, the complement
/// of the usual survival-weighted integral, so the result keeps its relative
/// accuracy when it is many orders of magnitude below one.
pub fn outage_exact_inst(p: &SystemParams, eig_r: &[f64], eig_t: &[f64], rho: f64, q: &Quadrature) -> Result<f64> {
    check_inputs(p, eig_r, eig_t, rho)?;
    q.validate()?;
    let co = OutageCoefficients::new(p, rho);
    let alpha = co.lower_limit();
    let hx = Hypoexponential::new(eig_r)?;
    let hy = Hypoexponential::new(eig_t)?;
    let head = hx.cdf(alpha);
    let scale = head.max(outage_lb_inst(p, eig_r, eig_t, rho)?);
    let qq = q.with_scaled_floor(scale);
    let n1 = p.n1(rho);
    let layer = (p.gamma_th + 1.0) / (n1 * eig_t[0]);
    let lam_min = eig_r[eig_r.len() - 1];
    let v0 = 1e-3 * alpha.min(layer).min(lam_min);
    let hi = 50.0 * eig_r[0] + 10.0 * alpha;
    let f = |v: f64| {
        let x = alpha + v;
        let px = hx.pdf(x);
        if px == 0.0 {
            0.0
        } else {
            px * hy.cdf(co.threshold(x))
        }
    };
    let body = integrate_pieces(f, &layer_points(v0, hi), true, &qq)?;
    Ok((head + body.value).clamp(0.0, 1.0))
}

/// Lower bound with instantaneous CSI, before clamping, with a
/// configurable multiplier in front of the double sum.
///
/// A factor of 1 is the bound; 2 reproduces the variant whose limit as
/// `γ_th → 0` is −1 instead of 0, kept for the mutation check.
pub(crate) fn outage_lb_inst_with_leading_factor(
    p: &SystemParams,
    eig_r: &[f64],
    eig_t: &[f64],
    rho: f64,
    factor: f64,
) -> Result<f64> {
    check_inputs(p, eig_r, eig_t, rho)?;
    let n = p.n as i32;
    let wl = partial_fraction_weights(eig_r, n - 1)?;
    let ws = partial_fraction_weights(eig_t, n - 1)?;
    let m1 = p.m1(rho);
    let n1 = p.n1(rho);
    let mut sum = 0.0;
    for (wi, li) in wl.iter().zip(eig_r) {
        let e = (-p.gamma_th / (m1 * li)).exp();
        for (wm, sm) in ws.iter().zip(eig_t) {
            let u = (p.gamma_th / (n1 * li * sm)).sqrt();
            sum += wi * wm * e * x_k1(2.0 * u);
        }
    }
    Ok(1.0 - factor * sum)
}

/// Closed-form lower bound on the instantaneous-CSI outage, clamped to `[0, 1]`.
pub fn outage_lb_inst(p: &SystemParams, eig_r: &[f64], eig_t: &[f64], rho: f64) -> Result<f64> {
    Ok(outage_lb_inst_with_leading_factor(p, eig_r, eig_t, rho, 1.0)?.clamp(0.0, 1.0))
}

/// High-SNR approximation of the instantaneous-CSI outage, full diversity `N`.
pub fn outage_highsnr_inst(p: &SystemParams, eig_r: &[f64], eig_t: &[f64], rho: f64) -> Result<Asymptotic> {
    check_inputs(p, eig_r, eig_t, rho)?;
    let n = p.n;
    let wl = partial_fraction_weights(eig_r, -1)?;
    let ws = partial_fraction_weights(eig_t, -1)?;
    let d1t = p.d1.powf(p.tau);
    let d2t = p.d2.powf(p.tau);
    let fact_n: f64 = (1..=n).map(|k| k as f64).product();
    let fact_n1 = fact_n / n as f64;
    let lead = (d2t / (p.eta * p.theta)).powi(n as i32) / fact_n1;
    let h = harmonic(n - 1);
    let mut sum = 0.0;
    for (wi, li) in wl.iter().zip(eig_r) {
        let log_term = h - EULER_GAMMA + ((1.0 - p.theta) * rho * li / (p.gamma_th * d1t)).ln();
        for (wm, sm) in ws.iter().zip(eig_t) {
            let bracket = lead * log_term - (-sm / (1.0 - p.theta)).powi(n as i32);
            sum += wi * wm * bracket / fact_n;
        }
    }
    let raw = sum * (p.gamma_th * d1t / rho).powi(n as i32);
    Ok(Asymptotic::new(raw, rho))
}

/// Statistical-CSI outage: the value from direct quadrature of the
/// conditional probability, and the printed single-integral form alongside.
#[derive(Debug, Clone, PartialEq)]
pub struct StatOutage {
    /// Direct 2-D quadrature; this is the reported outage probability.
    pub value: f64,
    /// The printed-form evaluation, NaN when its quadrature fails.
    pub printed_form: f64,
    /// Why the printed form could not be evaluated, if it could not.
    pub printed_form_error: Option<Error>,
}

impl StatOutage {
    /// `|printed_form − value|`; NaN when the printed form failed.
    pub fn discrepancy(&self) -> f64 {
        (self.printed_form - self.value).abs()
    }

    /// True when the printed form is unavailable or differs by more than `1e-3`.
    pub fn needs_logging(&self) -> bool {
        !(self.discrepancy() <= 1e-3)
    }
}

/// Exact outage probability with statistical CSI.
///
/// Writes `‖h1‖² = λ1 U + K` with `U` a unit exponential and `K` the
/// remaining hypoexponential part; conditioning on `(U, K)` leaves a single
/// exponential in the second hop:
/// `P = 1 − e^{−α1} + ∫_{α1}^∞ e^{−u} E_K[1 − exp(−g(u) / (σ1 (λ1 u + K)))] du`.
pub fn outage_exact_stat(p: &SystemParams, eig_r: &[f64], eig_t: &[f64], rho: f64, q: &Quadrature) -> Result<StatOutage> {
    let value = outage_stat_direct(p, eig_r, eig_t, rho, q)?;
    let (printed_form, printed_form_error) = match outage_stat_printed(p, eig_r, eig_t, rho, q) {
        Ok(v) => (v, None),
        Err(e) => (f64::NAN, Some(e)),
    };
    Ok(StatOutage {
        value,
        printed_form,
        printed_form_error,
    })
}

pub(crate) fn outage_stat_direct(p: &SystemParams, eig_r: &[f64], eig_t: &[f64], rho: f64, q: &Quadrature) -> Result<f64> {
    check_inputs(p, eig_r, eig_t, rho)?;
    q.validate()?;
    let m1 = p.m1(rho);
    let n1 = p.n1(rho);
    let g_th = p.gamma_th;
    let l1 = eig_r[0];
    let s1 = eig_t[0];
    let alpha1 = g_th / (m1 * l1);
    let head = -(-alpha1).exp_m1();
    let rest = &eig_r[1..];
    let hk = if rest.is_empty() { None } else { Some(Hypoexponential::new(rest)?) };
    let k_mean: f64 = rest.iter().sum();

    let qq = q.with_scaled_floor(head);
    let q_inner = q.with_scaled_floor(head * 1e-2);
    let g = |u: f64| g_th * (m1 * l1 * u + 1.0) / (n1 * (m1 * l1 * u - g_th));

    let inner = |u: f64| -> Result<f64> {
        let gu = g(u);
        if !(gu > 0.0) || gu.is_infinite() {
            return Ok(1.0);
        }
        let s = l1 * u;
        match &hk {
            None => Ok(-(-gu / (s1 * s)).exp_m1()),
            Some(h) => {
                let f = |k: f64| {
                    let d = h.pdf(k);
                    if d == 0.0 {
                        0.0
                    } else {
                        d * -(-gu / (s1 * (s + k))).exp_m1()
                    }
                };
                let lo = 1e-2 * s.min(rest[rest.len() - 1]);
                let hi = 50.0 * rest[0];
                Ok(integrate_pieces(f, &layer_points(lo, hi), true, &q_inner)?.value)
            }
        }
    };

    let layer = g_th * (1.0 + g_th) / (n1 * m1 * l1 * s1 * (l1 * alpha1 + k_mean));
    let v0 = 1e-3 * alpha1.min(layer);
    let hi = 50.0 + 10.0 * alpha1;
    let failure = std::cell::Cell::new(None);
    let outer = |v: f64| {
        let u = alpha1 + v;
        let e = (-u).exp();
        if e == 0.0 {
            return 0.0;
        }
        match inner(u) {
            Ok(x) => e * x,
            Err(err) => {
                failure.set(Some(err));
                f64::NAN
            }
        }
    };
    let body = integrate_pieces(outer, &layer_points(v0, hi), true, &qq);
    if let Some(err) = failure.take() {
        return Err(err);
    }
    Ok((head + body?.value).clamp(0.0, 1.0))
}

/// The printed single-integral representation, evaluated literally.
///
/// For `i ≥ 2` its outer integrand carries `e^{(λ1/λi − 1) t}`, which grows
/// while the inner integral tends to a nonzero constant, so the quadrature
/// is expected to report non-convergence.
pub(crate) fn outage_stat_printed(p: &SystemParams, eig_r: &[f64], eig_t: &[f64], rho: f64, q: &Quadrature) -> Result<f64> {
    check_inputs(p, eig_r, eig_t, rho)?;
    let co = OutageCoefficients::new(p, rho);
    let (a, b, c, d) = (co.a, co.b, co.c, co.d);
    let t0 = d / c;
    let l1 = eig_r[0];
    let s1 = eig_t[0];
    let ratio = |t: f64, li: f64| {
        let den = (c * t - d) * s1 * li * t;
        if den <= 0.0 {
            f64::INFINITY
        } else {
            (a * t + b) / den
        }
    };
    let first = integrate_semi_infinite(|t| (-(ratio(t, l1) + t)).exp(), t0, q)?.value;
    let mut total = 1.0 - first;
    let rest = &eig_r[1..];
    if rest.is_empty() {
        return Ok(total);
    }
    let w = partial_fraction_weights(rest, p.n as i32 - 2)?;
    for (wi, &li) in w.iter().zip(rest) {
        let failure = std::cell::Cell::new(None);
        let outer = |t: f64| {
            let v = ratio(t, li);
            if !v.is_finite() {
                return 0.0;
            }
            let inner = integrate(|x: f64| (-(x + v / x)).exp(), t0, v, q);
            match inner {
                Ok(r) => ((l1 / li - 1.0) * t).exp() * r.value,
                Err(e) => {
                    failure.set(Some(e));
                    f64::NAN
                }
            }
        };
        let r = integrate_semi_infinite(outer, t0, q);
        if let Some(e) = failure.take() {
            return Err(e);
        }
        let r = r?;
        if !r.value.is_finite() {
            return Err(Error::Quadrature {
                estimate: r.value,
                error: r.error,
            });
        }
        total -= wi * r.value;
    }
    Ok(total)
}

/// High-SNR approximation of the statistical-CSI outage, diversity one.
pub fn outage_highsnr_stat(p: &SystemParams, eig_r: &[f64], eig_t: &[f64], rho: f64) -> Result<Asymptotic> {
    check_inputs(p, eig_r, eig_t, rho)?;
    let d1t = p.d1.powf(p.tau);
    let d2t = p.d2.powf(p.tau);
    let beta = d1t * d2t * p.gamma_th / (p.eta * p.theta * eig_t[0]);
    let w = partial_fraction_weights(eig_r, p.n as i32 - 2)?;
    let sum: f64 = w.iter().zip(eig_r).map(|(wi, li)| wi * beta * (beta / (li * rho)).ln()).sum();
    let raw = (p.gamma_th * d1t / ((1.0 - p.theta) * eig_r[0]) - sum) / rho;
    Ok(Asymptotic::new(raw, rho))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::db_to_linear;
    use crate::corrmat::{exp_correlation, DEFAULT_DISTINCT_TOL};

    fn reference_setup() -> (SystemParams, Vec<f64>, Vec<f64>) {
        let p = SystemParams::with_threshold_db(0.8, 0.5, 2.5, 3.0, 3.0, 3, 0.0).unwrap();
        let r = exp_correlation(3, 0.5).unwrap().eigen(DEFAULT_DISTINCT_TOL).unwrap();
        let t = exp_correlation(3, 0.8).unwrap().eigen(DEFAULT_DISTINCT_TOL).unwrap();
        (p, r.values().to_vec(), t.values().to_vec())
    }

    #[test]
    fn exact_inst_reference_values() {
        // Frozen from an independent double-precision quadrature (SciPy) of the
        // conditional probability.
        let (p, r, t) = reference_setup();
        let q = Quadrature::default();
        let cases = [
            (10.0, 0.999_512_88),
            (20.0, 0.628_036_92),
            (30.0, 0.038_718_49),
            (40.0, 2.925_22e-4),
            (50.0, 7.791_08e-7),
            (60.0, 1.349_37e-9),
        ];
        for (db, want) in cases {
            let v = outage_exact_inst(&p, &r, &t, db_to_linear(db), &q).unwrap();
            assert!(((v - want) / want).abs() < 2e-5, "{db} dB: {v} vs {want}");
        }
    }

    #[test]
    fn exact_inst_vanishes_with_threshold() {
        let (p, r, t) = reference_setup();
        let p0 = p.with_gamma_th(1e-12).unwrap();
        let v = outage_exact_inst(&p0, &r, &t, db_to_linear(20.0), &Quadrature::default()).unwrap();
        assert!(v < 1e-9);
    }

    #[test]
    fn lower_bound_limit_and_typo_variant() {
        let (p, r, t) = reference_setup();
        let p0 = p.with_gamma_th(1e-14).unwrap();
        let rho = db_to_linear(20.0);
        let raw = outage_lb_inst_with_leading_factor(&p0, &r, &t, rho, 1.0).unwrap();
        assert!(raw.abs() < 1e-9);
        let typo = outage_lb_inst_with_leading_factor(&p0, &r, &t, rho, 2.0).unwrap();
        assert!((typo + 1.0).abs() < 1e-9);
    }

    #[test]
    fn lower_bound_single_antenna() {
        let p = SystemParams::new(0.7, 0.4, 2.0, 2.0, 1.5, 1, 2.0).unwrap();
        let rho = 50.0;
        let lb = outage_lb_inst(&p, &[1.0], &[1.0], rho).unwrap();
        let u = (p.gamma_th * 4.0 * 2.25 / (0.7 * 0.4 * rho)).sqrt();
        let want = 1.0 - (-p.gamma_th * 4.0 / (0.6 * rho)).exp() * 2.0 * u * crate::specfun::k1(2.0 * u);
        assert!((lb - want).abs() < 1e-14);
    }

    #[test]
    fn highsnr_inst_single_antenna_by_hand() {
        // N = 1: [ (d2^τ/(ηθ)) (−C + ln((1−θ)ρλ/(γ d1^τ))) + σ/(1−θ) ] γ d1^τ / (λ σ ρ)
        let p = SystemParams::new(0.8, 0.5, 2.0, 2.0, 3.0, 1, 1.0).unwrap();
        let (l, s, rho) = (1.0, 1.0, 1e5);
        let v = outage_highsnr_inst(&p, &[l], &[s], rho).unwrap();
        let want = ((9.0 / 0.4) * (-EULER_GAMMA + (0.5 * rho / 4.0).ln()) + 2.0) * 4.0 / rho;
        assert!((v.raw - want).abs() < 1e-12 * want);
        assert!(!v.warning);
    }

    #[test]
    fn highsnr_warns_at_low_snr() {
        let (p, r, t) = reference_setup();
        let v = outage_highsnr_stat(&p, &r, &t, db_to_linear(0.0)).unwrap();
        assert!(v.warning);
        assert!((0.0..=1.0).contains(&v.value));
    }

    #[test]
    fn stat_exact_reference_and_printed_form() {
        let (p, r, t) = reference_setup();
        let q = Quadrature::default();
        for (db, want) in [(10.0, 0.999_731_41), (20.0, 0.759_399_78), (30.0, 0.155_411_21)] {
            let s = outage_exact_stat(&p, &r, &t, db_to_linear(db), &q).unwrap();
            assert!(((s.value - want) / want).abs() < 2e-6, "{db} dB: {}", s.value);
            assert!(s.needs_logging());
        }
    }

    #[test]
    fn stat_exact_single_antenna_matches_closed_integral() {
        // N = 1 has no K; compare with direct 1-D integration of the conditional form.
        let p = SystemParams::new(0.8, 0.5, 2.0, 1.0, 1.0, 1, 1.0).unwrap();
        let rho = 20.0;
        let v = outage_stat_direct(&p, &[1.0], &[1.0], rho, &Quadrature::default()).unwrap();
        // With N = 1 statistical and instantaneous CSI coincide.
        let w = outage_exact_inst(&p, &[1.0], &[1.0], rho, &Quadrature::default()).unwrap();
        assert!((v - w).abs() < 1e-9);
    }

    #[test]
    fn stat_highsnr_is_close_at_55_db() {
        let (p, r, t) = reference_setup();
        let rho = db_to_linear(55.0);
        let exact = outage_stat_direct(&p, &r, &t, rho, &Quadrature::default()).unwrap();
        let approx = outage_highsnr_stat(&p, &r, &t, rho).unwrap().value;
        let ratio = approx / exact;
        assert!((0.99..1.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn input_checks() {
        let (p, r, t) = reference_setup();
        assert!(outage_lb_inst(&p, &r[..2], &t, 10.0).is_err());
        assert!(outage_lb_inst(&p, &[1.0, 1.0, 1.0], &t, 10.0).is_err());
        assert!(outage_lb_inst(&p, &[0.5, 1.0, 1.5], &t, 10.0).is_err());
        assert!(outage_lb_inst(&p, &r, &t, 0.0).is_err());
    }
}
