use super::check_inputs;
use super::hypoexp::partial_fraction_weights;
use crate::channel::{CsiMode, SystemParams};
use crate::error::{Error, Result};
use crate::quad::Quadrature;
use crate::specfun::{capacity_kernel, expint_ei_scaled, EULER_GAMMA};
use std::f64::consts::LN_2;

/// The pieces of a capacity upper bound, in bits per channel use.
///
/// `c1` and `c2` are the per-hop ergodic capacities (half-duplex factor
/// included), `o1` and `o2` the expected natural logs of the per-hop SNRs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityTerms {
    pub c1: f64,
    pub c2: f64,
    pub o1: f64,
    pub o2: f64,
    pub value: f64,
}

impl CapacityTerms {
    fn assemble(c1: f64, c2: f64, o1: f64, o2: f64) -> Self {
        // log(1 + e^o1 + e^o2) without overflow
        let m = o1.max(o2).max(0.0);
        let lse = m + ((-m).exp() + (o1 - m).exp() + (o2 - m).exp()).ln();
        CapacityTerms {
            c1,
            c2,
            o1,
            o2,
            value: c1 + c2 - 0.5 * lse / LN_2,
        }
    }
}

/// Upper bound on the instantaneous-CSI ergodic capacity, with its terms.
pub fn capacity_ub_inst_terms(p: &SystemParams, eig_r: &[f64], eig_t: &[f64], rho: f64, q: &Quadrature) -> Result<CapacityTerms> {
    check_inputs(p, eig_r, eig_t, rho)?;
    q.validate()?;
    let n = p.n as i32;
    let wl = partial_fraction_weights(eig_r, n - 1)?;
    let ws = partial_fraction_weights(eig_t, n - 1)?;
    let m1 = p.m1(rho);
    let n1 = p.n1(rho);
    let mut c1 = 0.0;
    let mut o1 = 0.0;
    let mut c2 = 0.0;
    let mut o2 = 0.0;
    for (wi, li) in wl.iter().zip(eig_r) {
        c1 -= wi * expint_ei_scaled(-1.0 / (m1 * li))?;
        o1 += wi * (-EULER_GAMMA + (m1 * li).ln());
        for (wm, sm) in ws.iter().zip(eig_t) {
            let c = n1 * li * sm;
            c2 += wi * wm * capacity_kernel(1.0 / c, q)?;
            o2 += wi * wm * (-2.0 * EULER_GAMMA + c.ln());
        }
    }
    Ok(CapacityTerms::assemble(c1 / (2.0 * LN_2), c2 / (2.0 * LN_2), o1, o2))
}

/// Upper bound on the statistical-CSI ergodic capacity, with its terms.
pub fn capacity_ub_stat_terms(p: &SystemParams, eig_r: &[f64], eig_t: &[f64], rho: f64, q: &Quadrature) -> Result<CapacityTerms> {
    check_inputs(p, eig_r, eig_t, rho)?;
    q.validate()?;
    let wl = partial_fraction_weights(eig_r, p.n as i32 - 1)?;
    let m1 = p.m1(rho);
    let n1 = p.n1(rho);
    let l1 = eig_r[0];
    let s1 = eig_t[0];
    let c1 = -expint_ei_scaled(-1.0 / (m1 * l1))?;
    let o1 = -EULER_GAMMA + (m1 * l1).ln();
    let mut c2 = 0.0;
    let mut o2 = 0.0;
    for (wi, li) in wl.iter().zip(eig_r) {
        let c = n1 * s1 * li;
        c2 += wi * capacity_kernel(1.0 / c, q)?;
        o2 += wi * (-2.0 * EULER_GAMMA + c.ln());
    }
    Ok(CapacityTerms::assemble(c1 / (2.0 * LN_2), c2 / (2.0 * LN_2), o1, o2))
}

/// Upper bound on the instantaneous-CSI ergodic capacity (bits/s/Hz).
pub fn capacity_ub_inst(p: &SystemParams, eig_r: &[f64], eig_t: &[f64], rho: f64, q: &Quadrature) -> Result<f64> {
    Ok(capacity_ub_inst_terms(p, eig_r, eig_t, rho, q)?.value)
}

/// Upper bound on the statistical-CSI ergodic capacity (bits/s/Hz).
pub fn capacity_ub_stat(p: &SystemParams, eig_r: &[f64], eig_t: &[f64], rho: f64, q: &Quadrature) -> Result<f64> {
    Ok(capacity_ub_stat_terms(p, eig_r, eig_t, rho, q)?.value)
}

/// Result of [`optimize_theta`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaOptimum {
    pub theta: f64,
    pub value: f64,
    /// The bound at `θ = 0.5`, for reference.
    pub value_at_half: f64,
}

const THETA_MIN: f64 = 0.01;
const THETA_MAX: f64 = 0.99;
const THETA_STEP: f64 = 0.02;
const THETA_TOL: f64 = 1e-4;

/// Power-splitting ratio maximizing the capacity upper bound of `mode`.
///
/// A coarse grid brackets the maximum, then golden-section search refines
/// it to `|Δθ| ≤ 1e-4`. The best point seen is returned, so the value never
/// falls below the one at `θ = 0.5`.
pub fn optimize_theta(
    mode: CsiMode,
    p: &SystemParams,
    eig_r: &[f64],
    eig_t: &[f64],
    rho: f64,
    q: &Quadrature,
) -> Result<ThetaOptimum> {
    let bound: fn(&SystemParams, &[f64], &[f64], f64, &Quadrature) -> Result<f64> = match mode {
        CsiMode::Instantaneous => capacity_ub_inst,
        CsiMode::Statistical => capacity_ub_stat,
        CsiMode::NoCsi => return Err(Error::Unsupported("no capacity bound for the no-CSI mode".into())),
    };
    let eval = |theta: f64| bound(&p.with_theta(theta)?, eig_r, eig_t, rho, q);

    let value_at_half = eval(0.5)?;
    let mut best = (0.5, value_at_half);
    let steps = ((THETA_MAX - THETA_MIN) / THETA_STEP).round() as usize;
    for k in 0..=steps {
        let t = THETA_MIN + k as f64 * THETA_STEP;
        let v = eval(t)?;
        if v > best.1 {
            best = (t, v);
        }
    }

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut lo = (best.0 - THETA_STEP).max(THETA_MIN);
    let mut hi = (best.0 + THETA_STEP).min(THETA_MAX);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = eval(x1)?;
    let mut f2 = eval(x2)?;
    while hi - lo > THETA_TOL {
        if f1 >= f2 {
            if f1 > best.1 {
                best = (x1, f1);
            }
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = eval(x1)?;
        } else {
            if f2 > best.1 {
                best = (x2, f2);
            }
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = eval(x2)?;
        }
    }
    for (x, f) in [(x1, f1), (x2, f2)] {
        if f > best.1 {
            best = (x, f);
        }
    }
    Ok(ThetaOptimum {
        theta: best.0,
        value: best.1,
        value_at_half,
    })
}
