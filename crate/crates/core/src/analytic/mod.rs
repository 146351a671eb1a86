//! Closed-form and quadrature-based performance expressions.
//!
//! All functions take the guarded eigenvalues of the receive (`eig_r`) and
//! transmit (`eig_t`) correlation matrices in descending order and a linear
//! SNR `rho`.

mod capacity;
mod hypoexp;
mod outage;

pub use capacity::{capacity_ub_inst, capacity_ub_inst_terms, capacity_ub_stat, capacity_ub_stat_terms, optimize_theta, CapacityTerms, ThetaOptimum};
pub use hypoexp::{partial_fraction_weights, pdf_h1_sq, surv_h2_sq, Hypoexponential};
pub(crate) use outage::outage_lb_inst_with_leading_factor;
pub use outage::{
    outage_exact_inst, outage_exact_stat, outage_highsnr_inst, outage_highsnr_stat, outage_lb_inst, StatOutage,
};

use crate::channel::{linear_to_db, SystemParams};
use crate::error::{Error, Result};

/// Below this SNR the high-SNR approximations carry a warning.
pub const HIGH_SNR_FLOOR_DB: f64 = 30.0;

/// The scalars of the exact instantaneous-CSI outage integral: outage
/// occurs when `‖h2‖² < (a x + b) / (c x² − d x)` with `x = ‖h1‖²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl OutageCoefficients {
    pub fn new(p: &SystemParams, rho: f64) -> Self {
        let m1 = p.m1(rho);
        let n1 = p.n1(rho);
        OutageCoefficients {
            a: m1 * p.gamma_th,
            b: p.gamma_th,
            c: m1 * n1,
            d: n1 * p.gamma_th,
        }
    }

    /// `d / c`, the smallest `‖h1‖²` for which the link can avoid outage.
    pub fn lower_limit(&self) -> f64 {
        self.d / self.c
    }

    /// Largest `‖h2‖²` that still leaves the link in outage, given `‖h1‖² = x`.
    /// Infinite at or below the lower limit.
    pub fn threshold(&self, x: f64) -> f64 {
        let den = self.c * x * x - self.d * x;
        if den <= 0.0 {
            f64::INFINITY
        } else {
            (self.a * x + self.b) / den
        }
    }
}

/// A high-SNR approximation, clamped into `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Asymptotic {
    pub value: f64,
    /// The expression before clamping.
    pub raw: f64,
    /// Set when `rho` is below [`HIGH_SNR_FLOOR_DB`] or clamping changed the value.
    pub warning: bool,
}

impl Asymptotic {
    fn new(raw: f64, rho: f64) -> Self {
        let value = if raw.is_nan() { raw } else { raw.clamp(0.0, 1.0) };
        Asymptotic {
            value,
            raw,
            warning: linear_to_db(rho) < HIGH_SNR_FLOOR_DB || value != raw,
        }
    }
}

pub(crate) fn check_inputs(p: &SystemParams, eig_r: &[f64], eig_t: &[f64], rho: f64) -> Result<()> {
    p.validate()?;
    for e in [eig_r, eig_t] {
        if e.len() != p.n {
            return Err(Error::DimensionMismatch {
                expected: p.n,
                got: e.len(),
            });
        }
        hypoexp::check_distinct(e)?;
        if e.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::param("eigenvalues", "must be sorted in descending order"));
        }
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::param("rho", format!("must be > 0, got {rho}")));
    }
    Ok(())
}
