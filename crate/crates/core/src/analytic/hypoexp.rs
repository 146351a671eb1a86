//! Sums of independent exponentials with distinct means (the laws of
//! `‖h1‖²` and `‖h2‖²`), and the partial-fraction weights built from them.
//!
//! Evaluation uses uniformization of the phase chain whenever the Poisson
//! horizon is short: every term is nonnegative, so the CDF keeps full
//! relative accuracy deep in the lower tail, where the partial-fraction sum
//! cancels catastrophically. Long horizons use the partial fractions.

use crate::error::{Error, Result};

/// Poisson horizon `μ_max·x` beyond which partial fractions are used.
const UNIFORMIZATION_HORIZON: f64 = 400.0;

/// `w_i^{(k)} = λ_i^k / Π_{j≠i} (λ_i − λ_j)`.
pub fn partial_fraction_weights(values: &[f64], k: i32) -> Result<Vec<f64>> {
    check_distinct(values)?;
    Ok(values
        .iter()
        .enumerate()
        .map(|(i, &li)| {
            let den: f64 = values
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &lj)| li - lj)
                .product();
            li.powi(k) / den
        })
        .collect())
}

pub(crate) fn check_distinct(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::param("eigenvalues", "need at least one value"));
    }
    if let Some(&v) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::param("eigenvalues", format!("must be positive and finite, got {v}")));
    }
    let mut gap = f64::INFINITY;
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            gap = gap.min((values[i] - values[j]).abs());
        }
    }
    if gap == 0.0 {
        return Err(Error::RepeatedEigenvalues { gap });
    }
    Ok(())
}

/// Distribution of `Σ λ_i E_i` with `E_i` independent unit exponentials.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypoexponential {
    means: Vec<f64>,
    rates: Vec<f64>,
    max_rate: f64,
    /// `w^{(N-2)}` for the density and `w^{(N-1)}` for the survival, when
    /// the means are distinct and the weights are well conditioned.
    weights: Option<(Vec<f64>, Vec<f64>)>,
}

impl Hypoexponential {
    pub fn new(means: &[f64]) -> Result<Self> {
        if means.is_empty() {
            return Err(Error::param("eigenvalues", "need at least one value"));
        }
        if let Some(&v) = means.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::param("eigenvalues", format!("must be positive and finite, got {v}")));
        }
        let n = means.len() as i32;
        let weights = match (partial_fraction_weights(means, n - 2), partial_fraction_weights(means, n - 1)) {
            (Ok(p), Ok(s)) if s.iter().map(|w| w.abs()).sum::<f64>() < 1e3 => Some((p, s)),
            _ => None,
        };
        let rates: Vec<f64> = means.iter().map(|l| 1.0 / l).collect();
        let max_rate = rates.iter().copied().fold(0.0, f64::max);
        Ok(Hypoexponential {
            means: means.to_vec(),
            rates,
            max_rate,
            weights,
        })
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn mean(&self) -> f64 {
        self.means.iter().sum()
    }

    /// Phase occupation probabilities at time `x`: entries `0..N` are the
    /// transient phases, entry `N` the absorbed mass (the CDF).
    fn occupation(&self, x: f64) -> Vec<f64> {
        let n = self.rates.len();
        let mut p = vec![0.0; n + 1];
        p[0] = 1.0;
        let mut remaining = x;
        let step = UNIFORMIZATION_HORIZON / self.max_rate;
        while remaining > 0.0 {
            let dt = remaining.min(step);
            p = self.propagate(&p, dt);
            remaining -= dt;
        }
        p
    }

    fn propagate(&self, p0: &[f64], dt: f64) -> Vec<f64> {
        let n = self.rates.len();
        let lam = self.max_rate;
        let a = lam * dt;
        let mut v = p0.to_vec();
        let mut weight = (-a).exp();
        let mut out: Vec<f64> = v.iter().map(|x| x * weight).collect();
        let mut k = 0usize;
        loop {
            k += 1;
            // v <- v P, P the uniformized jump matrix (one phase forward with prob μ_i/Λ).
            let mut next = vec![0.0; n + 1];
            for i in 0..n {
                let move_p = self.rates[i] / lam;
                next[i] += v[i] * (1.0 - move_p);
                next[i + 1] += v[i] * move_p;
            }
            next[n] += v[n];
            v = next;
            weight *= a / k as f64;
            let mut changed = false;
            for (o, x) in out.iter_mut().zip(&v) {
                let add = weight * x;
                if add > o.abs() * 1e-18 {
                    changed = true;
                }
                *o += add;
            }
            if k as f64 > a && (!changed || weight < 1e-300) {
                break;
            }
            if k > 10_000 {
                break;
            }
        }
        out
    }

    fn use_weights(&self, x: f64) -> Option<&(Vec<f64>, Vec<f64>)> {
        if self.max_rate * x > UNIFORMIZATION_HORIZON {
            self.weights.as_ref()
        } else {
            None
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < 0.0 || x == f64::INFINITY {
            return 0.0;
        }
        if let Some((wp, _)) = self.use_weights(x) {
            return wp.iter().zip(&self.means).map(|(w, l)| w * (-x / l).exp()).sum::<f64>().max(0.0);
        }
        let n = self.rates.len();
        if x == 0.0 {
            return if n == 1 { self.rates[0] } else { 0.0 };
        }
        self.occupation(x)[n - 1] * self.rates[n - 1]
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x == f64::INFINITY {
            return 1.0;
        }
        if let Some((_, ws)) = self.use_weights(x) {
            let sf: f64 = ws.iter().zip(&self.means).map(|(w, l)| w * (-x / l).exp()).sum();
            return (1.0 - sf).clamp(0.0, 1.0);
        }
        self.occupation(x)[self.rates.len()].clamp(0.0, 1.0)
    }

    pub fn sf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        if x == f64::INFINITY {
            return 0.0;
        }
        if let Some((_, ws)) = self.use_weights(x) {
            let sf: f64 = ws.iter().zip(&self.means).map(|(w, l)| w * (-x / l).exp()).sum();
            return sf.clamp(0.0, 1.0);
        }
        let p = self.occupation(x);
        p[..self.rates.len()].iter().sum::<f64>().clamp(0.0, 1.0)
    }
}

/// Density of `‖h1‖²` for receive eigenvalues `eigvals`.
pub fn pdf_h1_sq(x: f64, eigvals: &[f64]) -> Result<f64> {
    check_distinct(eigvals)?;
    Ok(Hypoexponential::new(eigvals)?.pdf(x))
}

/// Survival function of `‖h2‖²` for transmit eigenvalues `eigvals`.
pub fn surv_h2_sq(x: f64, eigvals: &[f64]) -> Result<f64> {
    check_distinct(eigvals)?;
    Ok(Hypoexponential::new(eigvals)?.sf(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate_semi_infinite, Quadrature};
    use proptest::prelude::*;

    const LAM: [f64; 3] = [1.843_070_330_817_254, 0.75, 0.406_929_669_182_746];

    fn pf_sf(x: f64, v: &[f64]) -> f64 {
        let w = partial_fraction_weights(v, v.len() as i32 - 1).unwrap();
        w.iter().zip(v).map(|(w, l)| w * (-x / l).exp()).sum()
    }

    fn pf_pdf(x: f64, v: &[f64]) -> f64 {
        let w = partial_fraction_weights(v, v.len() as i32 - 2).unwrap();
        w.iter().zip(v).map(|(w, l)| w * (-x / l).exp()).sum()
    }

    #[test]
    fn hand_values() {
        assert!((pdf_h1_sq(0.0, &[1.0]).unwrap() - 1.0).abs() < 1e-15);
        let want = (-0.5f64).exp() - (-1.0f64).exp();
        assert!((pdf_h1_sq(1.0, &[2.0, 1.0]).unwrap() - want).abs() < 1e-14);
        assert!((want - 0.238_651).abs() < 1e-6);
        let want = 2.0 * (-0.5f64).exp() - (-1.0f64).exp();
        assert!((surv_h2_sq(1.0, &[2.0, 1.0]).unwrap() - want).abs() < 1e-14);
        assert!((want - 0.845_182).abs() < 1e-6);
        assert_eq!(surv_h2_sq(0.0, &LAM).unwrap(), 1.0);
    }

    #[test]
    fn density_normalizes() {
        let h = Hypoexponential::new(&LAM).unwrap();
        let r = integrate_semi_infinite(|x| h.pdf(x), 0.0, &Quadrature::default()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn matches_partial_fractions_where_well_conditioned() {
        let h = Hypoexponential::new(&LAM).unwrap();
        for &x in &[0.05, 0.3, 1.0, 2.5, 7.0, 20.0] {
            assert!((h.sf(x) - pf_sf(x, &LAM)).abs() < 1e-13, "sf at {x}");
            assert!((h.pdf(x) - pf_pdf(x, &LAM)).abs() < 1e-13, "pdf at {x}");
            assert!((h.cdf(x) + h.sf(x) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn lower_tail_keeps_relative_accuracy() {
        // F(x) ~ x^N / (N! Π λ) as x -> 0.
        let h = Hypoexponential::new(&LAM).unwrap();
        let prod: f64 = LAM.iter().product();
        for &x in &[1e-3f64, 1e-6, 1e-9] {
            let lead = x.powi(3) / (6.0 * prod);
            let rel = (h.cdf(x) - lead) / lead;
            assert!(rel.abs() < 2.0 * x * LAM.iter().map(|l| 1.0 / l).sum::<f64>(), "x = {x}: {rel}");
            let plead = x.powi(2) / (2.0 * prod);
            assert!(((h.pdf(x) - plead) / plead).abs() < 5.0 * x * 3.0);
        }
    }

    #[test]
    fn long_horizon_switches_to_partial_fractions() {
        let v = [2.0, 1.0, 0.01];
        let h = Hypoexponential::new(&v).unwrap();
        let x = 10.0; // μ_max x = 1000
        assert!((h.sf(x) - pf_sf(x, &v)).abs() < 1e-14);
    }

    #[test]
    fn repeated_means_still_evaluate() {
        // Erlang(2, 1): F(x) = 1 - e^{-x}(1 + x).
        let h = Hypoexponential::new(&[1.0, 1.0]).unwrap();
        let x: f64 = 1.7;
        assert!((h.cdf(x) - (1.0 - (-x).exp() * (1.0 + x))).abs() < 1e-14);
        assert!((h.pdf(x) - x * (-x).exp()).abs() < 1e-14);
        // Long horizon with no usable weights steps through the chain.
        let x: f64 = 600.0;
        let want = (-x).exp() * (1.0 + x);
        assert!(((h.sf(x) - want) / want).abs() < 1e-10, "{} vs {want}", h.sf(x));
        assert!(pdf_h1_sq(1.0, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn weight_sum_identities() {
        let w = partial_fraction_weights(&LAM, 2).unwrap();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for k in 0..2 {
            let w = partial_fraction_weights(&LAM, k).unwrap();
            assert!(w.iter().sum::<f64>().abs() < 1e-10);
        }
        let w = partial_fraction_weights(&LAM, -1).unwrap();
        let prod: f64 = LAM.iter().product();
        assert!((w.iter().sum::<f64>() - 1.0 / prod).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn weights_normalize(raw in proptest::collection::vec(0.05f64..4.0, 1..=8)) {
            let mut v = raw.clone();
            v.sort_by(|a, b| b.total_cmp(a));
            v.dedup_by(|a, b| (*a - *b).abs() < 0.05);
            let n = v.len() as i32;
            let w = partial_fraction_weights(&v, n - 1).unwrap();
            let scale: f64 = w.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12 * scale);
            for k in 0..n - 1 {
                let w = partial_fraction_weights(&v, k).unwrap();
                let scale: f64 = w.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
                prop_assert!(w.iter().sum::<f64>().abs() < 1e-10 * scale);
            }
        }

        #[test]
        fn survival_is_monotone(raw in proptest::collection::vec(0.05f64..4.0, 1..=6), x in 0.0f64..20.0) {
            let h = Hypoexponential::new(&raw).unwrap();
            prop_assert!(h.sf(x) >= h.sf(x + 0.1) - 1e-15);
            prop_assert!((h.sf(x) + h.cdf(x) - 1.0).abs() < 1e-12);
        }
    }
}
