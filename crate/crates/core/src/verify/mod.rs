//! Numerical checks of the structural claims: majorization orderings of the
//! ergodic capacity, the Vandermonde cofactor identity, curvature signs and
//! diversity slopes.

pub mod acceptance;

use rand::Rng;

use crate::analytic::{outage_exact_inst, outage_exact_stat};
use crate::channel::{db_to_linear, CsiMode, Link, SystemParams};
use crate::corrmat::{EigenSystem, DEFAULT_DISTINCT_TOL};
use crate::error::{Error, Result};
use crate::mc::{estimate_capacity_difference, estimate_grid, Estimate, Metric, StreamSpec};
use crate::quad::Quadrature;

const SUM_TOL: f64 = 1e-12;

/// SNR standing in for the high-SNR regime of the receive-correlation claim.
pub const RX_HIGH_PROXY_DB: f64 = 50.0;
/// SNR standing in for the low-SNR regime of the receive-correlation claim.
pub const RX_LOW_PROXY_DB: f64 = -10.0;

fn sorted_desc(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// `a ≻ b`: the sorted prefix sums of `a` dominate those of `b` and the
/// totals agree to `1e-12`.
pub fn majorizes(a: &[f64], b: &[f64]) -> Result<bool> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let (a, b) = (sorted_desc(a), sorted_desc(b));
    let (mut sa, mut sb) = (0.0, 0.0);
    for (x, y) in a.iter().zip(&b) {
        sa += x;
        sb += y;
        if sa < sb - SUM_TOL {
            return Ok(false);
        }
    }
    Ok((sa - sb).abs() <= SUM_TOL)
}

/// Two eigenvalue vectors with `va ≻ vb`, both sorted descending.
#[derive(Debug, Clone, PartialEq)]
pub struct MajorizationPair {
    va: Vec<f64>,
    vb: Vec<f64>,
}

impl MajorizationPair {
    pub fn new(va: Vec<f64>, vb: Vec<f64>) -> Result<Self> {
        for v in [&va, &vb] {
            if v.windows(2).any(|w| w[0] < w[1]) {
                return Err(Error::param("pair", "vectors must be sorted descending"));
            }
            if v.iter().any(|x| !(*x > 0.0)) {
                return Err(Error::param("pair", "entries must be positive"));
            }
        }
        if !majorizes(&va, &vb)? {
            return Err(Error::param("pair", "first vector does not majorize the second"));
        }
        Ok(MajorizationPair { va, vb })
    }

    pub fn va(&self) -> &[f64] {
        &self.va
    }

    pub fn vb(&self) -> &[f64] {
        &self.vb
    }

    /// Random pair of length `n` with entries summing to `n`.
    ///
    /// `vb` is a random mixture of permutations of `va` (a doubly stochastic
    /// image), so `va ≻ vb` by construction. With `equal_top` only the tail
    /// is mixed and both share the leading entry. Adjacent entries of each
    /// vector differ by at least `min_gap`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, n: usize, equal_top: bool, min_gap: f64) -> Result<Self> {
        if n < 2 || (equal_top && n < 3) {
            return Err(Error::param("n", "too small for a nontrivial pair"));
        }
        for _ in 0..10_000 {
            let raw: Vec<f64> = (0..n).map(|_| -rng.gen::<f64>().ln()).collect();
            let total: f64 = raw.iter().sum();
            let va = sorted_desc(&raw.iter().map(|x| x * n as f64 / total).collect::<Vec<_>>());
            let start = usize::from(equal_top);
            let tail = &va[start..];
            let m = tail.len();
            // mix with a fraction s of random permutations
            let s: f64 = rng.gen_range(0.3..1.0);
            let mut mixed = vec![0.0; m];
            let perms = 4;
            for _ in 0..perms {
                let mut idx: Vec<usize> = (0..m).collect();
                for i in (1..m).rev() {
                    idx.swap(i, rng.gen_range(0..=i));
                }
                for (k, &j) in idx.iter().enumerate() {
                    mixed[k] += s * tail[j] / perms as f64;
                }
            }
            for (k, x) in tail.iter().enumerate() {
                mixed[k] += (1.0 - s) * x;
            }
            let mut vb = va[..start].to_vec();
            vb.extend(sorted_desc(&mixed));
            // restore the exact total lost to rounding
            let drift: f64 = va.iter().sum::<f64>() - vb.iter().sum::<f64>();
            vb[n - 1] += drift;
            let separated = |v: &[f64]| v.windows(2).all(|w| w[0] - w[1] >= min_gap) && v[n - 1] >= min_gap;
            if separated(&va) && separated(&vb) && va != vb {
                if let Ok(p) = MajorizationPair::new(va, vb) {
                    return Ok(p);
                }
            }
        }
        Err(Error::param("min_gap", "could not draw a separated pair"))
    }
}

fn determinant(mut m: Vec<Vec<f64>>) -> f64 {
    let n = m.len();
    let mut det = 1.0;
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap();
        if m[piv][c] == 0.0 {
            return 0.0;
        }
        if piv != c {
            m.swap(piv, c);
            det = -det;
        }
        det *= m[c][c];
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            for k in c..n {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    det
}

/// Outcome of [`lemma1_residual`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CofactorResidual {
    /// `|Σ_m (−1)^{m+n} v_m^{n−l−1} det^{n,m}(A)|`
    pub residual: f64,
    /// Largest single term of the sum in absolute value.
    pub scale: f64,
}

impl CofactorResidual {
    pub fn relative(&self) -> f64 {
        if self.scale == 0.0 {
            self.residual
        } else {
            self.residual / self.scale
        }
    }
}

/// Alternating cofactor sum along the last row of the Vandermonde matrix
/// `A_{ij} = v_j^{i−1}`, with that row replaced by powers `n − l − 1`.
/// Zero whenever `0 < l < n`, since the replaced row repeats an earlier one.
pub fn lemma1_residual(eigvals: &[f64], l: usize) -> Result<CofactorResidual> {
    let n = eigvals.len();
    if l == 0 || l >= n {
        return Err(Error::param("l", format!("must satisfy 0 < l < {n}, got {l}")));
    }
    crate::analytic::partial_fraction_weights(eigvals, 0)?;
    let mut sum = 0.0;
    let mut scale: f64 = 0.0;
    for m in 0..n {
        let minor: Vec<Vec<f64>> = (0..n - 1)
            .map(|i| (0..n).filter(|&j| j != m).map(|j| eigvals[j].powi(i as i32)).collect())
            .collect();
        // (-1)^{m+n} with 1-based m
        let sign = if (m + 1 + n) % 2 == 0 { 1.0 } else { -1.0 };
        let term = sign * eigvals[m].powi((n - l - 1) as i32) * determinant(minor);
        scale = scale.max(term.abs());
        sum += term;
    }
    Ok(CofactorResidual { residual: sum.abs(), scale })
}

/// The ordering claims about the ergodic capacity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchurClaim {
    /// Instantaneous CSI, transmit eigenvalues: `C(σa) ≤ C(σb)`.
    TxInst,
    /// Instantaneous CSI, receive eigenvalues, high SNR: `C(λa) ≤ C(λb)`.
    RxInstHigh,
    /// Instantaneous CSI, receive eigenvalues, low SNR: `C(λa) ≥ C(λb)`.
    RxInstLow,
    /// Statistical CSI, transmit eigenvalues: `C(σa) ≥ C(σb)`.
    TxStat,
    /// Statistical CSI, receive eigenvalues with a shared largest one: `C(λa) ≤ C(λb)`.
    RxStatEqualTop,
}

impl SchurClaim {
    pub const ALL: [SchurClaim; 5] = [
        SchurClaim::TxInst,
        SchurClaim::RxInstHigh,
        SchurClaim::RxInstLow,
        SchurClaim::TxStat,
        SchurClaim::RxStatEqualTop,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SchurClaim::TxInst => "tx-inst",
            SchurClaim::RxInstHigh => "rx-inst-high",
            SchurClaim::RxInstLow => "rx-inst-low",
            SchurClaim::TxStat => "tx-stat",
            SchurClaim::RxStatEqualTop => "rx-stat-equal-top",
        }
    }

    fn mode(&self) -> CsiMode {
        match self {
            SchurClaim::TxInst | SchurClaim::RxInstHigh | SchurClaim::RxInstLow => CsiMode::Instantaneous,
            SchurClaim::TxStat | SchurClaim::RxStatEqualTop => CsiMode::Statistical,
        }
    }

    fn on_transmit_side(&self) -> bool {
        matches!(self, SchurClaim::TxInst | SchurClaim::TxStat)
    }

    /// +1 when the claim is `C(a) ≥ C(b)`, −1 when it is `C(a) ≤ C(b)`.
    fn direction(&self) -> f64 {
        match self {
            SchurClaim::RxInstLow | SchurClaim::TxStat => 1.0,
            _ => -1.0,
        }
    }

    /// The SNR the claim is checked at, given the caller's choice.
    pub fn rho(&self, rho: f64) -> f64 {
        match self {
            SchurClaim::RxInstHigh => db_to_linear(RX_HIGH_PROXY_DB),
            SchurClaim::RxInstLow => db_to_linear(RX_LOW_PROXY_DB),
            _ => rho,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Consistent,
    Violated,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Consistent => "consistent",
            Verdict::Violated => "violated",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// Verdict plus the paired estimate of `C(a) − C(b)` it was based on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchurOutcome {
    pub verdict: Verdict,
    pub difference: Estimate,
}

/// Classifies a paired difference `C(a) − C(b)` against a claimed sign at
/// `sigmas` standard errors.
pub fn classify(difference: &Estimate, direction: f64, sigmas: f64) -> Verdict {
    let signed = direction * difference.mean;
    let margin = sigmas * difference.stderr;
    if signed > margin {
        Verdict::Consistent
    } else if -signed > margin {
        Verdict::Violated
    } else {
        Verdict::Inconclusive
    }
}

/// Monte Carlo test of one ordering claim on one pair.
///
/// `other` holds the eigenvalues of the correlation matrix that is not
/// varied. Both capacities are estimated from the same whitened draws.
#[allow(clippy::too_many_arguments)]
pub fn schur_ordering_check(
    claim: SchurClaim,
    pair: &MajorizationPair,
    other: &[f64],
    p: &SystemParams,
    rho: f64,
    n: u64,
    spec: StreamSpec,
    workers: usize,
) -> Result<SchurOutcome> {
    if claim == SchurClaim::RxStatEqualTop && pair.va[0] != pair.vb[0] {
        return Err(Error::param("pair", "claim requires equal largest eigenvalues"));
    }
    let fixed = EigenSystem::from_values(other, DEFAULT_DISTINCT_TOL)?;
    let link = |v: &[f64]| -> Result<Link> {
        let varied = EigenSystem::from_values(v, DEFAULT_DISTINCT_TOL)?;
        if claim.on_transmit_side() {
            Link::from_eigen(p.clone(), fixed.clone(), varied)
        } else {
            Link::from_eigen(p.clone(), varied, fixed.clone())
        }
    };
    let (la, lb) = (link(&pair.va)?, link(&pair.vb)?);
    let difference = estimate_capacity_difference(claim.mode(), &la, &lb, claim.rho(rho), n, spec, workers)?;
    Ok(SchurOutcome {
        verdict: classify(&difference, claim.direction(), 3.0),
        difference,
    })
}

/// Which capacity surface a curvature probe differentiates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Curvature {
    /// `C(x, y)` in `y`; expected negative.
    CofY,
    /// High-SNR form `C^h(x, y)` in `x`; expected negative.
    ChOfX,
    /// Low-SNR form `C^l(x, y)` in `x`; expected positive.
    ClOfX,
}

/// `C(x, y) = log2(1 + m1 n1 x² y / (m1 x + n1 x y + 1))` and its two
/// regime approximations.
pub fn capacity_surface(which: Curvature, x: f64, y: f64, p: &SystemParams, rho: f64) -> f64 {
    let (m1, n1) = (p.m1(rho), p.n1(rho));
    let num = m1 * n1 * x * x * y;
    let den = m1 * x + n1 * x * y + 1.0;
    match which {
        Curvature::CofY => (num / den).ln_1p() / std::f64::consts::LN_2,
        Curvature::ChOfX => (num / den).log2(),
        Curvature::ClOfX => num / den / std::f64::consts::LN_2,
    }
}

/// Central second difference of [`capacity_surface`] with step `1e-3` of
/// the argument being varied.
pub fn curvature_probe(which: Curvature, x: f64, y: f64, p: &SystemParams, rho: f64) -> Result<f64> {
    if !(x > 0.0 && y > 0.0) {
        return Err(Error::param("x, y", "must be positive"));
    }
    let f = |x: f64, y: f64| capacity_surface(which, x, y, p, rho);
    Ok(match which {
        Curvature::CofY => {
            let h = 1e-3 * y;
            (f(x, y + h) - 2.0 * f(x, y) + f(x, y - h)) / (h * h)
        }
        Curvature::ChOfX | Curvature::ClOfX => {
            let h = 1e-3 * x;
            (f(x + h, y) - 2.0 * f(x, y) + f(x - h, y)) / (h * h)
        }
    })
}

/// How outage values along the SNR window are obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Evaluator {
    Analytic(Quadrature),
    MonteCarlo { samples: u64, spec: StreamSpec, workers: usize },
}

/// Grid used by [`diversity_slope`]: 1 dB spacing, at least 5 points.
pub fn slope_grid(lo_db: f64, hi_db: f64) -> Vec<f64> {
    let k = ((hi_db - lo_db).round() as usize).max(4);
    (0..=k).map(|i| lo_db + (hi_db - lo_db) * i as f64 / k as f64).collect()
}

/// Least-squares slope of `log10 y` against `log10 x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.log10()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.log10()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Outage diversity estimate: negative of the log-log slope of outage over
/// the SNR window `[lo_db, hi_db]`.
pub fn diversity_slope(mode: CsiMode, link: &Link, lo_db: f64, hi_db: f64, evaluator: Evaluator) -> Result<f64> {
    if !(hi_db - lo_db >= 10.0) {
        return Err(Error::param("rho_db_window", "must span at least 10 dB"));
    }
    let grid = slope_grid(lo_db, hi_db);
    let rhos: Vec<f64> = grid.iter().map(|&d| db_to_linear(d)).collect();
    let eig_r = link.eig_r.values();
    let eig_t = link.eig_t.values();
    let values: Vec<f64> = match evaluator {
        Evaluator::Analytic(q) => rhos
            .iter()
            .map(|&rho| match mode {
                CsiMode::Instantaneous => outage_exact_inst(&link.params, eig_r, eig_t, rho, &q),
                CsiMode::Statistical => outage_exact_stat(&link.params, eig_r, eig_t, rho, &q).map(|s| s.value),
                CsiMode::NoCsi => Err(Error::Unsupported("no analytic outage without CSI".into())),
            })
            .collect::<Result<_>>()?,
        Evaluator::MonteCarlo { samples, spec, workers } => {
            estimate_grid(Metric::Outage, &[mode], link, &rhos, samples, spec, workers)?[0]
                .iter()
                .map(|e| e.mean)
                .collect()
        }
    };
    if let Some(i) = values.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::OutageUnderflow { rho_db: grid[i] });
    }
    Ok(loglog_slope(&rhos, &values))
}
