//! Link parameters, correlated Rayleigh channel sampling and the end-to-end
//! SNR laws for the three relay CSI modes.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;

use crate::corrmat::{CMatrix, CorrelationModel, EigenSystem};
use crate::error::{Error, Result};

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Physical constants of the link. `gamma_th` is stored linear.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub eta: f64,
    pub theta: f64,
    pub tau: f64,
    pub d1: f64,
    pub d2: f64,
    pub n: usize,
    pub gamma_th: f64,
}

impl SystemParams {
    pub fn new(eta: f64, theta: f64, tau: f64, d1: f64, d2: f64, n: usize, gamma_th: f64) -> Result<Self> {
        let p = SystemParams {
            eta,
            theta,
            tau,
            d1,
            d2,
            n,
            gamma_th,
        };
        p.validate()?;
        Ok(p)
    }

    /// Same as [`SystemParams::new`] with the threshold given in dB.
    pub fn with_threshold_db(eta: f64, theta: f64, tau: f64, d1: f64, d2: f64, n: usize, gamma_th_db: f64) -> Result<Self> {
        Self::new(eta, theta, tau, d1, d2, n, db_to_linear(gamma_th_db))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::param("eta", format!("must lie in (0, 1], got {}", self.eta)));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::param("theta", format!("must lie in (0, 1), got {}", self.theta)));
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(Error::param("tau", format!("must be >= 0, got {}", self.tau)));
        }
        if !(self.d1 > 0.0 && self.d1.is_finite()) {
            return Err(Error::param("d1", format!("must be > 0, got {}", self.d1)));
        }
        if !(self.d2 > 0.0 && self.d2.is_finite()) {
            return Err(Error::param("d2", format!("must be > 0, got {}", self.d2)));
        }
        if self.n == 0 {
            return Err(Error::param("n", "antenna count must be >= 1"));
        }
        if !(self.gamma_th > 0.0 && self.gamma_th.is_finite()) {
            return Err(Error::param("gamma_th", format!("must be > 0, got {}", self.gamma_th)));
        }
        Ok(())
    }

    pub fn with_theta(&self, theta: f64) -> Result<Self> {
        let p = SystemParams { theta, ..*self };
        p.validate()?;
        Ok(p)
    }

    pub fn with_gamma_th(&self, gamma_th: f64) -> Result<Self> {
        let p = SystemParams { gamma_th, ..*self };
        p.validate()?;
        Ok(p)
    }

    pub fn gamma_th_db(&self) -> f64 {
        linear_to_db(self.gamma_th)
    }

    /// First-hop SNR scale `(1-θ)ρ / d1^τ`.
    pub fn m1(&self, rho: f64) -> f64 {
        (1.0 - self.theta) * rho / self.d1.powf(self.tau)
    }

    /// Second-hop SNR scale `ηθρ / (d1^τ d2^τ)`.
    pub fn n1(&self, rho: f64) -> f64 {
        self.eta * self.theta * rho / (self.d1.powf(self.tau) * self.d2.powf(self.tau))
    }
}

/// CSI available at the relay.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CsiMode {
    Instantaneous,
    Statistical,
    NoCsi,
}

impl CsiMode {
    pub const ALL: [CsiMode; 3] = [CsiMode::Instantaneous, CsiMode::Statistical, CsiMode::NoCsi];

    pub fn as_str(&self) -> &'static str {
        match self {
            CsiMode::Instantaneous => "instantaneous",
            CsiMode::Statistical => "statistical",
            CsiMode::NoCsi => "nocsi",
        }
    }
}

impl fmt::Display for CsiMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CsiMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "instantaneous" | "inst" => Ok(CsiMode::Instantaneous),
            "statistical" | "stat" => Ok(CsiMode::Statistical),
            "nocsi" | "no-csi" | "none" => Ok(CsiMode::NoCsi),
            other => Err(Error::param("mode", format!("unknown CSI mode `{other}`"))),
        }
    }
}

/// Parameters plus the decomposed correlation of both hops.
#[derive(Debug, Clone)]
pub struct Link {
    pub params: SystemParams,
    pub eig_r: EigenSystem,
    pub eig_t: EigenSystem,
    sqrt_r: CMatrix,
    sqrt_t: CMatrix,
}

impl Link {
    pub fn new(params: SystemParams, corr_r: &CorrelationModel, corr_t: &CorrelationModel, distinct_tol: f64) -> Result<Self> {
        Self::from_eigen(params, corr_r.eigen(distinct_tol)?, corr_t.eigen(distinct_tol)?)
    }

    pub fn from_eigen(params: SystemParams, eig_r: EigenSystem, eig_t: EigenSystem) -> Result<Self> {
        params.validate()?;
        for e in [&eig_r, &eig_t] {
            if e.n() != params.n {
                return Err(Error::DimensionMismatch {
                    expected: params.n,
                    got: e.n(),
                });
            }
        }
        Ok(Link {
            sqrt_r: eig_r.sqrt_matrix(),
            sqrt_t: eig_t.sqrt_matrix(),
            params,
            eig_r,
            eig_t,
        })
    }

    pub fn n(&self) -> usize {
        self.params.n
    }

    pub fn sqrt_r(&self) -> &CMatrix {
        &self.sqrt_r
    }

    pub fn sqrt_t(&self) -> &CMatrix {
        &self.sqrt_t
    }

    pub fn with_params(&self, params: SystemParams) -> Result<Self> {
        Self::from_eigen(params, self.eig_r.clone(), self.eig_t.clone())
    }
}

/// One fading realization.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSample {
    /// Receive-side channel `R_r^{1/2} h_w1` (column).
    pub h1: Vec<Complex64>,
    /// Transmit-side channel `h_w2 R_t^{1/2}` (row).
    pub h2: Vec<Complex64>,
    /// `U_rᴴ h_w1`.
    pub h1_eig: Vec<Complex64>,
    /// `h_w2 U_t`.
    pub h2_eig: Vec<Complex64>,
}

impl ChannelSample {
    pub fn zeros(n: usize) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); n];
        ChannelSample {
            h1: z.clone(),
            h2: z.clone(),
            h1_eig: z.clone(),
            h2_eig: z,
        }
    }

    /// Deterministic sample from explicit channel vectors; the eigen
    /// projections are filled from the whitened vectors implied by `link`.
    pub fn from_vectors(link: &Link, h1: Vec<Complex64>, h2: Vec<Complex64>) -> Result<Self> {
        let n = link.n();
        for v in [&h1, &h2] {
            if v.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: v.len(),
                });
            }
        }
        // h_w1 = U Λ^{-1/2} Uᴴ h1, so Uᴴ h_w1 = Λ^{-1/2} Uᴴ h1.
        let ur = link.eig_r.basis();
        let ut = link.eig_t.basis();
        let h1_eig = ur
            .adjoint()
            .mul_vec(&h1)
            .iter()
            .zip(link.eig_r.values())
            .map(|(z, l)| z / l.sqrt())
            .collect();
        let h2_eig = ut
            .vec_mul(&h2)
            .iter()
            .zip(link.eig_t.values())
            .map(|(z, s)| z / s.sqrt())
            .collect();
        Ok(ChannelSample { h1, h2, h1_eig, h2_eig })
    }

    pub fn h1_norm_sq(&self) -> f64 {
        self.h1.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn h2_norm_sq(&self) -> f64 {
        self.h2.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `|h2 h1|²`, the plain (unconjugated) row-by-column product.
    pub fn cross_gain(&self) -> f64 {
        self.h2.iter().zip(&self.h1).map(|(a, b)| a * b).sum::<Complex64>().norm_sqr()
    }

    pub fn gains(&self, link: &Link) -> Gains {
        Gains {
            x: self.h1_norm_sq(),
            y: self.h2_norm_sq(),
            cross: self.cross_gain(),
            a: link.eig_r.values()[0] * self.h1_eig[0].norm_sqr(),
            b: link.eig_t.values()[0] * self.h2_eig[0].norm_sqr(),
        }
    }
}

/// The scalar channel functionals that the SNR laws depend on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gains {
    /// `‖h1‖²`
    pub x: f64,
    /// `‖h2‖²`
    pub y: f64,
    /// `|h2 h1|²`
    pub cross: f64,
    /// `λ1 |h̃_w11|²`
    pub a: f64,
    /// `σ1 |h̃_w21|²`
    pub b: f64,
}

impl Gains {
    pub fn snr(&self, mode: CsiMode, p: &SystemParams, rho: f64) -> f64 {
        let m1 = p.m1(rho);
        let n1 = p.n1(rho);
        match mode {
            CsiMode::Instantaneous => {
                let g1 = m1 * self.x;
                let g2 = n1 * self.x * self.y;
                g1 * g2 / (g1 + g2 + 1.0)
            }
            CsiMode::Statistical => m1 * n1 * self.x * self.a * self.b / (n1 * self.x * self.b + m1 * self.a + 1.0),
            CsiMode::NoCsi => m1 * n1 * self.x * self.cross / (n1 * self.x * self.y + m1 * self.x + 1.0),
        }
    }
}

/// Standard complex Gaussian with unit variance, `CN(0, 1)`, from one
/// Marsaglia polar draw.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    loop {
        let u: f64 = rng.gen::<f64>() * 2.0 - 1.0;
        let v: f64 = rng.gen::<f64>() * 2.0 - 1.0;
        let s = u * u + v * v;
        if s > 0.0 && s < 1.0 {
            // Each component gets variance 1/2.
            let f = (-s.ln() / s).sqrt();
            return Complex64::new(u * f, v * f);
        }
    }
}

/// Fills `w1`, `w2` with independent `CN(0, 1)` entries.
pub fn draw_whitened<R: Rng + ?Sized>(rng: &mut R, w1: &mut [Complex64], w2: &mut [Complex64]) {
    for z in w1.iter_mut().chain(w2.iter_mut()) {
        *z = complex_gaussian(rng);
    }
}

/// Colors whitened vectors through `link` into `out`.
pub fn color_into(link: &Link, w1: &[Complex64], w2: &[Complex64], out: &mut ChannelSample) {
    let n = link.n();
    let sr = link.sqrt_r();
    let st = link.sqrt_t();
    let ur = link.eig_r.basis();
    let ut = link.eig_t.basis();
    for i in 0..n {
        let mut a = Complex64::new(0.0, 0.0);
        let mut b = Complex64::new(0.0, 0.0);
        let mut c = Complex64::new(0.0, 0.0);
        let mut d = Complex64::new(0.0, 0.0);
        for j in 0..n {
            a += sr[(i, j)] * w1[j];
            b += w2[j] * st[(j, i)];
            c += ur[(j, i)].conj() * w1[j];
            d += w2[j] * ut[(j, i)];
        }
        out.h1[i] = a;
        out.h2[i] = b;
        out.h1_eig[i] = c;
        out.h2_eig[i] = d;
    }
}

/// Draws a fresh realization into `out`, reusing its buffers.
pub fn sample_channel_into<R: Rng + ?Sized>(rng: &mut R, link: &Link, w1: &mut [Complex64], w2: &mut [Complex64], out: &mut ChannelSample) {
    draw_whitened(rng, w1, w2);
    color_into(link, w1, w2, out);
}

/// Draws one channel realization.
pub fn sample_channel<R: Rng + ?Sized>(rng: &mut R, link: &Link) -> ChannelSample {
    let n = link.n();
    let mut w1 = vec![Complex64::new(0.0, 0.0); n];
    let mut w2 = w1.clone();
    let mut out = ChannelSample::zeros(n);
    sample_channel_into(rng, link, &mut w1, &mut w2, &mut out);
    out
}

/// Normalized relay power-constraint factor `ω²`.
pub fn relay_gain_power(p: &SystemParams, h1_norm_sq: f64, rho: f64) -> f64 {
    let d = p.d1.powf(p.tau);
    let num = p.eta * p.theta * rho / d * h1_norm_sq;
    num / ((1.0 - p.theta) * rho / d * h1_norm_sq + 1.0)
}

/// End-to-end SNR with instantaneous CSI, evaluated in its unreduced form.
pub fn snr_instantaneous(p: &SystemParams, s: &ChannelSample, rho: f64) -> f64 {
    let d1t = p.d1.powf(p.tau);
    let d2t = p.d2.powf(p.tau);
    let x = s.h1_norm_sq();
    let y = s.h2_norm_sq();
    let num = p.eta * p.theta * (1.0 - p.theta) * rho * rho / (d1t * d1t * d2t) * y * x * x;
    let den = p.eta * p.theta * rho / (d1t * d2t) * y * x + (1.0 - p.theta) * rho / d1t * x + 1.0;
    num / den
}

/// End-to-end SNR with the rank-1 statistical precoder along the principal eigenvectors.
pub fn snr_statistical(p: &SystemParams, s: &ChannelSample, eig_r: &EigenSystem, eig_t: &EigenSystem, rho: f64) -> f64 {
    let d1t = p.d1.powf(p.tau);
    let d2t = p.d2.powf(p.tau);
    let x = s.h1_norm_sq();
    let a = eig_r.values()[0] * s.h1_eig[0].norm_sqr();
    let b = eig_t.values()[0] * s.h2_eig[0].norm_sqr();
    let num = p.eta * p.theta * (1.0 - p.theta) * rho * rho / (d1t * d1t * d2t) * x * a * b;
    let den = p.eta * p.theta * rho / (d1t * d2t) * x * b + (1.0 - p.theta) * rho / d1t * a + 1.0;
    num / den
}

/// End-to-end SNR when the relay forwards with a scaled identity.
pub fn snr_no_csi(p: &SystemParams, s: &ChannelSample, rho: f64) -> f64 {
    let d1t = p.d1.powf(p.tau);
    let d2t = p.d2.powf(p.tau);
    let x = s.h1_norm_sq();
    let y = s.h2_norm_sq();
    let num = p.eta * p.theta * (1.0 - p.theta) * rho * rho / (d1t * d1t * d2t) * x * s.cross_gain();
    let den = p.eta * p.theta * rho / (d1t * d2t) * y * x + (1.0 - p.theta) * rho / d1t * x + 1.0;
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corrmat::{exp_correlation, DEFAULT_DISTINCT_TOL};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_params() -> SystemParams {
        SystemParams::new(1.0, 0.5, 2.5, 1.0, 1.0, 3, 1.0).unwrap()
    }

    fn reference_link() -> Link {
        let p = SystemParams::with_threshold_db(0.8, 0.5, 2.5, 3.0, 3.0, 3, 0.0).unwrap();
        Link::new(p, &exp_correlation(3, 0.5).unwrap(), &exp_correlation(3, 0.8).unwrap(), DEFAULT_DISTINCT_TOL).unwrap()
    }

    fn e1(n: usize) -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        v[0] = Complex64::new(1.0, 0.0);
        v
    }

    #[test]
    fn params_validation() {
        assert!(SystemParams::new(0.0, 0.5, 2.0, 1.0, 1.0, 2, 1.0).is_err());
        assert!(SystemParams::new(1.1, 0.5, 2.0, 1.0, 1.0, 2, 1.0).is_err());
        assert!(SystemParams::new(1.0, 1.0, 2.0, 1.0, 1.0, 2, 1.0).is_err());
        assert!(SystemParams::new(1.0, 0.5, -1.0, 1.0, 1.0, 2, 1.0).is_err());
        assert!(SystemParams::new(1.0, 0.5, 2.0, 0.0, 1.0, 2, 1.0).is_err());
        assert!(SystemParams::new(1.0, 0.5, 2.0, 1.0, 1.0, 0, 1.0).is_err());
        assert!(SystemParams::new(1.0, 0.5, 2.0, 1.0, 1.0, 2, 0.0).is_err());
        let p = SystemParams::with_threshold_db(1.0, 0.5, 2.0, 1.0, 1.0, 2, 10.0).unwrap();
        assert!((p.gamma_th - 10.0).abs() < 1e-12);
        assert!((p.gamma_th_db() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn mode_names_round_trip() {
        for m in CsiMode::ALL {
            assert_eq!(m.as_str().parse::<CsiMode>().unwrap(), m);
        }
        assert!("partial".parse::<CsiMode>().is_err());
    }

    #[test]
    fn relay_gain_examples() {
        let p = SystemParams::new(1.0, 0.5, 2.0, 1.0, 1.0, 1, 1.0).unwrap();
        assert!((relay_gain_power(&p, 1.0, 1.0) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(relay_gain_power(&p, 0.0, 1.0), 0.0);
        let lim = p.eta * p.theta / (1.0 - p.theta);
        assert!((relay_gain_power(&p, 1.0, 1e15) - lim).abs() < 1e-12);
    }

    #[test]
    fn aligned_unit_channels() {
        let p = unit_params();
        let id = crate::corrmat::CorrelationModel::identity(3).unwrap();
        let link = Link::new(p, &id, &id, DEFAULT_DISTINCT_TOL).unwrap();
        let s = ChannelSample::from_vectors(&link, e1(3), e1(3)).unwrap();
        assert!((snr_instantaneous(&p, &s, 1.0) - 0.125).abs() < 1e-15);
        assert!((snr_no_csi(&p, &s, 1.0) - 0.125).abs() < 1e-15);
        // The guard perturbs the spectrum by ~1e-6.
        assert!((snr_statistical(&p, &s, &link.eig_r, &link.eig_t, 1.0) - 0.125).abs() < 1e-6);
        let zero = ChannelSample::from_vectors(&link, vec![Complex64::new(0.0, 0.0); 3], e1(3)).unwrap();
        assert_eq!(snr_instantaneous(&p, &zero, 1.0), 0.0);
        let mut h2 = vec![Complex64::new(0.0, 0.0); 3];
        h2[1] = Complex64::new(1.0, 0.0);
        let orth = ChannelSample::from_vectors(&link, e1(3), h2).unwrap();
        assert_eq!(snr_no_csi(&p, &orth, 1.0), 0.0);
    }

    #[test]
    fn sample_moments() {
        let link = reference_link();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 200_000;
        let (mut s1, mut s2, mut sa) = (0.0, 0.0, 0.0);
        let (mut q1, mut qa) = (0.0, 0.0);
        for _ in 0..n {
            let s = sample_channel(&mut rng, &link);
            let x = s.h1_norm_sq();
            let a = link.eig_r.values()[0] * s.h1_eig[0].norm_sqr();
            s1 += x;
            q1 += x * x;
            s2 += s.h2_norm_sq();
            sa += a;
            qa += a * a;
        }
        let nf = n as f64;
        let se1 = ((q1 / nf - (s1 / nf).powi(2)) / nf).sqrt();
        let sea = ((qa / nf - (sa / nf).powi(2)) / nf).sqrt();
        assert!((s1 / nf - 3.0).abs() < 4.0 * se1);
        assert!((s2 / nf - 3.0).abs() < 0.05);
        assert!((sa / nf - link.eig_r.values()[0]).abs() < 4.0 * sea);
    }

    #[test]
    fn eigen_projection_identity() {
        let link = reference_link();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let s = sample_channel(&mut rng, &link);
            let x: f64 = s.h1_eig.iter().zip(link.eig_r.values()).map(|(z, l)| l * z.norm_sqr()).sum();
            let y: f64 = s.h2_eig.iter().zip(link.eig_t.values()).map(|(z, l)| l * z.norm_sqr()).sum();
            assert!((x - s.h1_norm_sq()).abs() <= 1e-10 * x.max(1.0));
            assert!((y - s.h2_norm_sq()).abs() <= 1e-10 * y.max(1.0));
            assert!(s.h1.iter().chain(&s.h2).all(|z| z.re.is_finite() && z.im.is_finite()));
        }
    }

    #[test]
    fn from_vectors_recovers_projection() {
        let link = reference_link();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = sample_channel(&mut rng, &link);
        let t = ChannelSample::from_vectors(&link, s.h1.clone(), s.h2.clone()).unwrap();
        for (a, b) in s.h1_eig.iter().zip(&t.h1_eig).chain(s.h2_eig.iter().zip(&t.h2_eig)) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn snr_laws_agree_and_order(
            seed in any::<u64>(),
            eta in 0.05f64..1.0,
            theta in 0.01f64..0.99,
            tau in 0.0f64..4.0,
            d1 in 0.5f64..10.0,
            d2 in 0.5f64..10.0,
            rho_db in -10.0f64..60.0,
        ) {
            let base = reference_link();
            let p = SystemParams::new(eta, theta, tau, d1, d2, 3, 1.0).unwrap();
            let link = base.with_params(p).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rho = db_to_linear(rho_db);
            for _ in 0..50 {
                let s = sample_channel(&mut rng, &link);
                let g = s.gains(&link);
                let gi = snr_instantaneous(&p, &s, rho);
                let gs = snr_statistical(&p, &s, &link.eig_r, &link.eig_t, rho);
                let gn = snr_no_csi(&p, &s, rho);
                prop_assert!(((gi - g.snr(CsiMode::Instantaneous, &p, rho)) / gi).abs() <= 1e-12);
                prop_assert!(((gs - g.snr(CsiMode::Statistical, &p, rho)) / gs).abs() <= 1e-12);
                prop_assert!(((gn - g.snr(CsiMode::NoCsi, &p, rho)) / gn).abs() <= 1e-12);
                prop_assert!(gs <= gi * (1.0 + 1e-12));
                prop_assert!(gn <= gi * (1.0 + 1e-12));
                let up = rho * 1.01;
                prop_assert!(snr_instantaneous(&p, &s, up) > gi);
                prop_assert!(snr_statistical(&p, &s, &link.eig_r, &link.eig_t, up) > gs);
                prop_assert!(snr_no_csi(&p, &s, up) > gn);
            }
        }
    }
}
