//! The acceptance suite: twelve numbered checks at the reference
//! configuration (three antennas, `r_rx = 0.5`, `r_tx = 0.8`, `η = 0.8`,
//! `θ = 0.5`, `τ = 2.5`, `d1 = d2 = 3`, `γ_th = 0 dB`).

use std::fmt;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{diversity_slope, lemma1_residual, schur_ordering_check, Evaluator, MajorizationPair, SchurClaim};
use crate::analytic::{
    capacity_ub_inst, capacity_ub_stat, optimize_theta, outage_exact_inst, outage_exact_stat, outage_highsnr_inst,
    outage_highsnr_stat, outage_lb_inst, outage_lb_inst_with_leading_factor,
};
use crate::channel::{db_to_linear, sample_channel, snr_instantaneous, CsiMode, Link, SystemParams};
use crate::cli::{run_sweep, Grid, Method, SweepConfig};
use crate::corrmat::{exp_correlation, DEFAULT_DISTINCT_TOL};
use crate::error::{Error, Result};
use crate::mc::{estimate_grid, estimate_outage, Metric, StreamSpec};
use crate::quad::Quadrature;
use crate::specfun::{bessel_k, digamma_int, expint_ei, k0, k1};
use crate::{oracle, specfun};

/// Sample budget of the suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    /// Reduced Monte Carlo counts for a quick smoke run.
    Fast,
    /// The sample counts the tolerances were set for.
    Full,
}

impl Level {
    fn pick(&self, fast: u64, full: u64) -> u64 {
        match self {
            Level::Fast => fast,
            Level::Full => full,
        }
    }
}

impl std::str::FromStr for Level {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fast" => Ok(Level::Fast),
            "full" => Ok(Level::Full),
            other => Err(Error::param("level", format!("expected fast or full, got `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub measured: String,
    pub threshold: String,
    pub elapsed: Duration,
}

impl fmt::Display for CriterionResult {
    /// `id<TAB>name<TAB>PASS|FAIL<TAB>measured<TAB>threshold`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}\t{}\t{}",
            self.id,
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.measured,
            self.threshold
        )
    }
}

pub const CRITERIA: [(u8, &str); 12] = [
    (1, "snr-identity"),
    (2, "exact-vs-mc-inst"),
    (3, "lb-limit"),
    (4, "high-snr"),
    (5, "diversity"),
    (6, "capacity-bounds"),
    (7, "stat-exact-vs-mc"),
    (8, "schur"),
    (9, "cofactor-identity"),
    (10, "special-functions"),
    (11, "theta-opt"),
    (12, "determinism"),
];

/// Parameters of the reference configuration.
pub fn reference_params() -> SystemParams {
    SystemParams::with_threshold_db(0.8, 0.5, 2.5, 3.0, 3.0, 3, 0.0).expect("valid reference parameters")
}

/// Link of the reference configuration.
pub fn reference_link() -> Link {
    Link::new(
        reference_params(),
        &exp_correlation(3, 0.5).expect("valid"),
        &exp_correlation(3, 0.8).expect("valid"),
        DEFAULT_DISTINCT_TOL,
    )
    .expect("valid reference link")
}

struct Outcome {
    passed: bool,
    measured: String,
    threshold: String,
}

fn outcome(passed: bool, measured: impl Into<String>, threshold: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        measured: measured.into(),
        threshold: threshold.into(),
    }
}

/// Runs one criterion. Evaluation errors count as failures.
pub fn run_criterion(id: u8, level: Level) -> CriterionResult {
    let name = CRITERIA.iter().find(|c| c.0 == id).map(|c| c.1).unwrap_or("unknown");
    let start = Instant::now();
    let res = match id {
        1 => snr_identity(),
        2 => exact_vs_mc_inst(level),
        3 => lb_limit(),
        4 => high_snr(),
        5 => diversity(level),
        6 => capacity_bounds(level),
        7 => stat_exact_vs_mc(level),
        8 => schur(level),
        9 => cofactor_identity(),
        10 => special_functions(),
        11 => theta_opt(),
        12 => determinism(level),
        _ => Err(Error::param("criterion", format!("no criterion {id}"))),
    };
    let elapsed = start.elapsed();
    let o = res.unwrap_or_else(|e| outcome(false, format!("error: {e}"), "-"));
    CriterionResult {
        id,
        name,
        passed: o.passed,
        measured: o.measured,
        threshold: o.threshold,
        elapsed,
    }
}

/// Runs every criterion in order, handing each result to `report` as it
/// completes.
pub fn run_all(level: Level, mut report: impl FnMut(&CriterionResult)) -> Vec<CriterionResult> {
    CRITERIA
        .iter()
        .map(|&(id, _)| {
            let r = run_criterion(id, level);
            report(&r);
            r
        })
        .collect()
}

fn within_time(limit: Duration, t: Instant) -> (bool, String) {
    let e = t.elapsed();
    (e <= limit, format!("{:.2}s", e.as_secs_f64()))
}

fn snr_identity() -> Result<Outcome> {
    let t = Instant::now();
    let link = reference_link();
    let p = link.params;
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let rho = db_to_linear(rng.gen_range(-10.0..60.0));
        let s = sample_channel(&mut rng, &link);
        let unreduced = snr_instantaneous(&p, &s, rho);
        let reduced = s.gains(&link).snr(CsiMode::Instantaneous, &p, rho);
        worst = worst.max(((unreduced - reduced) / reduced).abs());
    }
    let (fast, secs) = within_time(Duration::from_secs(1), t);
    Ok(outcome(
        worst <= 1e-12 && fast,
        format!("max_rel_err={worst:.3e} time={secs}"),
        "rel_err<=1e-12 time<1s",
    ))
}

fn exact_vs_mc_inst(level: Level) -> Result<Outcome> {
    let t = Instant::now();
    let link = reference_link();
    let n = level.pick(100_000, 1_000_000);
    let q = Quadrature::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for (k, db) in [10.0, 20.0, 30.0].into_iter().enumerate() {
        let rho = db_to_linear(db);
        let exact = outage_exact_inst(&link.params, link.eig_r.values(), link.eig_t.values(), rho, &q)?;
        let mc = estimate_outage(CsiMode::Instantaneous, &link, rho, n, StreamSpec::new(202, k as u64), 1)?;
        let z = (exact - mc.mean).abs() / mc.stderr;
        ok &= z <= 4.0;
        parts.push(format!("{db}dB:z={z:.2}"));
    }
    let (fast, secs) = within_time(Duration::from_secs(120), t);
    parts.push(format!("time={secs}"));
    Ok(outcome(ok && fast, parts.join(" "), format!("|exact-mc|<=4*stderr n={n} time<2min")))
}

/// Largest `|lower bound|` as `γ_th → 0` when the double sum carries
/// `factor` in front; the bound proper has factor 1.
pub fn lb_limit_residual(factor: f64) -> Result<f64> {
    let link = reference_link();
    let p = link.params.with_gamma_th(1e-12)?;
    let mut worst: f64 = 0.0;
    for db in [0.0, 20.0, 40.0] {
        let raw = outage_lb_inst_with_leading_factor(&p, link.eig_r.values(), link.eig_t.values(), db_to_linear(db), factor)?;
        worst = worst.max(raw.abs());
    }
    Ok(worst)
}

fn lb_limit() -> Result<Outcome> {
    let link = reference_link();
    let q = Quadrature::default();
    let mut ordered = true;
    let mut min_gap = f64::INFINITY;
    for k in 0..=8 {
        let rho = db_to_linear(5.0 * k as f64);
        let (r, t) = (link.eig_r.values(), link.eig_t.values());
        let lb = outage_lb_inst(&link.params, r, t, rho)?;
        let exact = outage_exact_inst(&link.params, r, t, rho, &q)?;
        ordered &= lb <= exact;
        min_gap = min_gap.min(exact - lb);
    }
    let limit = lb_limit_residual(1.0)?;
    Ok(outcome(
        ordered && limit <= 1e-6,
        format!("min(exact-lb)={min_gap:.3e} |lb(gamma_th=1e-12)|={limit:.3e}"),
        "lb<=exact on 0..40dB; |lb|<=1e-6 as gamma_th->0",
    ))
}

fn high_snr() -> Result<Outcome> {
    let t = Instant::now();
    let link = reference_link();
    let (p, r, s) = (&link.params, link.eig_r.values(), link.eig_t.values());
    let rho = db_to_linear(55.0);
    let q = Quadrature::default();
    let inst = outage_highsnr_inst(p, r, s, rho)?.value / outage_exact_inst(p, r, s, rho, &q)?;
    let stat = outage_highsnr_stat(p, r, s, rho)?.value / outage_exact_stat(p, r, s, rho, &q)?.value;
    let (fast, secs) = within_time(Duration::from_secs(60), t);
    let ok = (0.95..=1.05).contains(&inst) && (0.9..=1.1).contains(&stat) && fast;
    Ok(outcome(
        ok,
        format!("inst_ratio={inst:.4} stat_ratio={stat:.4} time={secs}"),
        "inst in [0.95,1.05] stat in [0.9,1.1] at 55dB time<1min",
    ))
}

fn diversity(level: Level) -> Result<Outcome> {
    let link = reference_link();
    let q = Evaluator::Analytic(Quadrature::default());
    let inst = diversity_slope(CsiMode::Instantaneous, &link, 45.0, 55.0, q)?;
    let stat = diversity_slope(CsiMode::Statistical, &link, 45.0, 55.0, q)?;
    let n = level.pick(1_000_000, 10_000_000);
    let mc = Evaluator::MonteCarlo {
        samples: n,
        spec: StreamSpec::new(505, 0),
        workers: 1,
    };
    let none = diversity_slope(CsiMode::NoCsi, &link, 30.0, 40.0, mc)?;
    let ok = (-3.1..=-2.5).contains(&inst) && (-1.15..=-0.85).contains(&stat) && (-1.3..=-0.7).contains(&none);
    Ok(outcome(
        ok,
        format!("inst={inst:.3} stat={stat:.3} nocsi_mc={none:.3}"),
        format!("inst in [-3.1,-2.5] stat in [-1.15,-0.85] nocsi in [-1.3,-0.7] (n={n})"),
    ))
}

fn capacity_bounds(level: Level) -> Result<Outcome> {
    let link = reference_link();
    let (p, r, s) = (&link.params, link.eig_r.values(), link.eig_t.values());
    let q = Quadrature::default();
    let n = level.pick(100_000, 1_000_000);
    let dbs = [10.0, 20.0, 30.0];
    let rhos: Vec<f64> = dbs.iter().map(|&d| db_to_linear(d)).collect();
    let est = estimate_grid(Metric::Capacity, &CsiMode::ALL, &link, &rhos, n, StreamSpec::new(606, 0), 1)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for (k, (&db, &rho)) in dbs.iter().zip(&rhos).enumerate() {
        let (ci, cs, cn) = (est[0][k], est[1][k], est[2][k]);
        let ubi = capacity_ub_inst(p, r, s, rho, &q)?;
        let ubs = capacity_ub_stat(p, r, s, rho, &q)?;
        let bound_ok = ubi >= ci.mean - 3.0 * ci.stderr && ubs >= cs.mean - 3.0 * cs.stderr;
        let order_ok = ci.mean >= cs.mean && cs.mean >= cn.mean;
        ok &= bound_ok && order_ok;
        parts.push(format!(
            "{db}dB:ub_i={ubi:.4}/C_I={:.4} ub_s={ubs:.4}/C_S={:.4} C_N={:.4}",
            ci.mean, cs.mean, cn.mean
        ));
    }
    Ok(outcome(ok, parts.join(" "), format!("ub>=mc-3*stderr; C_I>=C_S>=C_N (n={n})")))
}

fn stat_exact_vs_mc(level: Level) -> Result<Outcome> {
    let link = reference_link();
    let (p, r, s) = (&link.params, link.eig_r.values(), link.eig_t.values());
    let q = Quadrature::default();
    let n = level.pick(100_000, 1_000_000);
    let mut ok = true;
    let mut parts = Vec::new();
    for (k, db) in [10.0, 20.0, 30.0].into_iter().enumerate() {
        let rho = db_to_linear(db);
        let exact = outage_exact_stat(p, r, s, rho, &q)?;
        let mc = estimate_outage(CsiMode::Statistical, &link, rho, n, StreamSpec::new(707, k as u64), 1)?;
        let z = (exact.value - mc.mean).abs() / mc.stderr;
        ok &= z <= 4.0;
        let printed = match &exact.printed_form_error {
            Some(e) => format!("printed_form=failed({e})"),
            None => format!("printed_form_dev={:.3e}", exact.discrepancy()),
        };
        parts.push(format!("{db}dB:z={z:.2} {printed}"));
    }
    Ok(outcome(ok, parts.join(" "), format!("|direct-mc|<=4*stderr n={n}; printed form logged")))
}

fn schur(level: Level) -> Result<Outcome> {
    let p = reference_params();
    let rx = reference_link().eig_r.values().to_vec();
    let tx = reference_link().eig_t.values().to_vec();
    let n = level.pick(50_000, 200_000);
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut ok = true;
    let mut parts = Vec::new();
    for (ci, claim) in SchurClaim::ALL.into_iter().enumerate() {
        let mut counts = [0usize; 3];
        for k in 0..20u64 {
            let pair = MajorizationPair::random(&mut rng, 3, claim == SchurClaim::RxStatEqualTop, 0.02)?;
            let other = if matches!(claim, SchurClaim::TxInst | SchurClaim::TxStat) { &rx } else { &tx };
            let spec = StreamSpec::new(808, ci as u64 * 100 + k);
            let out = schur_ordering_check(claim, &pair, other, &p, db_to_linear(30.0), n, spec, 1)?;
            counts[out.verdict as usize] += 1;
        }
        let [consistent, violated, inconclusive] = counts;
        ok &= match claim {
            SchurClaim::RxInstHigh | SchurClaim::RxInstLow => consistent == 20,
            _ => violated == 0,
        };
        parts.push(format!("{}:{consistent}/{violated}/{inconclusive}", claim.as_str()));
    }
    Ok(outcome(
        ok,
        format!("consistent/violated/inconclusive {}", parts.join(" ")),
        format!("tx-inst,tx-stat,rx-stat-equal-top never violated; rx-inst-* all consistent (n={n})"),
    ))
}

fn cofactor_identity() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let mut worst: f64 = 0.0;
    let mut sets = 0;
    while sets < 200 {
        let n = rng.gen_range(2..=6);
        let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..4.0)).collect();
        v.sort_by(|a, b| b.total_cmp(a));
        if v.windows(2).any(|w| w[0] - w[1] < 1e-3) {
            continue;
        }
        for l in 1..n {
            worst = worst.max(lemma1_residual(&v, l)?.relative());
        }
        sets += 1;
    }
    Ok(outcome(worst <= 1e-9, format!("max_scaled_residual={worst:.3e}"), "<=1e-9 over 200 sets"))
}

fn special_functions() -> Result<Outcome> {
    let checks = [
        ("K1(1)", k1(1.0), oracle::bessel_k_integral(1.0, 1.0)),
        ("K0(1)", k0(1.0), oracle::bessel_k_integral(0.0, 1.0)),
        ("K1(1)'", bessel_k(1, 1.0)?, 0.601_907_230_197_234_6),
        ("K0(1)'", k0(1.0), 0.421_024_438_240_708_3),
        ("Ei(-1)", expint_ei(-1.0)?, oracle::ei_negative(-1.0)),
        ("Ei(-1)'", expint_ei(-1.0)?, -0.219_383_934_395_520_27),
        ("psi(1)", digamma_int(1)?, oracle::digamma_int(1)),
    ];
    let mut worst: f64 = 0.0;
    for (_, got, want) in checks {
        worst = worst.max((got - want).abs());
    }
    let q = Quadrature::default();
    let mut kernel: f64 = 0.0;
    for z in [0.01, 0.1, 1.0, 10.0, 100.0] {
        let a = specfun::capacity_kernel(z, &q)?;
        let b = oracle::capacity_kernel(z);
        kernel = kernel.max(((a - b) / b).abs());
    }
    Ok(outcome(
        worst <= 1e-10 && kernel <= 1e-8,
        format!("max_abs_err={worst:.3e} kernel_rel_diff={kernel:.3e}"),
        "<=1e-10; kernel<=1e-8",
    ))
}

fn theta_opt() -> Result<Outcome> {
    let link = reference_link();
    let (p, r, s) = (&link.params, link.eig_r.values(), link.eig_t.values());
    let q = Quadrature::default();
    let rho = db_to_linear(30.0);
    let i = optimize_theta(CsiMode::Instantaneous, p, r, s, rho, &q)?;
    let st = optimize_theta(CsiMode::Statistical, p, r, s, rho, &q)?;
    let gap = (st.value - st.value_at_half) / st.value_at_half;
    Ok(outcome(
        i.value >= i.value_at_half && st.value >= st.value_at_half,
        format!(
            "inst theta*={:.4} gain={:.3e}; stat theta*={:.4} rel_gap={gap:.3e}",
            i.theta,
            i.value - i.value_at_half,
            st.theta
        ),
        "value(theta*)>=value(0.5)",
    ))
}

fn determinism(level: Level) -> Result<Outcome> {
    let config = SweepConfig {
        method: Method::Mc,
        metric: Metric::Outage,
        rho_db: Grid {
            start: 0.0,
            stop: 40.0,
            step: 10.0,
        },
        samples: level.pick(3 * crate::mc::CHUNK + 17, 1_000_000),
        seed: 1212,
        ..SweepConfig::default()
    };
    let run = |workers: usize| -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        run_sweep(&SweepConfig { workers, ..config.clone() }, &mut buf, &mut std::io::sink())?;
        Ok(buf)
    };
    let (a, b) = (run(1)?, run(8)?);
    Ok(outcome(
        a == b,
        format!("bytes={} identical={}", a.len(), a == b),
        "byte-identical CSV for 1 and 8 workers",
    ))
}
