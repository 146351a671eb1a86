//! Monte Carlo estimation of outage probability and ergodic capacity.
//!
//! Samples are generated in fixed-size chunks; chunk `k` of substream `s`
//! always draws from the same ChaCha8 position, and chunk results are merged
//! in index order. The estimate therefore does not depend on the worker count.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{color_into, draw_whitened, ChannelSample, CsiMode, Gains, Link};
use crate::error::{Error, Result};

/// Samples per chunk; the unit of work and of random-stream positioning.
pub const CHUNK: u64 = 65_536;

/// Smallest sample count accepted by the estimators.
pub const MIN_SAMPLES: u64 = 1000;

/// Random stream identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamSpec {
    pub seed: u64,
    pub substream: u64,
}

impl StreamSpec {
    pub fn new(seed: u64, substream: u64) -> Self {
        StreamSpec { seed, substream }
    }

    /// Generator positioned at the start of chunk `chunk`.
    pub fn chunk_rng(&self, chunk: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.substream);
        // 2^40 words per chunk, far more than any chunk consumes.
        rng.set_word_pos((chunk as u128) << 40);
        rng
    }
}

/// Monte Carlo output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: u64,
    pub seed: u64,
}

/// Which performance measure a sample contributes to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Outage,
    Capacity,
}

impl Metric {
    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::Outage => "outage",
            Metric::Capacity => "capacity",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "outage" => Ok(Metric::Outage),
            "capacity" => Ok(Metric::Capacity),
            other => Err(Error::param("metric", format!("unknown metric `{other}`"))),
        }
    }
}

/// Running count, mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub n: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }

    pub fn estimate(&self, seed: u64) -> Estimate {
        Estimate {
            mean: self.mean,
            stderr: self.stderr(),
            n: self.n,
            seed,
        }
    }

    /// Outage-style estimate with the binomial standard error.
    pub fn binomial_estimate(&self, seed: u64) -> Estimate {
        let p = self.mean;
        let stderr = if self.n == 0 { 0.0 } else { (p * (1.0 - p) / self.n as f64).sqrt() };
        Estimate {
            mean: p,
            stderr,
            n: self.n,
            seed,
        }
    }
}

/// Results that can be combined across chunks.
pub trait Accumulate {
    fn merge(&mut self, other: &Self);
}

impl Accumulate for Moments {
    fn merge(&mut self, other: &Self) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        let nf = n as f64;
        self.mean += d * other.n as f64 / nf;
        self.m2 += other.m2 + d * d * self.n as f64 * other.n as f64 / nf;
        self.n = n;
    }
}

impl<T: Accumulate> Accumulate for Vec<T> {
    fn merge(&mut self, other: &Self) {
        assert_eq!(self.len(), other.len(), "accumulator shapes differ");
        for (a, b) in self.iter_mut().zip(other) {
            a.merge(b);
        }
    }
}

/// Runs `task(rng, count)` over `n` samples split into [`CHUNK`]-sized
/// pieces on a pool of `workers` threads, merging results in chunk order.
pub fn run_parallel<T, F>(n: u64, workers: usize, spec: StreamSpec, task: F) -> Result<T>
where
    T: Accumulate + Send,
    F: Fn(&mut ChaCha8Rng, u64) -> T + Sync,
{
    if workers == 0 {
        return Err(Error::param("workers", "must be >= 1"));
    }
    if n == 0 {
        return Err(Error::param("samples", "must be >= 1"));
    }
    let chunks = n.div_ceil(CHUNK);
    let run_chunk = |k: u64| {
        let count = CHUNK.min(n - k * CHUNK);
        let mut rng = spec.chunk_rng(k);
        task(&mut rng, count)
    };
    let parts: Vec<T> = if workers == 1 {
        (0..chunks).map(run_chunk).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Unsupported(format!("thread pool: {e}")))?;
        pool.install(|| (0..chunks).into_par_iter().map(run_chunk).collect())
    };
    let mut iter = parts.into_iter();
    let mut acc = iter.next().expect("at least one chunk");
    for p in iter {
        acc.merge(&p);
    }
    Ok(acc)
}

/// Runs `visit(gains)` on `n` common channel draws of `link`.
fn for_each_gains<T, F, I>(link: &Link, n: u64, workers: usize, spec: StreamSpec, init: I, visit: F) -> Result<T>
where
    T: Accumulate + Send,
    I: Fn() -> T + Sync,
    F: Fn(&mut T, &Gains) + Sync,
{
    let dim = link.n();
    run_parallel(n, workers, spec, |rng, count| {
        let mut acc = init();
        let mut w1 = vec![Complex64::new(0.0, 0.0); dim];
        let mut w2 = w1.clone();
        let mut s = ChannelSample::zeros(dim);
        for _ in 0..count {
            draw_whitened(rng, &mut w1, &mut w2);
            color_into(link, &w1, &w2, &mut s);
            visit(&mut acc, &s.gains(link));
        }
        acc
    })
}

fn check_samples(n: u64) -> Result<()> {
    if n < MIN_SAMPLES {
        return Err(Error::param("samples", format!("need at least {MIN_SAMPLES}, got {n}")));
    }
    Ok(())
}

/// Per-sample contribution of one metric at one SNR.
pub fn metric_value(metric: Metric, mode: CsiMode, g: &Gains, link: &Link, rho: f64) -> f64 {
    let snr = g.snr(mode, &link.params, rho);
    match metric {
        Metric::Outage => {
            if snr < link.params.gamma_th {
                1.0
            } else {
                0.0
            }
        }
        Metric::Capacity => 0.5 * snr.ln_1p() / std::f64::consts::LN_2,
    }
}

/// Estimates for every `(mode, rho)` pair from one shared set of channel
/// draws (common random numbers). Indexed `[mode][rho]`.
pub fn estimate_grid(
    metric: Metric,
    modes: &[CsiMode],
    link: &Link,
    rhos: &[f64],
    n: u64,
    spec: StreamSpec,
    workers: usize,
) -> Result<Vec<Vec<Estimate>>> {
    check_samples(n)?;
    if let Some(r) = rhos.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
        return Err(Error::param("rho", format!("must be > 0, got {r}")));
    }
    let cells = modes.len() * rhos.len();
    let moments = for_each_gains(
        link,
        n,
        workers,
        spec,
        || vec![Moments::default(); cells],
        |acc, g| {
            for (mi, &mode) in modes.iter().enumerate() {
                for (ri, &rho) in rhos.iter().enumerate() {
                    acc[mi * rhos.len() + ri].push(metric_value(metric, mode, g, link, rho));
                }
            }
        },
    )?;
    Ok(modes
        .iter()
        .enumerate()
        .map(|(mi, _)| {
            (0..rhos.len())
                .map(|ri| {
                    let m = &moments[mi * rhos.len() + ri];
                    match metric {
                        Metric::Outage => m.binomial_estimate(spec.seed),
                        Metric::Capacity => m.estimate(spec.seed),
                    }
                })
                .collect()
        })
        .collect())
}

/// Fraction of draws whose end-to-end SNR falls below `gamma_th`.
pub fn estimate_outage(mode: CsiMode, link: &Link, rho: f64, n: u64, spec: StreamSpec, workers: usize) -> Result<Estimate> {
    Ok(estimate_grid(Metric::Outage, &[mode], link, &[rho], n, spec, workers)?[0][0])
}

/// Mean of `½ log2(1 + γ)` over the draws.
pub fn estimate_capacity(mode: CsiMode, link: &Link, rho: f64, n: u64, spec: StreamSpec, workers: usize) -> Result<Estimate> {
    Ok(estimate_grid(Metric::Capacity, &[mode], link, &[rho], n, spec, workers)?[0][0])
}

/// `E[C(link_a) - C(link_b)]` with both links driven by the same whitened
/// draws, so the difference has much smaller variance than either mean.
pub fn estimate_capacity_difference(
    mode: CsiMode,
    link_a: &Link,
    link_b: &Link,
    rho: f64,
    n: u64,
    spec: StreamSpec,
    workers: usize,
) -> Result<Estimate> {
    check_samples(n)?;
    if link_a.n() != link_b.n() {
        return Err(Error::DimensionMismatch {
            expected: link_a.n(),
            got: link_b.n(),
        });
    }
    let dim = link_a.n();
    let m = run_parallel(n, workers, spec, |rng, count| {
        let mut acc = Moments::default();
        let mut w1 = vec![Complex64::new(0.0, 0.0); dim];
        let mut w2 = w1.clone();
        let mut sa = ChannelSample::zeros(dim);
        let mut sb = ChannelSample::zeros(dim);
        for _ in 0..count {
            draw_whitened(rng, &mut w1, &mut w2);
            color_into(link_a, &w1, &w2, &mut sa);
            color_into(link_b, &w1, &w2, &mut sb);
            let ca = metric_value(Metric::Capacity, mode, &sa.gains(link_a), link_a, rho);
            let cb = metric_value(Metric::Capacity, mode, &sb.gains(link_b), link_b, rho);
            acc.push(ca - cb);
        }
        acc
    })?;
    Ok(m.estimate(spec.seed))
}
