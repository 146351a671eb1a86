//! Globally adaptive Gauss–Kronrod (10/21-point) quadrature.
//!
//! Intervals are kept in a max-heap keyed by their error estimate and the
//! worst one is bisected until the total error meets the tolerance or the
//! subdivision budget runs out. Semi-infinite ranges are mapped onto `[0, 1)`
//! with `x = lower + t / (1 - t)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Tolerances and subdivision budget for one adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_subdivisions: 60,
        }
    }
}

impl Quadrature {
    pub fn new(rel_tol: f64, abs_tol: f64, max_subdivisions: usize) -> Result<Self> {
        let q = Quadrature {
            rel_tol,
            abs_tol,
            max_subdivisions,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return Err(Error::param("rel_tol", "must be > 0"));
        }
        if !(self.abs_tol > 0.0) {
            return Err(Error::param("abs_tol", "must be > 0"));
        }
        if self.max_subdivisions < 10 {
            return Err(Error::param("max_subdivisions", "must be >= 10"));
        }
        Ok(())
    }

    /// Same relative tolerance with the absolute floor scaled by `scale`.
    ///
    /// Used when the expected magnitude of the integral is known to be far
    /// below one, where a fixed absolute floor would swamp the result.
    pub fn with_scaled_floor(&self, scale: f64) -> Self {
        let scale = if scale.is_finite() && scale > 0.0 {
            scale.min(1.0)
        } else {
            1.0
        };
        Quadrature {
            abs_tol: (self.abs_tol * scale).max(f64::MIN_POSITIVE),
            ..*self
        }
    }

    pub fn with_max_subdivisions(&self, max_subdivisions: usize) -> Self {
        Quadrature {
            max_subdivisions,
            ..*self
        }
    }
}

/// Result of an integration attempt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub subdivisions: usize,
}

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for the odd-indexed Kronrod nodes XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[10] * fc;
    let mut gauss = 0.0;
    for (j, &x) in XGK.iter().take(10).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kronrod * half;
    let mut error = ((kronrod - gauss) * half).abs();
    // Nonfinite samples poison the estimate; force subdivision.
    if !value.is_finite() {
        error = f64::INFINITY;
    }
    Segment { a, b, value, error }
}

/// Adaptive integration of `f` over the finite interval `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, q: &Quadrature) -> Result<Integral> {
    q.validate()?;
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::param("bounds", "finite interval required"));
    }
    if a == b {
        return Ok(Integral {
            value: 0.0,
            error: 0.0,
            subdivisions: 0,
        });
    }
    if b < a {
        let r = integrate(f, b, a, q)?;
        return Ok(Integral {
            value: -r.value,
            ..r
        });
    }

    let mut heap = BinaryHeap::new();
    let first = gauss_kronrod(&f, a, b);
    let mut total = first.value;
    let mut total_err = first.error;
    heap.push(first);

    loop {
        let tol = q.abs_tol.max(q.rel_tol * total.abs());
        if total_err <= tol && total.is_finite() {
            return Ok(Integral {
                value: total,
                error: total_err,
                subdivisions: heap.len(),
            });
        }
        if heap.len() >= q.max_subdivisions {
            return Err(Error::Quadrature {
                estimate: total,
                error: total_err,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval can no longer be split in floating point.
            return Err(Error::Quadrature {
                estimate: total,
                error: total_err,
            });
        }
        let left = gauss_kronrod(&f, worst.a, mid);
        let right = gauss_kronrod(&f, mid, worst.b);
        heap.push(left);
        heap.push(right);
        // Re-sum rather than update incrementally to avoid drift and inf - inf.
        total = heap.iter().map(|s| s.value).sum();
        total_err = heap.iter().map(|s| s.error).sum();
    }
}

/// Adaptive integration of `f` over `(lower, ∞)` via `x = lower + t/(1-t)`.
pub fn integrate_semi_infinite<F: Fn(f64) -> f64>(
    f: F,
    lower: f64,
    q: &Quadrature,
) -> Result<Integral> {
    if !lower.is_finite() {
        return Err(Error::param("lower", "must be finite"));
    }
    let g = |t: f64| {
        let s = 1.0 - t;
        let x = lower + t / s;
        let v = f(x);
        if v == 0.0 {
            0.0
        } else {
            v / (s * s)
        }
    };
    integrate(g, 0.0, 1.0, q)
}

/// Integrates over consecutive finite pieces `[p0, p1], [p1, p2], ...` and,
/// when `tail` is set, adds the semi-infinite piece beyond the last point.
///
/// Each piece gets its own subdivision budget, which keeps integrands with
/// features spread over many decades (outage integrals at high SNR) within
/// reach of a modest per-piece budget.
pub fn integrate_pieces<F: Fn(f64) -> f64>(
    f: F,
    points: &[f64],
    tail: bool,
    q: &Quadrature,
) -> Result<Integral> {
    let mut value = 0.0;
    let mut error = 0.0;
    let mut subdivisions = 0;
    for w in points.windows(2) {
        let r = integrate(&f, w[0], w[1], q)?;
        value += r.value;
        error += r.error;
        subdivisions += r.subdivisions;
    }
    if tail {
        let last = *points
            .last()
            .ok_or_else(|| Error::param("points", "at least one point required"))?;
        let r = integrate_semi_infinite(&f, last, q)?;
        value += r.value;
        error += r.error;
        subdivisions += r.subdivisions;
    }
    Ok(Integral {
        value,
        error,
        subdivisions,
    })
}

/// Log-spaced breakpoints `lower, lower·ratio, ...` up to (and including) `upper`.
pub fn geometric_points(lower: f64, upper: f64, ratio: f64) -> Vec<f64> {
    let mut pts = vec![lower];
    if lower <= 0.0 || upper <= lower || ratio <= 1.0 {
        pts.push(upper.max(lower));
        pts.dedup();
        return pts;
    }
    let mut x = lower * ratio;
    while x < upper {
        pts.push(x);
        x *= ratio;
    }
    pts.push(upper);
    pts
}
