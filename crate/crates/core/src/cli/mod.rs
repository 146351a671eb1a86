//! Sweep configuration, CSV output and the commands behind the binary.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64;
use serde::Deserialize;

use crate::analytic::{
    capacity_ub_inst, capacity_ub_stat, optimize_theta, outage_exact_inst, outage_exact_stat, outage_highsnr_inst,
    outage_highsnr_stat, outage_lb_inst, partial_fraction_weights,
};
use crate::channel::{db_to_linear, CsiMode, Link, SystemParams};
use crate::corrmat::{exp_correlation, CMatrix, CorrelationModel, DEFAULT_DISTINCT_TOL};
use crate::error::{Error, Result};
use crate::mc::{estimate_grid, Metric, StreamSpec};
use crate::quad::Quadrature;

/// CSV header of [`run_sweep`].
pub const SWEEP_HEADER: [&str; 12] = [
    "mode",
    "metric",
    "method",
    "rho_db",
    "theta",
    "n_antennas",
    "r_rx",
    "r_tx",
    "value",
    "stderr",
    "n_samples",
    "seed",
];

/// CSV header of [`run_optimize_theta`].
pub const THETA_HEADER: [&str; 5] = ["mode", "rho_db", "theta_star", "value", "value_at_half"];

/// How a value is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Mc,
    Exact,
    LowerBound,
    HighSnr,
    UpperBound,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Mc => "mc",
            Method::Exact => "exact",
            Method::LowerBound => "lower-bound",
            Method::HighSnr => "high-snr",
            Method::UpperBound => "upper-bound",
        }
    }

    /// Whether this method exists for `metric` under `mode`.
    pub fn supports(&self, metric: Metric, mode: CsiMode) -> bool {
        use CsiMode::*;
        match (self, metric) {
            (Method::Mc, _) => true,
            (Method::Exact | Method::HighSnr, Metric::Outage) => mode != NoCsi,
            (Method::LowerBound, Metric::Outage) => mode == Instantaneous,
            (Method::UpperBound, Metric::Capacity) => mode != NoCsi,
            _ => false,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mc" | "monte-carlo" => Ok(Method::Mc),
            "exact" => Ok(Method::Exact),
            "lower-bound" | "lb" => Ok(Method::LowerBound),
            "high-snr" | "asymptotic" => Ok(Method::HighSnr),
            "upper-bound" | "ub" => Ok(Method::UpperBound),
            other => Err(Error::config("method", format!("unknown method `{other}`"))),
        }
    }
}

/// `start..=stop` in steps of `step`, in dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    pub fn single(db: f64) -> Self {
        Grid {
            start: db,
            stop: db,
            step: 1.0,
        }
    }

    pub fn points(&self) -> Result<Vec<f64>> {
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(Error::config("rho_db", "bounds must be finite"));
        }
        if !(self.step > 0.0) {
            return Err(Error::config("rho_db.step", "must be > 0"));
        }
        if self.stop < self.start {
            return Err(Error::config("rho_db", "grid is empty (stop < start)"));
        }
        let k = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        if k > 100_000 {
            return Err(Error::config("rho_db.step", "grid too large"));
        }
        Ok((0..=k).map(|i| self.start + i as f64 * self.step).collect())
    }
}

impl FromStr for Grid {
    type Err = Error;
    /// `a`, or `start:stop:step`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::config("rho_db", format!("expected `dB` or `start:stop:step`, got `{s}`"));
        let parts: Vec<f64> = s.split(':').map(|p| p.trim().parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|_| bad())?;
        match parts[..] {
            [a] => Ok(Grid::single(a)),
            [a, b, c] => Ok(Grid {
                start: a,
                stop: b,
                step: c,
            }),
            _ => Err(bad()),
        }
    }
}

/// Where the correlation matrices come from.
#[derive(Debug, Clone, PartialEq)]
pub enum CorrSpec {
    Exponential { r_rx: f64, r_tx: f64 },
    /// Explicit receive and transmit matrices.
    Matrices { rx: CMatrix, tx: CMatrix },
}

impl CorrSpec {
    pub fn models(&self, n: usize) -> Result<(CorrelationModel, CorrelationModel)> {
        match self {
            CorrSpec::Exponential { r_rx, r_tx } => Ok((exp_correlation(n, *r_rx)?, exp_correlation(n, *r_tx)?)),
            CorrSpec::Matrices { rx, tx } => {
                for (name, m) in [("corr.rx", rx), ("corr.tx", tx)] {
                    if m.n() != n {
                        return Err(Error::config(name, format!("matrix is {}x{}, expected {n}x{n}", m.n(), m.n())));
                    }
                }
                Ok((CorrelationModel::from_matrix(rx.clone())?, CorrelationModel::from_matrix(tx.clone())?))
            }
        }
    }

    fn coefficients(&self) -> (Option<f64>, Option<f64>) {
        match self {
            CorrSpec::Exponential { r_rx, r_tx } => (Some(*r_rx), Some(*r_tx)),
            CorrSpec::Matrices { .. } => (None, None),
        }
    }
}

/// A fully resolved sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub modes: Vec<CsiMode>,
    pub metric: Metric,
    pub method: Method,
    pub rho_db: Grid,
    pub params: SystemParams,
    pub corr: CorrSpec,
    pub samples: u64,
    pub seed: u64,
    pub workers: usize,
}

impl Default for SweepConfig {
    /// Three antennas, `r_rx = 0.5`, `r_tx = 0.8`, `γ_th = 0 dB`, all modes,
    /// Monte Carlo outage from 0 to 40 dB.
    fn default() -> Self {
        SweepConfig {
            modes: CsiMode::ALL.to_vec(),
            metric: Metric::Outage,
            method: Method::Mc,
            rho_db: Grid {
                start: 0.0,
                stop: 40.0,
                step: 5.0,
            },
            params: SystemParams::with_threshold_db(0.8, 0.5, 2.5, 3.0, 3.0, 3, 0.0).expect("valid defaults"),
            corr: CorrSpec::Exponential { r_rx: 0.5, r_tx: 0.8 },
            samples: 1_000_000,
            seed: 1,
            workers: 1,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.modes.is_empty() {
            return Err(Error::config("modes", "at least one mode is required"));
        }
        for &m in &self.modes {
            if !self.method.supports(self.metric, m) {
                return Err(Error::config(
                    "method",
                    format!("`{}` is not available for {} {}", self.method, m, self.metric),
                ));
            }
        }
        self.rho_db.points()?;
        self.params.validate().map_err(|e| Error::config("params", e.to_string()))?;
        if self.method == Method::Mc && self.samples < crate::mc::MIN_SAMPLES {
            return Err(Error::config("samples", format!("need at least {}", crate::mc::MIN_SAMPLES)));
        }
        if self.workers == 0 {
            return Err(Error::config("workers", "must be >= 1"));
        }
        self.corr.models(self.params.n).map_err(|e| match e {
            e @ Error::Config { .. } => e,
            e => Error::config("corr", e.to_string()),
        })?;
        Ok(())
    }

    /// Reads a TOML file, filling anything missing from [`SweepConfig::default`].
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::config("config", format!("{}: {e}", path.display())))?;
        Self::from_toml(&text, path.parent())
    }

    /// Parses TOML text; relative matrix paths resolve against `base`.
    pub fn from_toml(text: &str, base: Option<&Path>) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::config(toml_field(&e), e.message().to_string()))?;
        raw.resolve(base)
    }

    pub fn link(&self) -> Result<Link> {
        let (r, t) = self.corr.models(self.params.n)?;
        Link::new(self.params, &r, &t, DEFAULT_DISTINCT_TOL)
    }
}

fn toml_field(e: &toml::de::Error) -> String {
    // The message names unknown fields itself; fall back to the whole file.
    let msg = e.message();
    msg.split('`').nth(1).map(str::to_string).unwrap_or_else(|| "config".to_string())
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    modes: Option<Vec<String>>,
    metric: Option<String>,
    method: Option<String>,
    rho_db: Option<RawGrid>,
    params: Option<RawParams>,
    corr: Option<RawCorr>,
    mc: Option<RawMc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    start: f64,
    stop: f64,
    step: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    eta: Option<f64>,
    theta: Option<f64>,
    tau: Option<f64>,
    d1: Option<f64>,
    d2: Option<f64>,
    n: Option<usize>,
    gamma_th_db: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCorr {
    r_rx: Option<f64>,
    r_tx: Option<f64>,
    matrix_file: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMc {
    samples: Option<u64>,
    seed: Option<u64>,
    workers: Option<usize>,
}

/// Layout of a correlation matrix file: real parts, optional imaginary parts.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMatrices {
    rx: Vec<Vec<f64>>,
    tx: Vec<Vec<f64>>,
    rx_imag: Option<Vec<Vec<f64>>>,
    tx_imag: Option<Vec<Vec<f64>>>,
}

fn build_matrix(field: &str, re: &[Vec<f64>], im: Option<&Vec<Vec<f64>>>) -> Result<CMatrix> {
    let rows: Vec<Vec<Complex64>> = re
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, &x)| {
                    let y = im.and_then(|m| m.get(i)).and_then(|r| r.get(j)).copied().unwrap_or(0.0);
                    Complex64::new(x, y)
                })
                .collect()
        })
        .collect();
    if let Some(m) = im {
        if m.len() != re.len() || m.iter().zip(re).any(|(a, b)| a.len() != b.len()) {
            return Err(Error::config(format!("{field}_imag"), "shape differs from the real part"));
        }
    }
    CMatrix::from_rows(&rows).map_err(|e| Error::config(field, e.to_string()))
}

/// Reads a correlation matrix file (TOML with `rx`, `tx` and optional
/// `rx_imag`, `tx_imag` arrays).
pub fn read_matrix_file(path: &Path) -> Result<CorrSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::config("corr.matrix_file", format!("{}: {e}", path.display())))?;
    let raw: RawMatrices = toml::from_str(&text).map_err(|e| Error::config("corr.matrix_file", e.message().to_string()))?;
    Ok(CorrSpec::Matrices {
        rx: build_matrix("rx", &raw.rx, raw.rx_imag.as_ref())?,
        tx: build_matrix("tx", &raw.tx, raw.tx_imag.as_ref())?,
    })
}

impl RawConfig {
    fn resolve(self, base: Option<&Path>) -> Result<SweepConfig> {
        let mut c = SweepConfig::default();
        if let Some(modes) = self.modes {
            c.modes = modes.iter().map(|m| m.parse().map_err(|_| Error::config("modes", format!("unknown mode `{m}`")))).collect::<Result<_>>()?;
        }
        if let Some(m) = self.metric {
            c.metric = m.parse().map_err(|_| Error::config("metric", format!("unknown metric `{m}`")))?;
        }
        if let Some(m) = self.method {
            c.method = m.parse()?;
        }
        if let Some(g) = self.rho_db {
            c.rho_db = Grid {
                start: g.start,
                stop: g.stop,
                step: g.step,
            };
        }
        if let Some(p) = self.params {
            let d = c.params;
            c.params = SystemParams::with_threshold_db(
                p.eta.unwrap_or(d.eta),
                p.theta.unwrap_or(d.theta),
                p.tau.unwrap_or(d.tau),
                p.d1.unwrap_or(d.d1),
                p.d2.unwrap_or(d.d2),
                p.n.unwrap_or(d.n),
                p.gamma_th_db.unwrap_or(d.gamma_th_db()),
            )
            .map_err(|e| match e {
                Error::InvalidParameter { name, reason } => Error::config(format!("params.{name}"), reason),
                e => Error::config("params", e.to_string()),
            })?;
        }
        if let Some(corr) = self.corr {
            c.corr = match (corr.matrix_file, corr.r_rx, corr.r_tx) {
                (Some(f), None, None) => read_matrix_file(&base.map(|b| b.join(&f)).unwrap_or(f))?,
                (Some(_), _, _) => return Err(Error::config("corr", "give either matrix_file or r_rx/r_tx, not both")),
                (None, rx, tx) => CorrSpec::Exponential {
                    r_rx: rx.unwrap_or(0.5),
                    r_tx: tx.unwrap_or(0.8),
                },
            };
        }
        if let Some(mc) = self.mc {
            c.samples = mc.samples.unwrap_or(c.samples);
            c.seed = mc.seed.unwrap_or(c.seed);
            c.workers = mc.workers.unwrap_or(c.workers);
        }
        Ok(c)
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub rho_db: Option<Grid>,
    pub modes: Option<Vec<CsiMode>>,
    pub metric: Option<Metric>,
    pub method: Option<Method>,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, c: &mut SweepConfig) {
        if let Some(g) = self.rho_db {
            c.rho_db = g;
        }
        if let Some(m) = &self.modes {
            c.modes = m.clone();
        }
        if let Some(m) = self.metric {
            c.metric = m;
        }
        if let Some(m) = self.method {
            c.method = m;
        }
        if let Some(n) = self.samples {
            c.samples = n;
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(w) = self.workers {
            c.workers = w;
        }
    }
}

/// One CSV line of a sweep.
#[derive(Debug, Clone)]
pub struct ResultRow {
    pub mode: CsiMode,
    pub metric: Metric,
    pub method: Method,
    pub rho_db: f64,
    pub theta: f64,
    pub n_antennas: usize,
    pub r_rx: Option<f64>,
    pub r_tx: Option<f64>,
    pub value: f64,
    pub stderr: Option<f64>,
    pub n_samples: Option<u64>,
    pub seed: Option<u64>,
}

fn same_f64(a: f64, b: f64) -> bool {
    a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan())
}

impl PartialEq for ResultRow {
    /// Field-wise, with NaN equal to NaN.
    fn eq(&self, o: &Self) -> bool {
        let opt = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(x), Some(y)) => same_f64(x, y),
            (None, None) => true,
            _ => false,
        };
        self.mode == o.mode
            && self.metric == o.metric
            && self.method == o.method
            && same_f64(self.rho_db, o.rho_db)
            && same_f64(self.theta, o.theta)
            && self.n_antennas == o.n_antennas
            && opt(self.r_rx, o.r_rx)
            && opt(self.r_tx, o.r_tx)
            && same_f64(self.value, o.value)
            && opt(self.stderr, o.stderr)
            && self.n_samples == o.n_samples
            && self.seed == o.seed
    }
}

/// Shortest round-tripping decimal, `nan` for NaN.
pub fn format_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x}")
    }
}

fn parse_f64(field: &str, s: &str) -> Result<f64> {
    if s.eq_ignore_ascii_case("nan") {
        return Ok(f64::NAN);
    }
    s.parse().map_err(|_| Error::config(field.to_string(), format!("not a number: `{s}`")))
}

fn opt_str<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl ResultRow {
    pub fn to_record(&self) -> [String; 12] {
        [
            self.mode.to_string(),
            self.metric.to_string(),
            self.method.to_string(),
            format_f64(self.rho_db),
            format_f64(self.theta),
            self.n_antennas.to_string(),
            self.r_rx.map(format_f64).unwrap_or_default(),
            self.r_tx.map(format_f64).unwrap_or_default(),
            format_f64(self.value),
            self.stderr.map(format_f64).unwrap_or_default(),
            opt_str(self.n_samples),
            opt_str(self.seed),
        ]
    }

    pub fn from_record(r: &csv::StringRecord) -> Result<Self> {
        if r.len() != SWEEP_HEADER.len() {
            return Err(Error::config("csv", format!("expected {} fields, got {}", SWEEP_HEADER.len(), r.len())));
        }
        let f = |i: usize| r.get(i).unwrap_or("");
        let opt_f = |i: usize| -> Result<Option<f64>> {
            if f(i).is_empty() {
                Ok(None)
            } else {
                parse_f64(SWEEP_HEADER[i], f(i)).map(Some)
            }
        };
        let opt_u = |i: usize| -> Result<Option<u64>> {
            if f(i).is_empty() {
                Ok(None)
            } else {
                f(i).parse().map(Some).map_err(|_| Error::config(SWEEP_HEADER[i], "not an integer"))
            }
        };
        Ok(ResultRow {
            mode: f(0).parse()?,
            metric: f(1).parse()?,
            method: f(2).parse()?,
            rho_db: parse_f64("rho_db", f(3))?,
            theta: parse_f64("theta", f(4))?,
            n_antennas: f(5).parse().map_err(|_| Error::config("n_antennas", "not an integer"))?,
            r_rx: opt_f(6)?,
            r_tx: opt_f(7)?,
            value: parse_f64("value", f(8))?,
            stderr: opt_f(9)?,
            n_samples: opt_u(10)?,
            seed: opt_u(11)?,
        })
    }
}

/// Parses CSV produced by [`write_rows`].
pub fn read_rows<R: std::io::Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = rd.headers().map_err(|e| Error::Io(e.to_string()))?.clone();
    if header.iter().ne(SWEEP_HEADER.iter().copied()) {
        return Err(Error::config("csv", "unexpected header"));
    }
    rd.records()
        .map(|r| ResultRow::from_record(&r.map_err(|e| Error::Io(e.to_string()))?))
        .collect()
}

/// Writes the header and `rows` as CSV with LF line endings.
pub fn write_rows<W: Write>(out: W, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(SWEEP_HEADER).map_err(io)?;
    for r in rows {
        w.write_record(r.to_record()).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// Evaluates a sweep. Rows are ordered by grid point, then by mode in the
/// order given. Analytic failures become `nan` values with a line on `diag`.
pub fn sweep_rows<D: Write>(config: &SweepConfig, diag: &mut D) -> Result<Vec<ResultRow>> {
    config.validate()?;
    let grid = config.rho_db.points()?;
    let rhos: Vec<f64> = grid.iter().map(|&d| db_to_linear(d)).collect();
    let link = config.link()?;
    let (r_rx, r_tx) = config.corr.coefficients();
    let p = config.params;
    let eig_r = link.eig_r.values();
    let eig_t = link.eig_t.values();
    let q = Quadrature::default();

    let mc = if config.method == Method::Mc {
        Some(estimate_grid(
            config.metric,
            &config.modes,
            &link,
            &rhos,
            config.samples,
            StreamSpec::new(config.seed, 0),
            config.workers,
        )?)
    } else {
        None
    };

    let mut rows = Vec::with_capacity(grid.len() * config.modes.len());
    for (ri, (&db, &rho)) in grid.iter().zip(&rhos).enumerate() {
        for (mi, &mode) in config.modes.iter().enumerate() {
            let mut row = ResultRow {
                mode,
                metric: config.metric,
                method: config.method,
                rho_db: db,
                theta: p.theta,
                n_antennas: p.n,
                r_rx,
                r_tx,
                value: f64::NAN,
                stderr: None,
                n_samples: None,
                seed: None,
            };
            if let Some(est) = &mc {
                let e = est[mi][ri];
                row.value = e.mean;
                row.stderr = Some(e.stderr);
                row.n_samples = Some(e.n);
                row.seed = Some(e.seed);
            } else {
                let value = analytic_value(config.metric, config.method, mode, &p, eig_r, eig_t, rho, &q, db, diag);
                row.value = match value {
                    Ok(v) => v,
                    Err(e) => {
                        writeln!(diag, "warning: {mode} {} {} at {db} dB: {e}", config.metric, config.method)?;
                        f64::NAN
                    }
                };
            }
            rows.push(row);
        }
    }
    Ok(rows)
}

#[allow(clippy::too_many_arguments)]
fn analytic_value<D: Write>(
    metric: Metric,
    method: Method,
    mode: CsiMode,
    p: &SystemParams,
    eig_r: &[f64],
    eig_t: &[f64],
    rho: f64,
    q: &Quadrature,
    db: f64,
    diag: &mut D,
) -> Result<f64> {
    use CsiMode::*;
    match (metric, method, mode) {
        (Metric::Outage, Method::Exact, Instantaneous) => outage_exact_inst(p, eig_r, eig_t, rho, q),
        (Metric::Outage, Method::Exact, Statistical) => {
            let s = outage_exact_stat(p, eig_r, eig_t, rho, q)?;
            if s.needs_logging() {
                let why = match &s.printed_form_error {
                    Some(e) => format!("failed ({e})"),
                    None => format!("differs by {:e}", s.discrepancy()),
                };
                writeln!(diag, "note: statistical outage at {db} dB: single-integral form {why}; reporting direct quadrature")?;
            }
            Ok(s.value)
        }
        (Metric::Outage, Method::LowerBound, Instantaneous) => outage_lb_inst(p, eig_r, eig_t, rho),
        (Metric::Outage, Method::HighSnr, Instantaneous | Statistical) => {
            let a = if mode == Instantaneous {
                outage_highsnr_inst(p, eig_r, eig_t, rho)?
            } else {
                outage_highsnr_stat(p, eig_r, eig_t, rho)?
            };
            if a.warning {
                writeln!(diag, "warning: {mode} high-SNR outage at {db} dB is outside its regime (raw {:e})", a.raw)?;
            }
            Ok(a.value)
        }
        (Metric::Capacity, Method::UpperBound, Instantaneous) => capacity_ub_inst(p, eig_r, eig_t, rho, q),
        (Metric::Capacity, Method::UpperBound, Statistical) => capacity_ub_stat(p, eig_r, eig_t, rho, q),
        _ => Err(Error::Unsupported(format!("{method} {metric} for {mode}"))),
    }
}

/// Runs a sweep and writes its CSV to `out`; returns the row count.
pub fn run_sweep<W: Write, D: Write>(config: &SweepConfig, out: W, diag: &mut D) -> Result<usize> {
    let rows = sweep_rows(config, diag)?;
    write_rows(out, &rows)?;
    Ok(rows.len())
}

/// One CSV line of [`run_optimize_theta`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaRow {
    pub mode: CsiMode,
    pub rho_db: f64,
    pub theta_star: f64,
    pub value: f64,
    pub value_at_half: f64,
}

/// Optimal power-splitting ratio for each grid point and mode.
pub fn optimize_theta_rows(config: &SweepConfig) -> Result<Vec<ThetaRow>> {
    if let Some(m) = config.modes.iter().find(|m| **m == CsiMode::NoCsi) {
        return Err(Error::config("modes", format!("θ optimization needs instantaneous or statistical CSI, got {m}")));
    }
    let mut c = config.clone();
    c.method = Method::Mc;
    c.metric = Metric::Capacity;
    c.validate()?;
    let link = c.link()?;
    let q = Quadrature::default();
    let mut rows = Vec::new();
    for db in c.rho_db.points()? {
        for &mode in &c.modes {
            let o = optimize_theta(mode, &c.params, link.eig_r.values(), link.eig_t.values(), db_to_linear(db), &q)?;
            rows.push(ThetaRow {
                mode,
                rho_db: db,
                theta_star: o.theta,
                value: o.value,
                value_at_half: o.value_at_half,
            });
        }
    }
    Ok(rows)
}

/// Writes the θ-optimization CSV; returns the row count.
pub fn run_optimize_theta<W: Write>(config: &SweepConfig, out: W) -> Result<usize> {
    let rows = optimize_theta_rows(config)?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(THETA_HEADER).map_err(io)?;
    for r in &rows {
        w.write_record([
            r.mode.to_string(),
            format_f64(r.rho_db),
            format_f64(r.theta_star),
            format_f64(r.value),
            format_f64(r.value_at_half),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(rows.len())
}

/// Eigenvalues and partial-fraction weights of both correlation matrices.
pub fn corr_info<W: Write>(corr: &CorrSpec, n: usize, mut out: W) -> Result<()> {
    let (r, t) = corr.models(n)?;
    for (name, m) in [("rx", r), ("tx", t)] {
        let e = m.eigen(DEFAULT_DISTINCT_TOL)?;
        let list = |v: &[f64]| v.iter().map(|x| format_f64(*x)).collect::<Vec<_>>().join(" ");
        writeln!(out, "{name}.eigenvalues = {}", list(e.raw_values()))?;
        if e.raw_values() != e.values() {
            writeln!(out, "{name}.eigenvalues_guarded = {}", list(e.values()))?;
        }
        for k in [n as i32 - 1, n as i32 - 2] {
            writeln!(out, "{name}.weights[{k}] = {}", list(&partial_fraction_weights(e.values(), k)?))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SweepConfig {
        SweepConfig {
            samples: 20_000,
            ..SweepConfig::default()
        }
    }

    #[test]
    fn grid_parsing() {
        assert_eq!("0:40:5".parse::<Grid>().unwrap().points().unwrap().len(), 9);
        assert_eq!("12.5".parse::<Grid>().unwrap().points().unwrap(), vec![12.5]);
        assert!("1:2".parse::<Grid>().is_err());
        assert!("10:0:5".parse::<Grid>().unwrap().points().is_err());
        assert!("0:10:0".parse::<Grid>().unwrap().points().is_err());
    }

    #[test]
    fn method_availability() {
        assert!(Method::Mc.supports(Metric::Outage, CsiMode::NoCsi));
        assert!(!Method::Exact.supports(Metric::Outage, CsiMode::NoCsi));
        assert!(!Method::LowerBound.supports(Metric::Outage, CsiMode::Statistical));
        assert!(!Method::UpperBound.supports(Metric::Outage, CsiMode::Instantaneous));
        assert!(Method::UpperBound.supports(Metric::Capacity, CsiMode::Statistical));
        let mut c = small();
        c.method = Method::Exact;
        match c.validate() {
            Err(Error::Config { field, .. }) => assert_eq!(field, "method"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn toml_parsing_and_defaults() {
        let c = SweepConfig::from_toml(
            r#"
modes = ["instantaneous"]
metric = "capacity"
method = "upper-bound"
rho_db = { start = 10, stop = 30, step = 10 }
[params]
n = 2
gamma_th_db = 3
[corr]
r_rx = 0.3
[mc]
seed = 7
"#,
            None,
        )
        .unwrap();
        assert_eq!(c.modes, vec![CsiMode::Instantaneous]);
        assert_eq!(c.method, Method::UpperBound);
        assert_eq!(c.params.n, 2);
        assert!((c.params.gamma_th_db() - 3.0).abs() < 1e-12);
        assert_eq!(c.corr, CorrSpec::Exponential { r_rx: 0.3, r_tx: 0.8 });
        assert_eq!(c.seed, 7);
        c.validate().unwrap();
    }

    #[test]
    fn config_errors_name_the_field() {
        let field = |text: &str| match SweepConfig::from_toml(text, None).and_then(|c| c.validate()) {
            Err(Error::Config { field, .. }) => field,
            other => panic!("{other:?}"),
        };
        assert_eq!(field("modes = [\"sometimes\"]"), "modes");
        assert_eq!(field("[params]\ntheta = 1.5"), "params.theta");
        assert_eq!(field("rho_db = { start = 5, stop = 0, step = 1 }"), "rho_db");
        assert_eq!(field("bogus = 1"), "bogus");
        assert_eq!(field("[corr]\nr_rx = 1.2"), "corr");
    }

    #[test]
    fn matrix_file_config() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("m.toml"),
            "rx = [[1.0, 0.4], [0.4, 1.0]]\ntx = [[1.0, 0.2], [0.2, 1.0]]\ntx_imag = [[0.0, 0.3], [-0.3, 0.0]]\n",
        )
        .unwrap();
        std::fs::write(dir.path().join("c.toml"), "[params]\nn = 2\n[corr]\nmatrix_file = \"m.toml\"\n").unwrap();
        let c = SweepConfig::from_file(&dir.path().join("c.toml")).unwrap();
        c.validate().unwrap();
        let mut buf = Vec::new();
        corr_info(&c.corr, 2, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let first: Vec<f64> = text.lines().next().unwrap().split('=').nth(1).unwrap().split_whitespace().map(|v| v.parse().unwrap()).collect();
        assert!((first[0] - 1.4).abs() < 1e-12 && (first[1] - 0.6).abs() < 1e-12, "{text}");
        assert!(text.contains("tx.weights[1]"));
        let rows = sweep_rows(&SweepConfig { samples: 2000, ..c }, &mut Vec::new()).unwrap();
        assert!(rows.iter().all(|r| r.r_rx.is_none()));
    }

    #[test]
    fn sweep_layout_and_round_trip() {
        let mut c = small();
        let mut buf = Vec::new();
        let n = run_sweep(&c, &mut buf, &mut std::io::sink()).unwrap();
        assert_eq!(n, 27);
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(&(SWEEP_HEADER.join(",") + "\n")));
        assert!(!text.contains('\r'));
        let rows = read_rows(buf.as_slice()).unwrap();
        assert_eq!(rows.len(), 27);
        assert_eq!((rows[0].mode, rows[1].mode, rows[3].rho_db), (CsiMode::Instantaneous, CsiMode::Statistical, 5.0));
        assert!(rows.iter().all(|r| r.stderr.is_some()));

        c.method = Method::Exact;
        c.modes = vec![CsiMode::Instantaneous];
        let mut buf2 = Vec::new();
        assert_eq!(run_sweep(&c, &mut buf2, &mut std::io::sink()).unwrap(), 9);
        let exact = read_rows(buf2.as_slice()).unwrap();
        assert!(exact.iter().all(|r| r.stderr.is_none() && r.seed.is_none()));
        let mut again = Vec::new();
        write_rows(&mut again, &exact).unwrap();
        assert_eq!(again, buf2);
    }

    #[test]
    fn nan_rows_round_trip() {
        let row = ResultRow {
            mode: CsiMode::Statistical,
            metric: Metric::Outage,
            method: Method::Exact,
            rho_db: 10.0,
            theta: 0.5,
            n_antennas: 3,
            r_rx: Some(0.5),
            r_tx: None,
            value: f64::NAN,
            stderr: None,
            n_samples: None,
            seed: None,
        };
        let mut buf = Vec::new();
        write_rows(&mut buf, std::slice::from_ref(&row)).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().contains(",nan,"));
        assert_eq!(read_rows(buf.as_slice()).unwrap(), vec![row]);
    }

    #[test]
    fn statistical_exact_logs_the_printed_form() {
        let c = SweepConfig {
            modes: vec![CsiMode::Statistical],
            method: Method::Exact,
            rho_db: Grid::single(20.0),
            ..small()
        };
        let mut diag = Vec::new();
        let rows = sweep_rows(&c, &mut diag).unwrap();
        assert!(rows[0].value > 0.7 && rows[0].value < 0.8);
        assert!(String::from_utf8(diag).unwrap().contains("single-integral form"));
    }

    #[test]
    fn theta_rows() {
        let c = SweepConfig {
            modes: vec![CsiMode::Instantaneous, CsiMode::Statistical],
            rho_db: Grid::single(30.0),
            ..small()
        };
        let rows = optimize_theta_rows(&c).unwrap();
        assert_eq!(rows.len(), 2);
        for r in &rows {
            assert!(r.value >= r.value_at_half);
            assert!(r.theta_star > 0.01 && r.theta_star < 0.99);
        }
        assert!(rows[0].value > rows[1].value);
        let bad = SweepConfig { modes: vec![CsiMode::NoCsi], ..c };
        assert!(optimize_theta_rows(&bad).is_err());
    }
}
