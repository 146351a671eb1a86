//! C interface to `swipt-relay`.
//!
//! Every fallible call returns a [`SwiptStatus`] and writes results through
//! out-pointers. On failure a description is kept per thread and can be read
//! with [`swipt_last_error`]. Links are opaque and owned by the caller until
//! passed to [`swipt_link_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use swipt_relay::analytic;
use swipt_relay::channel::{db_to_linear, CsiMode, Link, SystemParams};
use swipt_relay::corrmat::{exp_correlation, CMatrix, CorrelationModel, DEFAULT_DISTINCT_TOL};
use swipt_relay::mc::{self, Metric, StreamSpec};
use num_complex::Complex64;
use swipt_relay::quad::Quadrature;
use swipt_relay::Error;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwiptStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// A quadrature or special-function evaluation did not converge.
    Numerical = 3,
    Unsupported = 4,
    /// A Rust panic was caught at the boundary.
    Panic = 5,
}

/// CSI mode selectors accepted by the `mode` arguments.
pub const SWIPT_MODE_INSTANTANEOUS: u32 = 0;
pub const SWIPT_MODE_STATISTICAL: u32 = 1;
pub const SWIPT_MODE_NO_CSI: u32 = 2;

/// Metric selectors accepted by [`swipt_mc_estimate`].
pub const SWIPT_METRIC_OUTAGE: u32 = 0;
pub const SWIPT_METRIC_CAPACITY: u32 = 1;

/// System parameters. `gamma_th_db` is the outage threshold in dB.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SwiptParams {
    pub eta: f64,
    pub theta: f64,
    pub tau: f64,
    pub d1: f64,
    pub d2: f64,
    pub n: u32,
    pub gamma_th_db: f64,
}

/// Opaque link handle.
pub struct SwiptLink {
    inner: Link,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SwiptStatus {
    match e {
        Error::Quadrature { .. } | Error::OutageUnderflow { .. } => SwiptStatus::Numerical,
        Error::Unsupported(_) => SwiptStatus::Unsupported,
        _ => SwiptStatus::InvalidArgument,
    }
}

/// Runs `f` with panics and errors mapped to status codes.
fn guard(f: impl FnOnce() -> Result<(), (SwiptStatus, String)>) -> SwiptStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SwiptStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_error(format!("internal panic: {msg}"));
            SwiptStatus::Panic
        }
    }
}

fn lib(e: Error) -> (SwiptStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (SwiptStatus, String) {
    (SwiptStatus::NullPointer, format!("`{what}` is null"))
}

fn mode_of(mode: u32) -> Result<CsiMode, (SwiptStatus, String)> {
    match mode {
        SWIPT_MODE_INSTANTANEOUS => Ok(CsiMode::Instantaneous),
        SWIPT_MODE_STATISTICAL => Ok(CsiMode::Statistical),
        SWIPT_MODE_NO_CSI => Ok(CsiMode::NoCsi),
        m => Err((SwiptStatus::InvalidArgument, format!("unknown mode {m}"))),
    }
}

fn params_of(p: &SwiptParams) -> Result<SystemParams, (SwiptStatus, String)> {
    SystemParams::with_threshold_db(p.eta, p.theta, p.tau, p.d1, p.d2, p.n as usize, p.gamma_th_db).map_err(lib)
}

unsafe fn write_link(out: *mut *mut SwiptLink, link: Link) {
    *out = Box::into_raw(Box::new(SwiptLink { inner: link }));
}

/// Message for the last failed call on this thread, or NULL if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn swipt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn swipt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a link with exponential correlation `r^{|i-j|}` on both hops.
///
/// # Safety
/// `params` must point to a valid [`SwiptParams`]; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn swipt_link_new_exponential(
    params: *const SwiptParams,
    r_rx: f64,
    r_tx: f64,
    out: *mut *mut SwiptLink,
) -> SwiptStatus {
    guard(|| {
        let p = params.as_ref().ok_or_else(|| null("params"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let p = params_of(p)?;
        let r = exp_correlation(p.n, r_rx).map_err(lib)?;
        let t = exp_correlation(p.n, r_tx).map_err(lib)?;
        let link = Link::new(p, &r, &t, DEFAULT_DISTINCT_TOL).map_err(lib)?;
        write_link(out, link);
        Ok(())
    })
}

unsafe fn read_matrix(n: usize, re: *const f64, im: *const f64, name: &str) -> Result<CorrelationModel, (SwiptStatus, String)> {
    if re.is_null() {
        return Err(null(name));
    }
    let re = std::slice::from_raw_parts(re, n * n);
    let im = (!im.is_null()).then(|| std::slice::from_raw_parts(im, n * n));
    let m = CMatrix::from_fn(n, |i, j| Complex64::new(re[i * n + j], im.map_or(0.0, |v| v[i * n + j])));
    CorrelationModel::from_matrix(m).map_err(lib)
}

/// Builds a link from explicit correlation matrices, row-major `n × n`.
/// The imaginary parts may be NULL for real matrices.
///
/// # Safety
/// Each non-null matrix pointer must reference `n * n` readable doubles,
/// with `n = params->n`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn swipt_link_new_matrices(
    params: *const SwiptParams,
    rx_re: *const f64,
    rx_im: *const f64,
    tx_re: *const f64,
    tx_im: *const f64,
    out: *mut *mut SwiptLink,
) -> SwiptStatus {
    guard(|| {
        let p = params.as_ref().ok_or_else(|| null("params"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let p = params_of(p)?;
        let r = read_matrix(p.n, rx_re, rx_im, "rx_re")?;
        let t = read_matrix(p.n, tx_re, tx_im, "tx_re")?;
        let link = Link::new(p, &r, &t, DEFAULT_DISTINCT_TOL).map_err(lib)?;
        write_link(out, link);
        Ok(())
    })
}

/// Releases a link. NULL is ignored.
///
/// # Safety
/// `link` must come from a `swipt_link_new_*` call and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn swipt_link_free(link: *mut SwiptLink) {
    if !link.is_null() {
        drop(Box::from_raw(link));
    }
}

/// Copies the (guarded, descending) receive and transmit eigenvalues into
/// `eig_r` and `eig_t`, each of length `n`.
///
/// # Safety
/// `link` must be valid; both outputs must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn swipt_link_eigenvalues(link: *const SwiptLink, eig_r: *mut f64, eig_t: *mut f64) -> SwiptStatus {
    guard(|| {
        let l = &link.as_ref().ok_or_else(|| null("link"))?.inner;
        if eig_r.is_null() || eig_t.is_null() {
            return Err(null("eig_r/eig_t"));
        }
        let n = l.n();
        ptr::copy_nonoverlapping(l.eig_r.values().as_ptr(), eig_r, n);
        ptr::copy_nonoverlapping(l.eig_t.values().as_ptr(), eig_t, n);
        Ok(())
    })
}

type Analytic = fn(&Link, f64) -> swipt_relay::Result<f64>;

unsafe fn eval(link: *const SwiptLink, rho_db: f64, out: *mut f64, f: Analytic) -> SwiptStatus {
    guard(|| {
        let l = &link.as_ref().ok_or_else(|| null("link"))?.inner;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = f(l, db_to_linear(rho_db)).map_err(lib)?;
        Ok(())
    })
}

/// Exact outage probability with instantaneous CSI.
///
/// # Safety
/// `link` must be valid and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn swipt_outage_exact_inst(link: *const SwiptLink, rho_db: f64, out: *mut f64) -> SwiptStatus {
    eval(link, rho_db, out, |l, rho| analytic::outage_exact_inst(&l.params, l.eig_r.values(), l.eig_t.values(), rho, &Quadrature::default()))
}

/// Exact outage probability with statistical CSI.
///
/// # Safety
/// `link` must be valid and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn swipt_outage_exact_stat(link: *const SwiptLink, rho_db: f64, out: *mut f64) -> SwiptStatus {
    eval(link, rho_db, out, |l, rho| analytic::outage_exact_stat(&l.params, l.eig_r.values(), l.eig_t.values(), rho, &Quadrature::default()).map(|s| s.value))
}

/// Closed-form lower bound on the instantaneous-CSI outage.
///
/// # Safety
/// `link` must be valid and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn swipt_outage_lb_inst(link: *const SwiptLink, rho_db: f64, out: *mut f64) -> SwiptStatus {
    eval(link, rho_db, out, |l, rho| analytic::outage_lb_inst(&l.params, l.eig_r.values(), l.eig_t.values(), rho))
}

/// High-SNR approximation of the instantaneous-CSI outage, clamped to `[0, 1]`.
///
/// # Safety
/// `link` must be valid and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn swipt_outage_highsnr_inst(link: *const SwiptLink, rho_db: f64, out: *mut f64) -> SwiptStatus {
    eval(link, rho_db, out, |l, rho| analytic::outage_highsnr_inst(&l.params, l.eig_r.values(), l.eig_t.values(), rho).map(|a| a.value))
}

/// High-SNR approximation of the statistical-CSI outage, clamped to `[0, 1]`.
///
/// # Safety
/// `link` must be valid and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn swipt_outage_highsnr_stat(link: *const SwiptLink, rho_db: f64, out: *mut f64) -> SwiptStatus {
    eval(link, rho_db, out, |l, rho| analytic::outage_highsnr_stat(&l.params, l.eig_r.values(), l.eig_t.values(), rho).map(|a| a.value))
}

/// Upper bound on the instantaneous-CSI ergodic capacity (bits/s/Hz).
///
/// # Safety
/// `link` must be valid and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn swipt_capacity_ub_inst(link: *const SwiptLink, rho_db: f64, out: *mut f64) -> SwiptStatus {
    eval(link, rho_db, out, |l, rho| analytic::capacity_ub_inst(&l.params, l.eig_r.values(), l.eig_t.values(), rho, &Quadrature::default()))
}

/// Upper bound on the statistical-CSI ergodic capacity (bits/s/Hz).
///
/// # Safety
/// `link` must be valid and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn swipt_capacity_ub_stat(link: *const SwiptLink, rho_db: f64, out: *mut f64) -> SwiptStatus {
    eval(link, rho_db, out, |l, rho| analytic::capacity_ub_stat(&l.params, l.eig_r.values(), l.eig_t.values(), rho, &Quadrature::default()))
}


/// Monte Carlo estimate of `metric` under `mode`. Results depend only on
/// `seed`, not on `workers`.
///
/// # Safety
/// `link` must be valid; `mean` and `stderr` must be writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn swipt_mc_estimate(
    link: *const SwiptLink,
    mode: u32,
    metric: u32,
    rho_db: f64,
    samples: u64,
    seed: u64,
    workers: u32,
    mean: *mut f64,
    stderr: *mut f64,
) -> SwiptStatus {
    guard(|| {
        let l = &link.as_ref().ok_or_else(|| null("link"))?.inner;
        let (mean, stderr) = match (mean.as_mut(), stderr.as_mut()) {
            (Some(m), Some(s)) => (m, s),
            _ => return Err(null("mean/stderr")),
        };
        let mode = mode_of(mode)?;
        let metric = match metric {
            SWIPT_METRIC_OUTAGE => Metric::Outage,
            SWIPT_METRIC_CAPACITY => Metric::Capacity,
            m => return Err((SwiptStatus::InvalidArgument, format!("unknown metric {m}"))),
        };
        let rho = db_to_linear(rho_db);
        let est = mc::estimate_grid(metric, &[mode], l, &[rho], samples, StreamSpec::new(seed, 0), workers as usize)
            .map_err(lib)?[0][0];
        *mean = est.mean;
        *stderr = est.stderr;
        Ok(())
    })
}

/// Power-splitting ratio maximizing the capacity upper bound of `mode`
/// (instantaneous or statistical) at `rho_db`.
///
/// # Safety
/// `link` must be valid; `theta` and `value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn swipt_optimize_theta(
    link: *const SwiptLink,
    mode: u32,
    rho_db: f64,
    theta: *mut f64,
    value: *mut f64,
) -> SwiptStatus {
    guard(|| {
        let l = &link.as_ref().ok_or_else(|| null("link"))?.inner;
        let (theta, value) = match (theta.as_mut(), value.as_mut()) {
            (Some(t), Some(v)) => (t, v),
            _ => return Err(null("theta/value")),
        };
        let o = analytic::optimize_theta(
            mode_of(mode)?,
            &l.params,
            l.eig_r.values(),
            l.eig_t.values(),
            db_to_linear(rho_db),
            &Quadrature::default(),
        )
        .map_err(lib)?;
        *theta = o.theta;
        *value = o.value;
        Ok(())
    })
}
