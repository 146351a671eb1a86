use std::ffi::CStr;
use std::ptr;

use swipt_relay_ffi::*;

fn params(n: u32) -> SwiptParams {
    SwiptParams {
        eta: 0.8,
        theta: 0.5,
        tau: 2.7,
        d1: 1.0,
        d2: 1.0,
        n,
        gamma_th_db: 0.0,
    }
}

fn link(n: u32) -> *mut SwiptLink {
    let mut out = ptr::null_mut();
    let st = unsafe { swipt_link_new_exponential(&params(n), 0.5, 0.8, &mut out) };
    assert_eq!(st, SwiptStatus::Ok);
    assert!(!out.is_null());
    out
}

fn last_error() -> String {
    let p = swipt_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(swipt_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn analytic_values_are_probabilities() {
    let l = link(3);
    let mut exact = f64::NAN;
    let mut lb = f64::NAN;
    let mut stat = f64::NAN;
    unsafe {
        assert_eq!(swipt_outage_exact_inst(l, 20.0, &mut exact), SwiptStatus::Ok);
        assert_eq!(swipt_outage_lb_inst(l, 20.0, &mut lb), SwiptStatus::Ok);
        assert_eq!(swipt_outage_exact_stat(l, 20.0, &mut stat), SwiptStatus::Ok);
        swipt_link_free(l);
    }
    assert!(exact > 0.0 && exact < 1.0);
    assert!(lb <= exact + 1e-9, "lb {lb} exact {exact}");
    assert!(stat >= exact, "stat {stat} exact {exact}");
}

#[test]
fn capacity_bound_covers_mc() {
    let l = link(2);
    let (mut ub, mut mean, mut se) = (0.0, 0.0, 0.0);
    unsafe {
        assert_eq!(swipt_capacity_ub_inst(l, 20.0, &mut ub), SwiptStatus::Ok);
        let st = swipt_mc_estimate(l, SWIPT_MODE_INSTANTANEOUS, SWIPT_METRIC_CAPACITY, 20.0, 20_000, 7, 1, &mut mean, &mut se);
        assert_eq!(st, SwiptStatus::Ok);
        swipt_link_free(l);
    }
    assert!(se > 0.0);
    assert!(ub + 4.0 * se >= mean, "ub {ub} mc {mean} ± {se}");
}

#[test]
fn mc_is_reproducible_across_workers() {
    let l = link(2);
    let mut a = (0.0, 0.0);
    let mut b = (0.0, 0.0);
    unsafe {
        swipt_mc_estimate(l, SWIPT_MODE_STATISTICAL, SWIPT_METRIC_OUTAGE, 10.0, 100_000, 3, 1, &mut a.0, &mut a.1);
        swipt_mc_estimate(l, SWIPT_MODE_STATISTICAL, SWIPT_METRIC_OUTAGE, 10.0, 100_000, 3, 4, &mut b.0, &mut b.1);
        swipt_link_free(l);
    }
    assert_eq!(a, b);
}

#[test]
fn explicit_matrices_match_exponential() {
    let r = [1.0, 0.5, 0.5, 1.0];
    let t = [1.0, 0.8, 0.8, 1.0];
    let mut m = ptr::null_mut();
    let e = link(2);
    let (mut x, mut y) = (0.0, 0.0);
    let mut eig = ([0.0; 2], [0.0; 2]);
    unsafe {
        let st = swipt_link_new_matrices(&params(2), r.as_ptr(), ptr::null(), t.as_ptr(), ptr::null(), &mut m);
        assert_eq!(st, SwiptStatus::Ok);
        swipt_outage_exact_inst(m, 15.0, &mut x);
        swipt_outage_exact_inst(e, 15.0, &mut y);
        assert_eq!(swipt_link_eigenvalues(m, eig.0.as_mut_ptr(), eig.1.as_mut_ptr()), SwiptStatus::Ok);
        swipt_link_free(m);
        swipt_link_free(e);
    }
    assert!((x - y).abs() <= 1e-12 * y.abs());
    assert!((eig.0[0] - 1.5).abs() < 1e-12 && (eig.0[1] - 0.5).abs() < 1e-12);
    assert!((eig.1[0] - 1.8).abs() < 1e-12 && (eig.1[1] - 0.2).abs() < 1e-12);
}

#[test]
fn theta_optimum_beats_half() {
    let l = link(2);
    let (mut theta, mut value, mut half) = (0.0, 0.0, 0.0);
    unsafe {
        assert_eq!(swipt_optimize_theta(l, SWIPT_MODE_INSTANTANEOUS, 20.0, &mut theta, &mut value), SwiptStatus::Ok);
        swipt_capacity_ub_inst(l, 20.0, &mut half);
        swipt_link_free(l);
    }
    assert!(theta > 0.0 && theta < 1.0);
    assert!(value >= half - 1e-12);
}

#[test]
fn errors_set_status_and_message() {
    let mut out = ptr::null_mut();
    let mut bad = params(2);
    bad.eta = 1.5;
    assert_eq!(unsafe { swipt_link_new_exponential(&bad, 0.5, 0.8, &mut out) }, SwiptStatus::InvalidArgument);
    assert!(out.is_null());
    assert!(last_error().contains("eta"), "{}", last_error());

    assert_eq!(unsafe { swipt_link_new_exponential(ptr::null(), 0.5, 0.8, &mut out) }, SwiptStatus::NullPointer);
    assert_eq!(unsafe { swipt_link_new_exponential(&params(2), 1.0, 0.8, &mut out) }, SwiptStatus::InvalidArgument);

    let l = link(2);
    let mut v = 0.0;
    let (mut t, mut m, mut s) = (0.0, 0.0, 0.0);
    unsafe {
        assert_eq!(swipt_outage_exact_inst(l, 20.0, ptr::null_mut()), SwiptStatus::NullPointer);
        assert_eq!(swipt_outage_exact_inst(ptr::null(), 20.0, &mut v), SwiptStatus::NullPointer);
        assert_eq!(swipt_optimize_theta(l, SWIPT_MODE_NO_CSI, 20.0, &mut t, &mut v), SwiptStatus::Unsupported);
        assert_eq!(swipt_mc_estimate(l, 9, SWIPT_METRIC_OUTAGE, 20.0, 10, 1, 1, &mut m, &mut s), SwiptStatus::InvalidArgument);
        assert_eq!(swipt_mc_estimate(l, SWIPT_MODE_NO_CSI, 7, 20.0, 10, 1, 1, &mut m, &mut s), SwiptStatus::InvalidArgument);
        assert_eq!(swipt_mc_estimate(l, SWIPT_MODE_NO_CSI, SWIPT_METRIC_OUTAGE, 20.0, 0, 1, 1, &mut m, &mut s), SwiptStatus::InvalidArgument);
        swipt_link_free(l);
        swipt_link_free(ptr::null_mut());
    }
}

#[test]
fn header_declares_every_export() {
    let header = include_str!("../include/swipt_relay.h");
    for f in [
        "swipt_last_error",
        "swipt_version",
        "swipt_link_new_exponential",
        "swipt_link_new_matrices",
        "swipt_link_free",
        "swipt_link_eigenvalues",
        "swipt_outage_exact_inst",
        "swipt_outage_exact_stat",
        "swipt_outage_lb_inst",
        "swipt_outage_highsnr_inst",
        "swipt_outage_highsnr_stat",
        "swipt_capacity_ub_inst",
        "swipt_capacity_ub_stat",
        "swipt_mc_estimate",
        "swipt_optimize_theta",
    ] {
        assert!(header.contains(&format!("{f}(")), "missing {f}");
    }
    assert!(header.contains("typedef struct SwiptLink SwiptLink;"));
}
