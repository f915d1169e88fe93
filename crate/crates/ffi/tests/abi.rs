use std::ffi::CStr;
use std::ptr;

use heavytail_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as std::ffi::c_char; 256];
    let n = unsafe { ht_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert!(n > 0);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn model(beta: f64) -> *mut HtModel {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { ht_model_new(beta, &mut m) }, HtStatus::Ok);
    assert!(!m.is_null());
    m
}

#[test]
fn constants_and_kappa_match_core() {
    let m = model(2.5);
    let (mut b, mut g, mut a, mut c2, mut k) = (0.0, 0.0, 0.0, 0.0, 0.0);
    unsafe {
        assert_eq!(ht_model_constants(m, &mut b, &mut g, &mut a, &mut c2), HtStatus::Ok);
        assert_eq!(ht_kappa(m, &mut k), HtStatus::Ok);
        ht_model_free(m);
    }
    assert_eq!((b, g, a), (2.5, 1.25, 3.5 / 3.0));
    let core = heavytail::ModelParams::new(2.5).unwrap();
    assert_eq!(c2, core.c_beta_sq);
    assert_eq!(k, heavytail::eigen::kappa_closed(2.5).unwrap());
}

#[test]
fn invalid_beta_sets_message() {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { ht_model_new(3.0, &mut m) }, HtStatus::InvalidBeta);
    assert!(m.is_null());
    assert!(last_error().contains("beta = 3"));
}

#[test]
fn null_pointers_are_reported() {
    assert_eq!(unsafe { ht_model_new(2.5, ptr::null_mut()) }, HtStatus::NullPointer);
    let mut k = 0.0;
    assert_eq!(unsafe { ht_kappa(ptr::null(), &mut k) }, HtStatus::NullPointer);
    assert!(last_error().contains("model"));
    unsafe {
        ht_model_free(ptr::null_mut());
        ht_evolution_free(ptr::null_mut());
    }
}

#[test]
fn error_message_truncates_safely() {
    let mut m = ptr::null_mut();
    unsafe { ht_model_new(7.0, &mut m) };
    let mut small = [1 as std::ffi::c_char; 8];
    let full = unsafe { ht_last_error_message(small.as_mut_ptr(), small.len()) };
    assert!(full > 7);
    assert_eq!(small[7], 0);
    assert_eq!(unsafe { ht_last_error_message(ptr::null_mut(), 0) }, full);
}

#[test]
fn d_coeff_at_zero_matches_closed_form() {
    let m = model(3.5);
    let (mut re, mut im) = (0.0, 0.0);
    assert_eq!(unsafe { ht_d_coeff(m, 0.0, 0.0, &mut re, &mut im) }, HtStatus::Ok);
    unsafe { ht_model_free(m) };
    let closed = heavytail::connection::d_zero_closed(1.75).unwrap();
    assert!((heavytail::C64::new(re, im) - closed).norm() <= 1e-10 * closed.norm());
}

#[test]
fn eigenvalue_methods_agree() {
    let m = model(2.5);
    let (mut cr, mut ci, mut mr, mut mi) = (0.0, 0.0, 0.0, 0.0);
    unsafe {
        assert_eq!(ht_mu_connection(m, 0.05, &mut cr, &mut ci), HtStatus::Ok);
        assert_eq!(ht_mu_matrix(m, 0.05, 0.0, 4096, &mut mr, &mut mi), HtStatus::Ok);
    }
    let rel = ((cr - mr).powi(2) + (ci - mi).powi(2)).sqrt() / cr.abs();
    assert!(rel < 1e-6, "relative difference {rel}");
    let status = unsafe { ht_mu_connection(m, 5.0, &mut cr, &mut ci) };
    assert_eq!(status, HtStatus::Domain);
    unsafe { ht_model_free(m) };
}

#[test]
fn evolution_round_trip() {
    let m = model(2.5);
    let mut e = ptr::null_mut();
    let status = unsafe { ht_evolve(m, 0.0, 0.2, 0.5, 40, 1024, &mut e) };
    assert_eq!(status, HtStatus::Ok, "{}", last_error());
    let mut len = 0;
    assert_eq!(unsafe { ht_evolution_len(e, &mut len) }, HtStatus::Ok);
    assert!(len > 1);
    let mut rec = [0.0f64; 7];
    let [s, rr, ri, fr, fi, er, ei] = &mut rec;
    assert_eq!(unsafe { ht_evolution_get(e, 0, s, rr, ri, fr, fi, er, ei) }, HtStatus::Ok);
    assert_eq!(*s, 0.0);
    assert!((*rr - 1.0).abs() < 1e-12);
    let mut gap = f64::NAN;
    assert_eq!(unsafe { ht_evolution_gap(e, &mut gap) }, HtStatus::Ok);
    assert!(gap < 1e-10, "k = 0 preserves mass, gap {gap}");
    assert_eq!(unsafe { ht_evolution_get(e, len, s, rr, ri, fr, fi, er, ei) }, HtStatus::Domain);
    unsafe {
        ht_evolution_free(e);
        ht_model_free(m);
    }
}

#[test]
fn header_lists_every_entry_point() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/heavytail.h")).unwrap();
    for name in [
        "ht_last_error_message",
        "ht_model_new",
        "ht_model_free",
        "ht_model_constants",
        "ht_kappa",
        "ht_d_coeff",
        "ht_mu_connection",
        "ht_mu_matrix",
        "ht_evolve",
        "ht_evolution_len",
        "ht_evolution_get",
        "ht_evolution_gap",
        "ht_evolution_free",
        "HT_STATUS_PANIC",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}
