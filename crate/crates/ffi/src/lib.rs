//! C ABI over the `heavytail` solvers.
//!
//! Every function returns an [`HtStatus`]; results go through out-pointers.
//! On failure the message is kept per thread and can be copied out with
//! [`ht_last_error_message`]. Models and evolutions are opaque handles that
//! the caller releases with the matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use heavytail::connection::build_h;
use heavytail::eigen::{default_v_max, kappa_closed, solve_mu_connection, solve_mu_matrix};
use heavytail::kinetic::{evolve_mode_with, InitialData, KineticOptions, ModeEvolution};
use heavytail::{Error, ModelParams, C64};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidBeta = 2,
    Domain = 3,
    Convergence = 4,
    Resolution = 5,
    Numerical = 6,
    Panic = 7,
}

/// Validated model constants.
pub struct HtModel {
    params: ModelParams,
}

/// A finished per-mode evolution.
pub struct HtEvolution {
    run: ModeEvolution,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> HtStatus {
    match e {
        Error::InvalidBeta(_) | Error::NonIntegrable(_) => HtStatus::InvalidBeta,
        Error::Domain(_) | Error::OutOfDisc { .. } | Error::InvalidPoint(_) | Error::Pole { .. } => HtStatus::Domain,
        Error::Convergence(_) | Error::ContractionNotMet { .. } | Error::Quadrature(_) => HtStatus::Convergence,
        Error::Resolution { .. } | Error::Truncation { .. } => HtStatus::Resolution,
        _ => HtStatus::Numerical,
    }
}

fn guard(f: impl FnOnce() -> Result<(), HtStatus>) -> HtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HtStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            HtStatus::Panic
        }
    }
}

fn lift<T>(r: heavytail::Result<T>) -> Result<T, HtStatus> {
    r.map_err(|e| {
        set_error(e.to_string());
        status_of(&e)
    })
}

fn null_check<T>(p: *const T, name: &str) -> Result<(), HtStatus> {
    if p.is_null() {
        set_error(format!("{name} is null"));
        Err(HtStatus::NullPointer)
    } else {
        Ok(())
    }
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length without the NUL,
/// or 0 when no error is recorded.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn ht_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match &*e.borrow() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len - 1);
                ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
                *buf.add(n) = 0;
            }
            bytes.len()
        }
    })
}

/// Creates a model for `beta`; `*out` receives the handle.
///
/// # Safety
/// `out` must be null or a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ht_model_new(beta: f64, out: *mut *mut HtModel) -> HtStatus {
    guard(|| {
        null_check(out, "out")?;
        let params = lift(ModelParams::new(beta))?;
        *out = Box::into_raw(Box::new(HtModel { params }));
        Ok(())
    })
}

/// Releases a model handle; null is ignored.
///
/// # Safety
/// `model` must be null or a handle from [`ht_model_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ht_model_free(model: *mut HtModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// `β`, `γ = β/2`, `α = (β+1)/3` and `C_β²` of a model.
///
/// # Safety
/// `model` must be a live handle; the out-pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ht_model_constants(
    model: *const HtModel,
    beta: *mut f64,
    gamma: *mut f64,
    alpha: *mut f64,
    c_beta_sq: *mut f64,
) -> HtStatus {
    guard(|| {
        null_check(model, "model")?;
        for (p, n) in [(beta, "beta"), (gamma, "gamma"), (alpha, "alpha"), (c_beta_sq, "c_beta_sq")] {
            null_check(p, n)?;
        }
        let p = &(*model).params;
        *beta = p.beta;
        *gamma = p.gamma;
        *alpha = p.alpha;
        *c_beta_sq = p.c_beta_sq;
        Ok(())
    })
}

/// Closed-form `κ(β)`.
///
/// # Safety
/// `model` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn ht_kappa(model: *const HtModel, out: *mut f64) -> HtStatus {
    guard(|| {
        null_check(model, "model")?;
        null_check(out, "out")?;
        *out = lift(kappa_closed((*model).params.beta))?;
        Ok(())
    })
}

/// Connection coefficient `d(λ)` extracted from the model-equation solution.
///
/// # Safety
/// `model` must be a live handle and the out-pointers valid.
#[no_mangle]
pub unsafe extern "C" fn ht_d_coeff(
    model: *const HtModel,
    lambda_re: f64,
    lambda_im: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> HtStatus {
    guard(|| {
        null_check(model, "model")?;
        null_check(out_re, "out_re")?;
        null_check(out_im, "out_im")?;
        let h = lift(build_h(C64::new(lambda_re, lambda_im), (*model).params.gamma))?;
        *out_re = h.d_coeff.re;
        *out_im = h.d_coeff.im;
        Ok(())
    })
}

/// `μ(η)` from the connection condition.
///
/// # Safety
/// `model` must be a live handle and the out-pointers valid.
#[no_mangle]
pub unsafe extern "C" fn ht_mu_connection(model: *const HtModel, eta: f64, out_re: *mut f64, out_im: *mut f64) -> HtStatus {
    guard(|| {
        null_check(model, "model")?;
        null_check(out_re, "out_re")?;
        null_check(out_im, "out_im")?;
        let r = lift(solve_mu_connection(eta, &(*model).params))?;
        *out_re = r.mu.re;
        *out_im = r.mu.im;
        Ok(())
    })
}

/// `μ(η)` from the finite-difference oracle with `n_grid` and `2 n_grid`
/// cells; `v_max ≤ 0` selects the default half-width.
///
/// # Safety
/// `model` must be a live handle and the out-pointers valid.
#[no_mangle]
pub unsafe extern "C" fn ht_mu_matrix(
    model: *const HtModel,
    eta: f64,
    v_max: f64,
    n_grid: usize,
    out_re: *mut f64,
    out_im: *mut f64,
) -> HtStatus {
    guard(|| {
        null_check(model, "model")?;
        null_check(out_re, "out_re")?;
        null_check(out_im, "out_im")?;
        let v = if v_max > 0.0 { v_max } else { default_v_max(eta) };
        let r = lift(solve_mu_matrix(eta, v, n_grid, (*model).params.gamma))?;
        *out_re = r.mu.re;
        *out_im = r.mu.im;
        Ok(())
    })
}

/// Evolves one mode from the normalised equilibrium. `n_grid = 0` picks the
/// default grid; the step-halving check is always on.
///
/// # Safety
/// `model` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn ht_evolve(
    model: *const HtModel,
    k: f64,
    epsilon: f64,
    s_final: f64,
    n_steps: usize,
    n_grid: usize,
    out: *mut *mut HtEvolution,
) -> HtStatus {
    guard(|| {
        null_check(model, "model")?;
        null_check(out, "out")?;
        let mut opts = KineticOptions::default();
        if n_grid > 0 {
            opts.n_grid = n_grid;
        }
        let run = lift(evolve_mode_with(
            k,
            epsilon,
            &InitialData::Equilibrium,
            s_final,
            n_steps,
            &(*model).params,
            &opts,
        ))?;
        *out = Box::into_raw(Box::new(HtEvolution { run }));
        Ok(())
    })
}

/// Number of recorded times.
///
/// # Safety
/// `evolution` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn ht_evolution_len(evolution: *const HtEvolution, out: *mut usize) -> HtStatus {
    guard(|| {
        null_check(evolution, "evolution")?;
        null_check(out, "out")?;
        *out = (*evolution).run.times.len();
        Ok(())
    })
}

/// Record `i`: time, density `ρ̂`, moment `F̂` and reference `e^{-κ|k|^α s}ρ̂₀`.
///
/// # Safety
/// `evolution` must be a live handle; the out-pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ht_evolution_get(
    evolution: *const HtEvolution,
    i: usize,
    s: *mut f64,
    rho_re: *mut f64,
    rho_im: *mut f64,
    f_re: *mut f64,
    f_im: *mut f64,
    ref_re: *mut f64,
    ref_im: *mut f64,
) -> HtStatus {
    guard(|| {
        null_check(evolution, "evolution")?;
        for (p, n) in [
            (s, "s"),
            (rho_re, "rho_re"),
            (rho_im, "rho_im"),
            (f_re, "f_re"),
            (f_im, "f_im"),
            (ref_re, "ref_re"),
            (ref_im, "ref_im"),
        ] {
            null_check(p, n)?;
        }
        let run = &(*evolution).run;
        if i >= run.times.len() {
            set_error(format!("index {i} out of range (len {})", run.times.len()));
            return Err(HtStatus::Domain);
        }
        *s = run.times[i];
        *rho_re = run.rho_hat[i].re;
        *rho_im = run.rho_hat[i].im;
        *f_re = run.f_hat[i].re;
        *f_im = run.f_hat[i].im;
        *ref_re = run.reference[i].re;
        *ref_im = run.reference[i].im;
        Ok(())
    })
}

/// `sup_s |ρ̂(s) - e^{-κ|k|^α s}ρ̂₀|` of an evolution.
///
/// # Safety
/// `evolution` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn ht_evolution_gap(evolution: *const HtEvolution, out: *mut f64) -> HtStatus {
    guard(|| {
        null_check(evolution, "evolution")?;
        null_check(out, "out")?;
        *out = (*evolution).run.gap();
        Ok(())
    })
}

/// Releases an evolution handle; null is ignored.
///
/// # Safety
/// `evolution` must be null or a handle from [`ht_evolve`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ht_evolution_free(evolution: *mut HtEvolution) {
    if !evolution.is_null() {
        drop(Box::from_raw(evolution));
    }
}
