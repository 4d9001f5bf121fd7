//! C ABI for the stability toolkit.
//!
//! Conventions (mirrored by `include/tumor_stokes.h`):
//! * every constructor hands back an opaque handle through an out-pointer
//!   and returns a `tgs_status` code; handles are freed with the matching
//!   `tgs_*_free`, which accepts NULL;
//! * all functions returning `int32_t` use the `TGS_*` status codes;
//! * on failure a thread-local message is retrievable with
//!   `tgs_last_error_message()` until the next failing call on the same
//!   thread;
//! * every entry point catches panics and reports `TGS_ERR_PANIC` instead
//!   of unwinding across the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use tumor_stokes::dynamics::{evolve, DynamicsError, PerturbationState};
use tumor_stokes::model::{canonical_model, validate_assumptions, ModelFunctions, ModelParams};
use tumor_stokes::spectrum::{compute_spectrum, SpectrumOptions, SpectrumReport};
use tumor_stokes::stationary::{find_stationary, rescale_to_unit, RadialStationary};

pub const TGS_OK: i32 = 0;
pub const TGS_ERR_NULL_ARGUMENT: i32 = 1;
pub const TGS_ERR_PARSE: i32 = 2;
pub const TGS_ERR_VALIDATION: i32 = 3;
pub const TGS_ERR_NUMERICAL: i32 = 4;
pub const TGS_ERR_BAD_ARGUMENT: i32 = 5;
pub const TGS_ERR_PANIC: i32 = 6;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn fail(code: i32, message: &str) -> i32 {
    set_error(message);
    code
}

/// Most recent error message on this thread. Valid until the next failing
/// call on the same thread; never NULL.
#[no_mangle]
pub extern "C" fn tgs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Static library version string.
#[no_mangle]
pub extern "C" fn tgs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

fn guard<F: FnOnce() -> i32>(body: F) -> i32 {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(code) => code,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic across the C boundary".into());
            fail(TGS_ERR_PANIC, &msg)
        }
    }
}

/// Opaque: validated, normalized model.
pub struct TgsModel {
    params: ModelParams,
    fns: ModelFunctions,
}

/// Opaque: stationary state rescaled to the unit ball, together with the
/// rescaled laws and the original stationary radius.
pub struct TgsStationary {
    st_unit: RadialStationary,
    fns_unit: ModelFunctions,
    r_s: f64,
}

/// Opaque: spectrum report for one stationary state.
pub struct TgsSpectrum {
    report: SpectrumReport,
}

/// Parse a JSON model fragment
/// `{"lambda","mu","sigma_c","sigma_bar","nu","gamma"}` (all six required),
/// validate the structural assumptions and return a model handle.
///
/// # Safety
/// `json` must be a valid NUL-terminated string; `out` must be a valid
/// pointer to receive the handle.
#[no_mangle]
pub unsafe extern "C" fn tgs_model_new_json(
    json: *const c_char,
    out: *mut *mut TgsModel,
) -> i32 {
    guard(|| {
        if json.is_null() || out.is_null() {
            return fail(TGS_ERR_NULL_ARGUMENT, "json and out must be non-NULL");
        }
        unsafe { *out = ptr::null_mut() };
        let text = match unsafe { CStr::from_ptr(json) }.to_str() {
            Ok(t) => t,
            Err(_) => return fail(TGS_ERR_PARSE, "model JSON is not valid UTF-8"),
        };
        let params: ModelParams = match serde_json::from_str(text) {
            Ok(p) => p,
            Err(e) => return fail(TGS_ERR_PARSE, &format!("model JSON: {e}")),
        };
        let fns = match canonical_model(&params) {
            Ok(f) => f,
            Err(e) => return fail(TGS_ERR_VALIDATION, &e.to_string()),
        };
        let report = validate_assumptions(&fns, 2.0);
        if !report.all_pass() {
            return fail(TGS_ERR_VALIDATION, &report.violations.join("; "));
        }
        unsafe { *out = Box::into_raw(Box::new(TgsModel { params, fns })) };
        TGS_OK
    })
}

/// # Safety
/// `model` must be a handle from `tgs_model_new_json` (or NULL), not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tgs_model_free(model: *mut TgsModel) {
    if !model.is_null() {
        drop(unsafe { Box::from_raw(model) });
    }
}

/// Surface tension of the model after normalization (`gamma / nu`).
///
/// # Safety
/// `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tgs_model_gamma_effective(model: *const TgsModel) -> f64 {
    if model.is_null() {
        return f64::NAN;
    }
    unsafe { &*model }.fns.gamma()
}

/// Solve the stationary state. Pass `bracket_lo = bracket_hi = 0` for the
/// default radius search bracket.
///
/// # Safety
/// `model` must be a live handle; `out` a valid out-pointer.
#[no_mangle]
pub unsafe extern "C" fn tgs_stationary_solve(
    model: *const TgsModel,
    bracket_lo: f64,
    bracket_hi: f64,
    out: *mut *mut TgsStationary,
) -> i32 {
    guard(|| {
        if model.is_null() || out.is_null() {
            return fail(TGS_ERR_NULL_ARGUMENT, "model and out must be non-NULL");
        }
        unsafe { *out = ptr::null_mut() };
        let model = unsafe { &*model };
        let bracket = if bracket_lo == 0.0 && bracket_hi == 0.0 {
            None
        } else {
            Some((bracket_lo, bracket_hi))
        };
        let st = match find_stationary(&model.fns, bracket) {
            Ok(st) => st,
            Err(e) => return fail(TGS_ERR_NUMERICAL, &e.to_string()),
        };
        let r_s = st.r_s();
        let (st_unit, fns_unit) = match rescale_to_unit(&st, &model.fns) {
            Ok(pair) => pair,
            Err(e) => return fail(TGS_ERR_NUMERICAL, &e.to_string()),
        };
        unsafe { *out = Box::into_raw(Box::new(TgsStationary { st_unit, fns_unit, r_s })) };
        TGS_OK
    })
}

/// # Safety
/// `st` must be a handle from `tgs_stationary_solve` (or NULL), not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tgs_stationary_free(st: *mut TgsStationary) {
    if !st.is_null() {
        drop(unsafe { Box::from_raw(st) });
    }
}

/// Stationary radius in the configured units.
///
/// # Safety
/// `st` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tgs_stationary_radius(st: *const TgsStationary) -> f64 {
    if st.is_null() {
        return f64::NAN;
    }
    unsafe { &*st }.r_s
}

/// Sample the unit-ball profiles at radius `r` in [0, 1]. Any of the three
/// out-pointers may be NULL to skip that profile.
///
/// # Safety
/// `st` must be a live handle; non-NULL out-pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tgs_stationary_sample(
    st: *const TgsStationary,
    r: f64,
    out_sigma: *mut f64,
    out_v: *mut f64,
    out_p: *mut f64,
) -> i32 {
    guard(|| {
        if st.is_null() {
            return fail(TGS_ERR_NULL_ARGUMENT, "st must be non-NULL");
        }
        if !(0.0..=1.0).contains(&r) {
            return fail(TGS_ERR_BAD_ARGUMENT, &format!("radius {r} outside [0, 1]"));
        }
        let st = unsafe { &*st };
        if !out_sigma.is_null() {
            unsafe { *out_sigma = st.st_unit.sigma_at(r) };
        }
        if !out_v.is_null() {
            unsafe { *out_v = st.st_unit.v_at(r) };
        }
        if !out_p.is_null() {
            unsafe { *out_p = st.st_unit.p_at(r) };
        }
        TGS_OK
    })
}

/// Compute the spectrum report up to at least `l_max` (certificate-driven
/// doubling may extend it). Pass `l_max = 0` for the default (64).
///
/// # Safety
/// `st` must be a live handle; `out` a valid out-pointer.
#[no_mangle]
pub unsafe extern "C" fn tgs_spectrum_compute(
    st: *const TgsStationary,
    l_max: u32,
    out: *mut *mut TgsSpectrum,
) -> i32 {
    guard(|| {
        if st.is_null() || out.is_null() {
            return fail(TGS_ERR_NULL_ARGUMENT, "st and out must be non-NULL");
        }
        unsafe { *out = ptr::null_mut() };
        let st = unsafe { &*st };
        let mut opts = SpectrumOptions::default();
        if l_max != 0 {
            if l_max < 2 {
                return fail(TGS_ERR_BAD_ARGUMENT, "l_max must be at least 2");
            }
            opts.l_max = l_max;
        }
        match compute_spectrum(&st.fns_unit, &st.st_unit, opts) {
            Ok(report) => {
                unsafe { *out = Box::into_raw(Box::new(TgsSpectrum { report })) };
                TGS_OK
            }
            Err(e) => fail(TGS_ERR_NUMERICAL, &e.to_string()),
        }
    })
}

/// # Safety
/// `sp` must be a handle from `tgs_spectrum_compute` (or NULL), not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tgs_spectrum_free(sp: *mut TgsSpectrum) {
    if !sp.is_null() {
        drop(unsafe { Box::from_raw(sp) });
    }
}

/// # Safety
/// `sp` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tgs_spectrum_gamma_star(sp: *const TgsSpectrum) -> f64 {
    if sp.is_null() {
        return f64::NAN;
    }
    unsafe { &*sp }.report.gamma_star()
}

/// # Safety
/// `sp` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tgs_spectrum_l_star(sp: *const TgsSpectrum) -> u32 {
    if sp.is_null() {
        return 0;
    }
    unsafe { &*sp }.report.l_star()
}

/// # Safety
/// `sp` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tgs_spectrum_alpha0(sp: *const TgsSpectrum) -> f64 {
    if sp.is_null() {
        return f64::NAN;
    }
    unsafe { &*sp }.report.alpha_0()
}

/// # Safety
/// `sp` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tgs_spectrum_gamma_tilde_star(sp: *const TgsSpectrum) -> f64 {
    if sp.is_null() {
        return f64::NAN;
    }
    unsafe { &*sp }.report.gamma_tilde_star()
}

/// Truncation degree actually covered by the report.
///
/// # Safety
/// `sp` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tgs_spectrum_l_max(sp: *const TgsSpectrum) -> u32 {
    if sp.is_null() {
        return 0;
    }
    unsafe { &*sp }.report.l_max()
}

/// Per-degree threshold `gamma_l` (`l >= 2`).
///
/// # Safety
/// `sp` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tgs_spectrum_gamma_l(
    sp: *const TgsSpectrum,
    l: u32,
    out: *mut f64,
) -> i32 {
    guard(|| {
        if sp.is_null() || out.is_null() {
            return fail(TGS_ERR_NULL_ARGUMENT, "sp and out must be non-NULL");
        }
        match unsafe { &*sp }.report.gamma_l(l) {
            Some(v) => {
                unsafe { *out = v };
                TGS_OK
            }
            None => fail(TGS_ERR_BAD_ARGUMENT, &format!("degree {l} not covered")),
        }
    })
}

/// Darcy comparison threshold `gamma_tilde_l` (`l >= 2`).
///
/// # Safety
/// `sp` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tgs_spectrum_gamma_tilde_l(
    sp: *const TgsSpectrum,
    l: u32,
    out: *mut f64,
) -> i32 {
    guard(|| {
        if sp.is_null() || out.is_null() {
            return fail(TGS_ERR_NULL_ARGUMENT, "sp and out must be non-NULL");
        }
        match unsafe { &*sp }.report.gamma_tilde_l(l) {
            Some(v) => {
                unsafe { *out = v };
                TGS_OK
            }
            None => fail(TGS_ERR_BAD_ARGUMENT, &format!("degree {l} not covered")),
        }
    })
}

/// Multiplier eigenvalue `alpha_l(gamma)`; degrees 0 and 1 are always
/// available, degrees >= 2 up to the covered truncation.
///
/// # Safety
/// `sp` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tgs_spectrum_alpha(
    sp: *const TgsSpectrum,
    l: u32,
    gamma: f64,
    out: *mut f64,
) -> i32 {
    guard(|| {
        if sp.is_null() || out.is_null() {
            return fail(TGS_ERR_NULL_ARGUMENT, "sp and out must be non-NULL");
        }
        match unsafe { &*sp }.report.alpha(l, gamma) {
            Ok(v) => {
                unsafe { *out = v };
                TGS_OK
            }
            Err(e) => fail(TGS_ERR_BAD_ARGUMENT, &e.to_string()),
        }
    })
}

/// Advance a flat coefficient array (layout `l^2 + l + m`, length
/// `(l_max_state + 1)^2`) by `dt` under the diagonal multiplier flow,
/// in place.
///
/// # Safety
/// `sp` must be a live handle; `coeffs` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn tgs_evolve_coeffs(
    sp: *const TgsSpectrum,
    gamma: f64,
    coeffs: *mut f64,
    len: usize,
    l_max_state: u32,
    dt: f64,
) -> i32 {
    guard(|| {
        if sp.is_null() || coeffs.is_null() {
            return fail(TGS_ERR_NULL_ARGUMENT, "sp and coeffs must be non-NULL");
        }
        let expected = ((l_max_state + 1) * (l_max_state + 1)) as usize;
        if len != expected {
            return fail(
                TGS_ERR_BAD_ARGUMENT,
                &format!("coefficient length {len}, expected {expected}"),
            );
        }
        let slice = unsafe { std::slice::from_raw_parts_mut(coeffs, len) };
        let state = match PerturbationState::from_coeffs(l_max_state, slice.to_vec(), 0.0) {
            Ok(s) => s,
            Err(e) => return fail(TGS_ERR_BAD_ARGUMENT, &e.to_string()),
        };
        match evolve(&state, &unsafe { &*sp }.report, gamma, dt) {
            Ok(next) => {
                slice.copy_from_slice(next.coeffs());
                TGS_OK
            }
            Err(e @ DynamicsError::Saturation { .. }) => fail(TGS_ERR_NUMERICAL, &e.to_string()),
            Err(e) => fail(TGS_ERR_BAD_ARGUMENT, &e.to_string()),
        }
    })
}

/// Raw-units stationary radius scale: multiply a raw surface tension by
/// `r_s / nu` to obtain the unit-ball value used by `tgs_spectrum_alpha`.
///
/// # Safety
/// `model` and `st` must be live handles.
#[no_mangle]
pub unsafe extern "C" fn tgs_gamma_to_unit_ball(
    model: *const TgsModel,
    st: *const TgsStationary,
    gamma_raw: f64,
) -> f64 {
    if model.is_null() || st.is_null() {
        return f64::NAN;
    }
    gamma_raw * unsafe { &*st }.r_s / unsafe { &*model }.params.nu
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;

    const CANONICAL: &str = r#"{"lambda": 1.0, "mu": 1.0, "sigma_c": 0.9391058564979936,
        "sigma_bar": 1.0, "nu": 1.0, "gamma": 0.1}"#;

    fn make_model(json: &str) -> *mut TgsModel {
        let c = CString::new(json).unwrap();
        let mut handle: *mut TgsModel = ptr::null_mut();
        let code = unsafe { tgs_model_new_json(c.as_ptr(), &mut handle) };
        assert_eq!(code, TGS_OK, "{}", last_error());
        handle
    }

    fn last_error() -> String {
        unsafe { CStr::from_ptr(tgs_last_error_message()) }.to_string_lossy().into_owned()
    }

    #[test]
    fn full_pipeline_through_the_abi() {
        let model = make_model(CANONICAL);
        let mut st: *mut TgsStationary = ptr::null_mut();
        assert_eq!(unsafe { tgs_stationary_solve(model, 0.5, 2.0, &mut st) }, TGS_OK);
        let r_s = unsafe { tgs_stationary_radius(st) };
        assert!((r_s - 1.0).abs() < 1e-6);

        let mut sigma = 0.0;
        let mut v = 0.0;
        let mut p = 0.0;
        assert_eq!(
            unsafe { tgs_stationary_sample(st, 0.5, &mut sigma, &mut v, &mut p) },
            TGS_OK
        );
        assert!(sigma > 0.0 && sigma < 1.0);
        assert!(v < 0.0);

        let mut sp: *mut TgsSpectrum = ptr::null_mut();
        assert_eq!(unsafe { tgs_spectrum_compute(st, 64, &mut sp) }, TGS_OK);
        let gamma_star = unsafe { tgs_spectrum_gamma_star(sp) };
        assert!(gamma_star > 0.0);
        assert_eq!(unsafe { tgs_spectrum_l_star(sp) }, 3);
        assert!(unsafe { tgs_spectrum_alpha0(sp) } < 0.0);
        assert!(unsafe { tgs_spectrum_gamma_tilde_star(sp) } < gamma_star);

        let mut gl = 0.0;
        assert_eq!(unsafe { tgs_spectrum_gamma_l(sp, 3, &mut gl) }, TGS_OK);
        assert_eq!(gl, gamma_star);
        let mut alpha = 0.0;
        assert_eq!(unsafe { tgs_spectrum_alpha(sp, 3, gl, &mut alpha) }, TGS_OK);
        assert_eq!(alpha, 0.0);

        // one translation coefficient and one damped degree-2 coefficient
        let l_max_state = 2u32;
        let mut coeffs = vec![0.0; 9];
        coeffs[2] = 1.0; // (l, m) = (1, 0) at index l^2 + l + m
        coeffs[6] = 1.0; // (l, m) = (2, 0)
        let code = unsafe {
            tgs_evolve_coeffs(sp, 2.0 * gamma_star, coeffs.as_mut_ptr(), 9, l_max_state, 5.0)
        };
        assert_eq!(code, TGS_OK, "{}", last_error());
        assert_eq!(coeffs[2], 1.0);
        assert!(coeffs[6] < 1.0 && coeffs[6] > 0.0);

        unsafe {
            tgs_spectrum_free(sp);
            tgs_stationary_free(st);
            tgs_model_free(model);
        }
    }

    #[test]
    fn parse_and_validation_errors() {
        let mut handle: *mut TgsModel = ptr::null_mut();
        let bad_json = CString::new("{not json").unwrap();
        assert_eq!(
            unsafe { tgs_model_new_json(bad_json.as_ptr(), &mut handle) },
            TGS_ERR_PARSE
        );
        assert!(handle.is_null());

        let bad_model = CString::new(
            r#"{"lambda": 1.0, "mu": 1.0, "sigma_c": 1.5,
                "sigma_bar": 1.0, "nu": 1.0, "gamma": 0.1}"#,
        )
        .unwrap();
        assert_eq!(
            unsafe { tgs_model_new_json(bad_model.as_ptr(), &mut handle) },
            TGS_ERR_VALIDATION
        );
        assert!(last_error().contains("A3"));
    }

    #[test]
    fn null_arguments_are_rejected() {
        assert_eq!(
            unsafe { tgs_model_new_json(ptr::null(), ptr::null_mut()) },
            TGS_ERR_NULL_ARGUMENT
        );
        assert_eq!(
            unsafe { tgs_stationary_solve(ptr::null(), 0.0, 0.0, ptr::null_mut()) },
            TGS_ERR_NULL_ARGUMENT
        );
        assert!(unsafe { tgs_stationary_radius(ptr::null()) }.is_nan());
        unsafe {
            tgs_model_free(ptr::null_mut());
            tgs_stationary_free(ptr::null_mut());
            tgs_spectrum_free(ptr::null_mut());
        }
    }

    #[test]
    fn numerical_failure_maps_to_status() {
        let model = make_model(CANONICAL);
        let mut st: *mut TgsStationary = ptr::null_mut();
        let code = unsafe { tgs_stationary_solve(model, 3.0, 4.0, &mut st) };
        assert_eq!(code, TGS_ERR_NUMERICAL);
        assert!(st.is_null());
        assert!(last_error().contains("sign change"), "{}", last_error());
        unsafe { tgs_model_free(model) };
    }

    #[test]
    fn bad_coefficient_length_rejected() {
        let model = make_model(CANONICAL);
        let mut st: *mut TgsStationary = ptr::null_mut();
        unsafe { tgs_stationary_solve(model, 0.5, 2.0, &mut st) };
        let mut sp: *mut TgsSpectrum = ptr::null_mut();
        unsafe { tgs_spectrum_compute(st, 16, &mut sp) };
        let mut coeffs = vec![0.0; 8];
        let code =
            unsafe { tgs_evolve_coeffs(sp, 0.05, coeffs.as_mut_ptr(), 8, 2, 1.0) };
        assert_eq!(code, TGS_ERR_BAD_ARGUMENT);
        unsafe {
            tgs_spectrum_free(sp);
            tgs_stationary_free(st);
            tgs_model_free(model);
        }
    }

    #[test]
    fn version_is_a_c_string() {
        let v = unsafe { CStr::from_ptr(tgs_version()) };
        assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }
}
