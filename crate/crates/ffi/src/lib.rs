//! C interface for the meson-bell library.
//!
//! Conventions: every fallible call returns an [`MbStatus`] and writes its
//! results through out-pointers; composite results come back as opaque
//! handles with accessor functions and an explicit `_free`. All entry points
//! catch panics and turn them into `MB_STATUS_PANIC`, so no unwinding ever
//! crosses the language boundary. The generated header lives in
//! `include/meson_bell.h` and is refreshed by the build script.

use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use meson_bell::chsh::{
    chsh_value, find_threshold, maximize_chsh, ChshSettings, MaxResult, OptimizerOptions,
    ThresholdResult,
};
use meson_bell::correlation::{correlation, CorrelationKind, TimePair};
use meson_bell::montecarlo::{estimate_chsh, sample_events};
use meson_bell::Error;

/// Result of every fallible call in this interface.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MbStatus {
    /// The call succeeded and all requested outputs were written.
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer,
    /// An argument failed validation (range, finiteness, count).
    InvalidArgument,
    /// Parameters outside the physical domain of the requested kernel.
    Domain,
    /// No event survived the renormalized post-selection, or the sample was
    /// otherwise too small to estimate from.
    Degenerate,
    /// The requested threshold does not exist for this correlation kind or
    /// could not be bracketed.
    NoThreshold,
    /// The violation onset is not a single crossing in the scanned range.
    AmbiguousCrossing,
    /// Internal invariant violation; indicates a bug, not a caller error.
    Internal,
    /// A panic was caught at the language boundary.
    Panic,
}

/// Correlation kind selector, mirroring the library's three kernels.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MbKind {
    /// Flavor correlation of surviving amplitudes, damped by decay.
    NonUnitary = 0,
    /// Norm-conserving correlation including decay products.
    Unitary,
    /// Survivor-renormalized (post-selected) correlation.
    Renormalized,
}

impl From<MbKind> for CorrelationKind {
    fn from(kind: MbKind) -> Self {
        match kind {
            MbKind::NonUnitary => CorrelationKind::NonUnitary,
            MbKind::Unitary => CorrelationKind::Unitary,
            MbKind::Renormalized => CorrelationKind::Renormalized,
        }
    }
}

fn status_of(e: &Error) -> MbStatus {
    match e {
        Error::InvalidParameter { .. } => MbStatus::InvalidArgument,
        Error::Domain(_) => MbStatus::Domain,
        Error::Inconsistency(_) => MbStatus::Internal,
        Error::DegenerateConditioning | Error::DegenerateSample(_) => MbStatus::Degenerate,
        Error::NoThreshold { .. } | Error::Bracketing { .. } => MbStatus::NoThreshold,
        Error::AmbiguousCrossing { .. } => MbStatus::AmbiguousCrossing,
        Error::SettingEstimate { source, .. } => status_of(source),
        Error::ScanPoint { source, .. } => status_of(source),
    }
}

fn guarded(f: impl FnOnce() -> MbStatus) -> MbStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or(MbStatus::Panic)
}

/// Optimizer options from the C-side knobs; zero selects the default
/// (t_max 8.0, grid_points 13).
fn options(t_max: f64, grid_points: usize) -> OptimizerOptions {
    let mut opts = OptimizerOptions::default();
    if t_max != 0.0 {
        opts.t_max = t_max;
    }
    if grid_points != 0 {
        opts.grid_points = grid_points;
    }
    opts
}

fn settings(
    tau_a: f64,
    tau_a_prime: f64,
    tau_b: f64,
    tau_b_prime: f64,
) -> Result<ChshSettings, Error> {
    ChshSettings::new(tau_a, tau_a_prime, tau_b, tau_b_prime)
}

/// Version of this interface as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Correlation E(tau_l, tau_r) for dimensionless mixing x and width
/// asymmetry y (ignored by the nonunitary kernel).
///
/// # Safety
/// `out` must be a valid pointer to a double.
#[no_mangle]
pub unsafe extern "C" fn mb_correlation(
    kind: MbKind,
    x: f64,
    y: f64,
    tau_l: f64,
    tau_r: f64,
    out: *mut f64,
) -> MbStatus {
    guarded(|| {
        if out.is_null() {
            return MbStatus::NullPointer;
        }
        let times = match TimePair::new(tau_l, tau_r) {
            Ok(t) => t,
            Err(e) => return status_of(&e),
        };
        match correlation(kind.into(), x, y, times) {
            Ok(v) => {
                *out = v;
                MbStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// CHSH combination S at fixed settings (tau_a, tau_a_prime, tau_b,
/// tau_b_prime).
///
/// # Safety
/// `out` must be a valid pointer to a double.
#[no_mangle]
pub unsafe extern "C" fn mb_chsh_value(
    kind: MbKind,
    x: f64,
    y: f64,
    tau_a: f64,
    tau_a_prime: f64,
    tau_b: f64,
    tau_b_prime: f64,
    out: *mut f64,
) -> MbStatus {
    guarded(|| {
        if out.is_null() {
            return MbStatus::NullPointer;
        }
        let st = match settings(tau_a, tau_a_prime, tau_b, tau_b_prime) {
            Ok(s) => s,
            Err(e) => return status_of(&e),
        };
        match chsh_value(kind.into(), x, y, st) {
            Ok(v) => {
                *out = v;
                MbStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Opaque handle to a maximization result; release with
/// `mb_max_result_free`.
pub struct MbMaxResult {
    inner: MaxResult,
}

/// Global maximum of S over settings in [0, t_max]^4. Pass t_max = 0 and
/// grid_points = 0 for the defaults (8.0 and 13). On success `*out` owns a
/// new handle.
///
/// # Safety
/// `out` must be a valid pointer to an `MbMaxResult*`.
#[no_mangle]
pub unsafe extern "C" fn mb_maximize(
    kind: MbKind,
    x: f64,
    y: f64,
    t_max: f64,
    grid_points: usize,
    out: *mut *mut MbMaxResult,
) -> MbStatus {
    guarded(|| {
        if out.is_null() {
            return MbStatus::NullPointer;
        }
        match maximize_chsh(kind.into(), x, y, options(t_max, grid_points)) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(MbMaxResult { inner }));
                MbStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Largest S found; NaN if the handle is null.
///
/// # Safety
/// `handle` must be null or a live handle from `mb_maximize`.
#[no_mangle]
pub unsafe extern "C" fn mb_max_result_s_max(handle: *const MbMaxResult) -> f64 {
    match handle.as_ref() {
        Some(h) => h.inner.s_max,
        None => f64::NAN,
    }
}

/// Writes the maximizing settings as [tau_a, tau_a_prime, tau_b,
/// tau_b_prime] into `out`.
///
/// # Safety
/// `handle` must be a live handle and `out` must point to 4 doubles.
#[no_mangle]
pub unsafe extern "C" fn mb_max_result_settings(
    handle: *const MbMaxResult,
    out: *mut f64,
) -> MbStatus {
    guarded(|| {
        let (Some(h), false) = (handle.as_ref(), out.is_null()) else {
            return MbStatus::NullPointer;
        };
        let values = h.inner.settings.to_array();
        std::ptr::copy_nonoverlapping(values.as_ptr(), out, 4);
        MbStatus::Ok
    })
}

/// Number of kernel evaluations spent; 0 if the handle is null.
///
/// # Safety
/// `handle` must be null or a live handle from `mb_maximize`.
#[no_mangle]
pub unsafe extern "C" fn mb_max_result_evaluations(handle: *const MbMaxResult) -> u64 {
    match handle.as_ref() {
        Some(h) => h.inner.evaluations,
        None => 0,
    }
}

/// Whether the top refined candidates agreed within the optimizer's
/// resolution; false if the handle is null.
///
/// # Safety
/// `handle` must be null or a live handle from `mb_maximize`.
#[no_mangle]
pub unsafe extern "C" fn mb_max_result_converged(handle: *const MbMaxResult) -> bool {
    match handle.as_ref() {
        Some(h) => h.inner.converged,
        None => false,
    }
}

/// Releases a maximization handle; null is a no-op.
///
/// # Safety
/// `handle` must be null or a live handle from `mb_maximize`, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mb_max_result_free(handle: *mut MbMaxResult) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Opaque handle to a threshold-search result; release with
/// `mb_threshold_result_free`.
pub struct MbThresholdResult {
    inner: ThresholdResult,
}

/// Critical mixing parameter where max S first exceeds 2, for the decaying
/// kinds (the renormalized kernel has no threshold). Pass t_max = 0 and
/// grid_points = 0 for the defaults. On success `*out` owns a new handle.
///
/// # Safety
/// `out` must be a valid pointer to an `MbThresholdResult*`.
#[no_mangle]
pub unsafe extern "C" fn mb_find_threshold(
    kind: MbKind,
    y: f64,
    tolerance: f64,
    t_max: f64,
    grid_points: usize,
    out: *mut *mut MbThresholdResult,
) -> MbStatus {
    guarded(|| {
        if out.is_null() {
            return MbStatus::NullPointer;
        }
        match find_threshold(kind.into(), y, tolerance, options(t_max, grid_points)) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(MbThresholdResult { inner }));
                MbStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Critical x; NaN if the handle is null.
///
/// # Safety
/// `handle` must be null or a live handle from `mb_find_threshold`.
#[no_mangle]
pub unsafe extern "C" fn mb_threshold_result_critical_x(handle: *const MbThresholdResult) -> f64 {
    match handle.as_ref() {
        Some(h) => h.inner.critical_x,
        None => f64::NAN,
    }
}

/// Maximized S at the critical x; NaN if the handle is null.
///
/// # Safety
/// `handle` must be null or a live handle from `mb_find_threshold`.
#[no_mangle]
pub unsafe extern "C" fn mb_threshold_result_s_at_critical(
    handle: *const MbThresholdResult,
) -> f64 {
    match handle.as_ref() {
        Some(h) => h.inner.s_at_critical,
        None => f64::NAN,
    }
}

/// Bisection iterations spent; 0 if the handle is null.
///
/// # Safety
/// `handle` must be null or a live handle from `mb_find_threshold`.
#[no_mangle]
pub unsafe extern "C" fn mb_threshold_result_iterations(handle: *const MbThresholdResult) -> u32 {
    match handle.as_ref() {
        Some(h) => h.inner.iterations,
        None => 0,
    }
}

/// Writes the final bracket [x_lo, x_hi] around the crossing.
///
/// # Safety
/// `handle` must be a live handle; `x_lo` and `x_hi` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn mb_threshold_result_bracket(
    handle: *const MbThresholdResult,
    x_lo: *mut f64,
    x_hi: *mut f64,
) -> MbStatus {
    guarded(|| {
        let (Some(h), false, false) = (handle.as_ref(), x_lo.is_null(), x_hi.is_null()) else {
            return MbStatus::NullPointer;
        };
        *x_lo = h.inner.bracket.0;
        *x_hi = h.inner.bracket.1;
        MbStatus::Ok
    })
}

/// Releases a threshold handle; null is a no-op.
///
/// # Safety
/// `handle` must be null or a live handle from `mb_find_threshold`, not yet
/// freed.
#[no_mangle]
pub unsafe extern "C" fn mb_threshold_result_free(handle: *mut MbThresholdResult) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Runs a seeded pseudo-experiment with `n_per_setting` events under each of
/// the four CHSH settings and estimates S. Outputs other than `value` and
/// `std_error` may be null to skip them. Identical inputs give identical
/// results on any machine and thread count.
///
/// # Safety
/// `value` and `std_error` must be valid pointers; `n_used`, `n_total` and
/// `near_zero` must each be null or valid.
#[no_mangle]
pub unsafe extern "C" fn mb_estimate_chsh(
    kind: MbKind,
    x: f64,
    y: f64,
    tau_a: f64,
    tau_a_prime: f64,
    tau_b: f64,
    tau_b_prime: f64,
    n_per_setting: usize,
    seed: u64,
    value: *mut f64,
    std_error: *mut f64,
    n_used: *mut u64,
    n_total: *mut u64,
    near_zero: *mut bool,
) -> MbStatus {
    guarded(|| {
        if value.is_null() || std_error.is_null() {
            return MbStatus::NullPointer;
        }
        let st = match settings(tau_a, tau_a_prime, tau_b, tau_b_prime) {
            Ok(s) => s,
            Err(e) => return status_of(&e),
        };
        let events = match sample_events(x, y, st, n_per_setting, seed) {
            Ok(ev) => ev,
            Err(e) => return status_of(&e),
        };
        match estimate_chsh(&events, kind.into()) {
            Ok(est) => {
                *value = est.value;
                *std_error = est.std_error;
                if !n_used.is_null() {
                    *n_used = est.n_used;
                }
                if !n_total.is_null() {
                    *n_total = est.n_total;
                }
                if !near_zero.is_null() {
                    *near_zero = est.near_zero;
                }
                MbStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn correlation_matches_library() {
        let mut out = 0.0;
        let status = unsafe { mb_correlation(MbKind::Renormalized, 0.95, 1.0, 1.0, 0.0, &mut out) };
        assert_eq!(status, MbStatus::Ok);
        let direct = correlation(
            CorrelationKind::Renormalized,
            0.95,
            1.0,
            TimePair::new(1.0, 0.0).unwrap(),
        )
        .unwrap();
        assert_eq!(out, direct);
    }

    #[test]
    fn null_out_pointer_is_reported() {
        let status =
            unsafe { mb_correlation(MbKind::NonUnitary, 1.0, 0.0, 1.0, 0.0, std::ptr::null_mut()) };
        assert_eq!(status, MbStatus::NullPointer);
    }

    #[test]
    fn domain_error_maps_to_status() {
        let mut out = 0.0;
        let status = unsafe { mb_correlation(MbKind::Unitary, 1.0, 2.5, 1.0, 0.0, &mut out) };
        assert_eq!(status, MbStatus::Domain);
        let status = unsafe { mb_correlation(MbKind::NonUnitary, 1.0, 0.0, -1.0, 0.0, &mut out) };
        assert_eq!(status, MbStatus::InvalidArgument);
    }

    #[test]
    fn maximize_handle_round_trip() {
        let mut handle: *mut MbMaxResult = std::ptr::null_mut();
        let status = unsafe { mb_maximize(MbKind::Renormalized, 0.77, 0.0, 0.0, 0, &mut handle) };
        assert_eq!(status, MbStatus::Ok);
        assert!(!handle.is_null());

        let direct =
            maximize_chsh(CorrelationKind::Renormalized, 0.77, 0.0, OptimizerOptions::default())
                .unwrap();
        unsafe {
            assert_eq!(mb_max_result_s_max(handle), direct.s_max);
            assert_eq!(mb_max_result_evaluations(handle), direct.evaluations);
            assert_eq!(mb_max_result_converged(handle), direct.converged);
            let mut s = [0.0; 4];
            assert_eq!(mb_max_result_settings(handle, s.as_mut_ptr()), MbStatus::Ok);
            assert_eq!(s, direct.settings.to_array());
            mb_max_result_free(handle);
        }
    }

    #[test]
    fn threshold_handle_round_trip() {
        let mut handle: *mut MbThresholdResult = std::ptr::null_mut();
        let status = unsafe { mb_find_threshold(MbKind::Unitary, 0.0, 1e-2, 0.0, 0, &mut handle) };
        assert_eq!(status, MbStatus::Ok);

        let direct =
            find_threshold(CorrelationKind::Unitary, 0.0, 1e-2, OptimizerOptions::default())
                .unwrap();
        unsafe {
            assert_eq!(mb_threshold_result_critical_x(handle), direct.critical_x);
            assert_eq!(mb_threshold_result_s_at_critical(handle), direct.s_at_critical);
            assert_eq!(mb_threshold_result_iterations(handle), direct.iterations);
            let (mut lo, mut hi) = (0.0, 0.0);
            assert_eq!(
                mb_threshold_result_bracket(handle, &mut lo, &mut hi),
                MbStatus::Ok
            );
            assert_eq!((lo, hi), direct.bracket);
            mb_threshold_result_free(handle);
        }
    }

    #[test]
    fn renormalized_threshold_is_rejected() {
        let mut handle: *mut MbThresholdResult = std::ptr::null_mut();
        let status =
            unsafe { mb_find_threshold(MbKind::Renormalized, 0.0, 1e-2, 0.0, 0, &mut handle) };
        assert_eq!(status, MbStatus::NoThreshold);
        assert!(handle.is_null());
    }

    #[test]
    fn null_handles_give_sentinels() {
        unsafe {
            assert!(mb_max_result_s_max(std::ptr::null()).is_nan());
            assert_eq!(mb_max_result_evaluations(std::ptr::null()), 0);
            assert!(!mb_max_result_converged(std::ptr::null()));
            assert!(mb_threshold_result_critical_x(std::ptr::null()).is_nan());
            mb_max_result_free(std::ptr::null_mut());
            mb_threshold_result_free(std::ptr::null_mut());
        }
    }

    #[test]
    fn estimate_matches_library_pipeline() {
        let (mut value, mut std_error) = (0.0, 0.0);
        let (mut n_used, mut n_total) = (0u64, 0u64);
        let mut near_zero = false;
        let status = unsafe {
            mb_estimate_chsh(
                MbKind::Renormalized,
                0.77,
                0.0,
                0.0,
                2.04,
                1.02,
                3.06,
                5000,
                42,
                &mut value,
                &mut std_error,
                &mut n_used,
                &mut n_total,
                &mut near_zero,
            )
        };
        assert_eq!(status, MbStatus::Ok);

        let st = ChshSettings::new(0.0, 2.04, 1.02, 3.06).unwrap();
        let events = sample_events(0.77, 0.0, st, 5000, 42).unwrap();
        let direct = estimate_chsh(&events, CorrelationKind::Renormalized).unwrap();
        assert_eq!(value, direct.value);
        assert_eq!(std_error, direct.std_error);
        assert_eq!(n_used, direct.n_used);
        assert_eq!(n_total, direct.n_total);
        assert_eq!(near_zero, direct.near_zero);
    }

    #[test]
    fn zero_event_count_is_invalid() {
        let (mut value, mut std_error) = (0.0, 0.0);
        let status = unsafe {
            mb_estimate_chsh(
                MbKind::Unitary,
                0.77,
                0.0,
                0.0,
                1.0,
                0.5,
                1.5,
                0,
                1,
                &mut value,
                &mut std_error,
                std::ptr::null_mut(),
                std::ptr::null_mut(),
                std::ptr::null_mut(),
            )
        };
        assert_eq!(status, MbStatus::InvalidArgument);
    }

    #[test]
    fn version_is_nul_terminated_ascii() {
        let ptr = mb_version();
        let s = unsafe { std::ffi::CStr::from_ptr(ptr) };
        assert_eq!(s.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }

    #[test]
    fn generated_header_is_committed_and_current() {
        let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/meson_bell.h");
        let text = std::fs::read_to_string(header).expect("header exists");
        for symbol in [
            "MESON_BELL_H",
            "mb_correlation",
            "mb_chsh_value",
            "mb_maximize",
            "mb_max_result_free",
            "mb_find_threshold",
            "mb_threshold_result_bracket",
            "mb_estimate_chsh",
            "mb_version",
            "MbMaxResult",
            "MbThresholdResult",
        ] {
            assert!(text.contains(symbol), "header misses {symbol}");
        }
    }
}
