#ifndef MESON_BELL_H
#define MESON_BELL_H

/* Generated by cbindgen from meson-bell-ffi. Regenerated on build; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>


// Result of every fallible call in this interface.
typedef enum MbStatus {
  // The call succeeded and all requested outputs were written.
  MB_STATUS_OK = 0,
  // A required pointer argument was null.
  MB_STATUS_NULL_POINTER,
  // An argument failed validation (range, finiteness, count).
  MB_STATUS_INVALID_ARGUMENT,
  // Parameters outside the physical domain of the requested kernel.
  MB_STATUS_DOMAIN,
  // No event survived the renormalized post-selection, or the sample was
  // otherwise too small to estimate from.
  MB_STATUS_DEGENERATE,
  // The requested threshold does not exist for this correlation kind or
  // could not be bracketed.
  MB_STATUS_NO_THRESHOLD,
  // The violation onset is not a single crossing in the scanned range.
  MB_STATUS_AMBIGUOUS_CROSSING,
  // Internal invariant violation; indicates a bug, not a caller error.
  MB_STATUS_INTERNAL,
  // A panic was caught at the language boundary.
  MB_STATUS_PANIC,
} MbStatus;

// Correlation kind selector, mirroring the library's three kernels.
typedef enum MbKind {
  // Flavor correlation of surviving amplitudes, damped by decay.
  MB_KIND_NON_UNITARY = 0,
  // Norm-conserving correlation including decay products.
  MB_KIND_UNITARY,
  // Survivor-renormalized (post-selected) correlation.
  MB_KIND_RENORMALIZED,
} MbKind;

// Opaque handle to a maximization result; release with
// `mb_max_result_free`.
typedef struct MbMaxResult MbMaxResult;

// Opaque handle to a threshold-search result; release with
// `mb_threshold_result_free`.
typedef struct MbThresholdResult MbThresholdResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Version of this interface as a static NUL-terminated string.
const char *mb_version(void);

// Correlation E(tau_l, tau_r) for dimensionless mixing x and width
// asymmetry y (ignored by the nonunitary kernel).
//
// # Safety
// `out` must be a valid pointer to a double.
enum MbStatus mb_correlation(enum MbKind kind,
                             double x,
                             double y,
                             double tau_l,
                             double tau_r,
                             double *out);

// CHSH combination S at fixed settings (tau_a, tau_a_prime, tau_b,
// tau_b_prime).
//
// # Safety
// `out` must be a valid pointer to a double.
enum MbStatus mb_chsh_value(enum MbKind kind,
                            double x,
                            double y,
                            double tau_a,
                            double tau_a_prime,
                            double tau_b,
                            double tau_b_prime,
                            double *out);

// Global maximum of S over settings in [0, t_max]^4. Pass t_max = 0 and
// grid_points = 0 for the defaults (8.0 and 13). On success `*out` owns a
// new handle.
//
// # Safety
// `out` must be a valid pointer to an `MbMaxResult*`.
enum MbStatus mb_maximize(enum MbKind kind,
                          double x,
                          double y,
                          double t_max,
                          size_t grid_points,
                          struct MbMaxResult **out);

// Largest S found; NaN if the handle is null.
//
// # Safety
// `handle` must be null or a live handle from `mb_maximize`.
double mb_max_result_s_max(const struct MbMaxResult *handle);

// Writes the maximizing settings as [tau_a, tau_a_prime, tau_b,
// tau_b_prime] into `out`.
//
// # Safety
// `handle` must be a live handle and `out` must point to 4 doubles.
enum MbStatus mb_max_result_settings(const struct MbMaxResult *handle, double *out);

// Number of kernel evaluations spent; 0 if the handle is null.
//
// # Safety
// `handle` must be null or a live handle from `mb_maximize`.
uint64_t mb_max_result_evaluations(const struct MbMaxResult *handle);

// Whether the top refined candidates agreed within the optimizer's
// resolution; false if the handle is null.
//
// # Safety
// `handle` must be null or a live handle from `mb_maximize`.
bool mb_max_result_converged(const struct MbMaxResult *handle);

// Releases a maximization handle; null is a no-op.
//
// # Safety
// `handle` must be null or a live handle from `mb_maximize`, not yet freed.
void mb_max_result_free(struct MbMaxResult *handle);

// Critical mixing parameter where max S first exceeds 2, for the decaying
// kinds (the renormalized kernel has no threshold). Pass t_max = 0 and
// grid_points = 0 for the defaults. On success `*out` owns a new handle.
//
// # Safety
// `out` must be a valid pointer to an `MbThresholdResult*`.
enum MbStatus mb_find_threshold(enum MbKind kind,
                                double y,
                                double tolerance,
                                double t_max,
                                size_t grid_points,
                                struct MbThresholdResult **out);

// Critical x; NaN if the handle is null.
//
// # Safety
// `handle` must be null or a live handle from `mb_find_threshold`.
double mb_threshold_result_critical_x(const struct MbThresholdResult *handle);

// Maximized S at the critical x; NaN if the handle is null.
//
// # Safety
// `handle` must be null or a live handle from `mb_find_threshold`.
double mb_threshold_result_s_at_critical(const struct MbThresholdResult *handle);

// Bisection iterations spent; 0 if the handle is null.
//
// # Safety
// `handle` must be null or a live handle from `mb_find_threshold`.
uint32_t mb_threshold_result_iterations(const struct MbThresholdResult *handle);

// Writes the final bracket [x_lo, x_hi] around the crossing.
//
// # Safety
// `handle` must be a live handle; `x_lo` and `x_hi` must be valid pointers.
enum MbStatus mb_threshold_result_bracket(const struct MbThresholdResult *handle,
                                          double *x_lo,
                                          double *x_hi);

// Releases a threshold handle; null is a no-op.
//
// # Safety
// `handle` must be null or a live handle from `mb_find_threshold`, not yet
// freed.
void mb_threshold_result_free(struct MbThresholdResult *handle);

// Runs a seeded pseudo-experiment with `n_per_setting` events under each of
// the four CHSH settings and estimates S. Outputs other than `value` and
// `std_error` may be null to skip them. Identical inputs give identical
// results on any machine and thread count.
//
// # Safety
// `value` and `std_error` must be valid pointers; `n_used`, `n_total` and
// `near_zero` must each be null or valid.
enum MbStatus mb_estimate_chsh(enum MbKind kind,
                               double x,
                               double y,
                               double tau_a,
                               double tau_a_prime,
                               double tau_b,
                               double tau_b_prime,
                               size_t n_per_setting,
                               uint64_t seed,
                               double *value,
                               double *std_error,
                               uint64_t *n_used,
                               uint64_t *n_total,
                               bool *near_zero);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MESON_BELL_H */
