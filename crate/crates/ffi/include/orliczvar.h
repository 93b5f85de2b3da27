#ifndef ORLICZVAR_H
#define ORLICZVAR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes shared by every function of the interface.
 */
typedef enum OvStatus {
  OV_STATUS_OK = 0,
  OV_STATUS_NULL_POINTER = 1,
  OV_STATUS_INVALID_UTF8 = 2,
  OV_STATUS_INVALID_ARGUMENT = 3,
  OV_STATUS_DIMENSION_MISMATCH = 4,
  OV_STATUS_NUMERICAL = 5,
  OV_STATUS_HYPOTHESES_REJECTED = 6,
  OV_STATUS_PANIC = 7,
} OvStatus;

/**
 * An N-function together with its conjugate.
 */
typedef struct OvNFunction OvNFunction;

/**
 * The outcome of a solve.
 */
typedef struct OvSolveReport OvSolveReport;

/**
 * A sampled periodic trajectory.
 */
typedef struct OvTrajectory OvTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *ov_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ov_version(void);

/**
 * Builds an N-function from its JSON description.
 *
 * # Safety
 * `json` must be a valid NUL-terminated string and `out` a writable pointer.
 */
enum OvStatus ov_nfunction_from_json(const char *json, struct OvNFunction **out);

/**
 * # Safety
 * `h` must come from [`ov_nfunction_from_json`] and not be used afterwards.
 */
void ov_nfunction_free(struct OvNFunction *h);

/**
 * # Safety
 * `h` must be a live handle and `out` writable.
 */
enum OvStatus ov_nfunction_dim(const struct OvNFunction *h, size_t *out);

/**
 * `Phi(y)` for `y` of length `dim`.
 *
 * # Safety
 * `y` must point to `len` doubles and `out` be writable.
 */
enum OvStatus ov_nfunction_eval(const struct OvNFunction *h,
                                const double *y,
                                size_t len,
                                double *out);

/**
 * `grad Phi(y)` written to `out[0..len]`.
 *
 * # Safety
 * `y` and `out` must each point to `len` doubles.
 */
enum OvStatus ov_nfunction_gradient(const struct OvNFunction *h,
                                    const double *y,
                                    size_t len,
                                    double *out);

/**
 * `Phi*(zeta)`; may be `+inf` outside the effective domain.
 *
 * # Safety
 * `zeta` must point to `len` doubles and `out` be writable.
 */
enum OvStatus ov_conjugate_eval(const struct OvNFunction *h,
                                const double *zeta,
                                size_t len,
                                double *out);

/**
 * Trajectory on `n` uniform nodes of `[0, period)`; `values` holds `n * dim`
 * doubles, node-major.
 *
 * # Safety
 * `values` must point to `n * dim` doubles and `out` be writable.
 */
enum OvStatus ov_trajectory_new(double period,
                                size_t n,
                                size_t dim,
                                const double *values,
                                struct OvTrajectory **out);

/**
 * # Safety
 * `h` must come from this library and not be used afterwards.
 */
void ov_trajectory_free(struct OvTrajectory *h);

/**
 * Number of nodes and components.
 *
 * # Safety
 * `h` must be live; `n` and `dim` writable.
 */
enum OvStatus ov_trajectory_shape(const struct OvTrajectory *h, size_t *n, size_t *dim);

/**
 * Copies the node values into `out`, which must hold `n * dim` doubles.
 *
 * # Safety
 * `out` must point to `len` writable doubles.
 */
enum OvStatus ov_trajectory_values(const struct OvTrajectory *h, double *out, size_t len);

/**
 * Luxemburg norm of `u` with respect to `Phi`.
 *
 * # Safety
 * Both handles must be live and `out` writable.
 */
enum OvStatus ov_luxemburg_norm(const struct OvNFunction *phi,
                                const struct OvTrajectory *u,
                                double *out);

/**
 * Solves the problem described by a JSON problem specification. An
 * uncertified result is still `OV_STATUS_OK`; query
 * [`ov_report_certified`].
 *
 * # Safety
 * `json` must be a valid NUL-terminated string and `out` writable.
 */
enum OvStatus ov_solve_json(const char *json, struct OvSolveReport **out);

/**
 * # Safety
 * `h` must come from [`ov_solve_json`] and not be used afterwards.
 */
void ov_report_free(struct OvSolveReport *h);

/**
 * # Safety
 * `h` must be live and `out` writable.
 */
enum OvStatus ov_report_certified(const struct OvSolveReport *h, bool *out);

/**
 * Discrete action of the minimizer.
 *
 * # Safety
 * `h` must be live and `out` writable.
 */
enum OvStatus ov_report_action(const struct OvSolveReport *h, double *out);

/**
 * Largest Euler-Lagrange node residual of the minimizer.
 *
 * # Safety
 * `h` must be live and `out` writable.
 */
enum OvStatus ov_report_el_residual(const struct OvSolveReport *h, double *out);

/**
 * Copies the minimizer into a new trajectory handle.
 *
 * # Safety
 * `h` must be live and `out` writable.
 */
enum OvStatus ov_report_minimizer(const struct OvSolveReport *h, struct OvTrajectory **out);

/**
 * The full report as JSON; release with [`ov_string_free`].
 *
 * # Safety
 * `h` must be live and `out` writable.
 */
enum OvStatus ov_report_to_json(const struct OvSolveReport *h, char **out);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void ov_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ORLICZVAR_H */
