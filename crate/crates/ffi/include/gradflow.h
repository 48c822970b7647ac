#ifndef GRADFLOW_H
#define GRADFLOW_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GfStatus {
  GF_STATUS_OK = 0,
  GF_STATUS_NULL_POINTER = 1,
  GF_STATUS_INVALID_UTF8 = 2,
  GF_STATUS_PARSE = 3,
  GF_STATUS_INVALID_ARGUMENT = 4,
  GF_STATUS_OUT_OF_RANGE = 5,
  GF_STATUS_FLOW = 6,
  GF_STATUS_ESTIMATE = 7,
  GF_STATUS_SCENARIO = 8,
  GF_STATUS_BUFFER_TOO_SMALL = 9,
  GF_STATUS_PANIC = 10,
} GfStatus;

typedef enum GfTermination {
  GF_TERMINATION_REACHED_R_MIN = 0,
  GF_TERMINATION_GRADIENT_VANISHED = 1,
  GF_TERMINATION_STEP_BUDGET = 2,
  GF_TERMINATION_LEFT_DOMAIN = 3,
} GfTermination;

typedef enum GfPrecision {
  GF_PRECISION_DOUBLE = 0,
  GF_PRECISION_EXTENDED = 1,
} GfPrecision;

/**
 * Opaque polynomial handle.
 */
typedef struct GfPolynomial GfPolynomial;

/**
 * Opaque trajectory handle.
 */
typedef struct GfTrajectory GfTrajectory;

/**
 * Integrator settings. Fill with [`gf_integrator_config_default`] and then
 * adjust individual fields.
 */
typedef struct GfIntegratorConfig {
  double r_min;
  double rel_tol;
  /**
   * Relative to the current radius.
   */
  double abs_tol;
  double step_fraction;
  uint64_t max_steps;
  /**
   * A [`GfPrecision`] value.
   */
  uint32_t precision;
} GfIntegratorConfig;

/**
 * Scalar data of one recorded trajectory point.
 */
typedef struct GfSample {
  double s;
  double s_tilde;
  double r;
  double f;
  double radial;
  double spherical_norm;
} GfSample;

/**
 * Check tally of one scenario run.
 */
typedef struct GfScenarioResult {
  size_t checks_total;
  size_t checks_failed;
  size_t starts;
} GfScenarioResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *gf_version(void);

/**
 * Copies the last error message of this thread into `buf`.
 *
 * `needed` receives the message length including the terminator. With a
 * null or short `buf` nothing is copied and `BufferTooSmall` is returned.
 *
 * # Safety
 * `buf` must be null or writable for `len` bytes; `needed` must be null or valid.
 */
enum GfStatus gf_last_error_message(char *buf, size_t len, size_t *needed);

/**
 * Parses a polynomial in `x1, x2, ...`. `dimension = 0` infers it from the
 * highest variable index.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be a valid pointer.
 */
enum GfStatus gf_polynomial_parse(const char *text, size_t dimension, struct GfPolynomial **out);

/**
 * # Safety
 * `p` must be null or a handle from [`gf_polynomial_parse`] not yet freed.
 */
void gf_polynomial_free(struct GfPolynomial *p);

/**
 * # Safety
 * `p` must be a live handle; `out` a valid pointer.
 */
enum GfStatus gf_polynomial_dimension(const struct GfPolynomial *p, size_t *out);

/**
 * Value of `f` at `x[0..n]`.
 *
 * # Safety
 * `p` must be a live handle, `x` readable for `n` values, `value` valid.
 */
enum GfStatus gf_polynomial_evaluate(const struct GfPolynomial *p,
                                     const double *x,
                                     size_t n,
                                     double *value);

/**
 * Gradient of `f` at `x[0..n]`, written to `grad[0..n]`.
 *
 * # Safety
 * `p` must be a live handle; `x` readable and `grad` writable for `n` values.
 */
enum GfStatus gf_polynomial_gradient(const struct GfPolynomial *p,
                                     const double *x,
                                     size_t n,
                                     double *grad);

/**
 * Defaults for the [`GfPrecision`] code `precision`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum GfStatus gf_integrator_config_default(uint32_t precision, struct GfIntegratorConfig *out);

/**
 * Integrates the unit-speed gradient flow of `p` from `x0[0..n]`.
 * A null `config` selects the binary64 defaults.
 *
 * # Safety
 * `p` must be a live handle, `x0` readable for `n` values, `config` null
 * or valid, `out` a valid pointer.
 */
enum GfStatus gf_integrate(const struct GfPolynomial *p,
                           const double *x0,
                           size_t n,
                           const struct GfIntegratorConfig *config,
                           struct GfTrajectory **out);

/**
 * # Safety
 * `t` must be null or a handle from [`gf_integrate`] not yet freed.
 */
void gf_trajectory_free(struct GfTrajectory *t);

/**
 * Number of recorded samples.
 *
 * # Safety
 * `t` must be a live handle; `out` a valid pointer.
 */
enum GfStatus gf_trajectory_len(const struct GfTrajectory *t, size_t *out);

/**
 * # Safety
 * `t` must be a live handle; `out` a valid pointer.
 */
enum GfStatus gf_trajectory_termination(const struct GfTrajectory *t, enum GfTermination *out);

/**
 * Scalar fields of sample `i`.
 *
 * # Safety
 * `t` must be a live handle; `out` a valid pointer.
 */
enum GfStatus gf_trajectory_sample(const struct GfTrajectory *t, size_t i, struct GfSample *out);

/**
 * Coordinates of sample `i`, written to `x[0..n]`; `n` must equal the dimension.
 *
 * # Safety
 * `t` must be a live handle; `x` writable for `n` values.
 */
enum GfStatus gf_trajectory_point(const struct GfTrajectory *t, size_t i, double *x, size_t n);

/**
 * Total arc length of the radial projection onto the unit sphere.
 *
 * # Safety
 * `t` must be a live handle; `out` a valid pointer.
 */
enum GfStatus gf_trajectory_spherical_length(const struct GfTrajectory *t, double *out);

/**
 * Characteristic exponent as `num/den`, with the unrounded tail limit in `raw`.
 *
 * # Safety
 * `t` must be a live handle; the outputs valid pointers (`raw` may be null).
 */
enum GfStatus gf_estimate_exponent(const struct GfTrajectory *t,
                                   int64_t *num,
                                   int64_t *den,
                                   double *raw);

/**
 * Limit of `f/r^l` along the trajectory for `l = l_num/l_den`.
 *
 * # Safety
 * `t` must be a live handle; `a` a valid pointer.
 */
enum GfStatus gf_estimate_critical_value(const struct GfTrajectory *t,
                                         int64_t l_num,
                                         int64_t l_den,
                                         double *a);

/**
 * Runs a shipped scenario with all its checks. Failed checks are counted in
 * `out`, not reported as an error status.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` a valid pointer.
 */
enum GfStatus gf_scenario_run(const char *name, struct GfScenarioResult *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GRADFLOW_H */
