#ifndef CURVLAB_H
#define CURVLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CurvStatus {
  CURV_STATUS_OK = 0,
  /**
   * The computation succeeded and the verdict is a failure.
   */
  CURV_STATUS_VERDICT_FAIL = 1,
  /**
   * Malformed input: parse errors, unknown names.
   */
  CURV_STATUS_USAGE = 2,
  /**
   * Evaluation failed: singular metric, domain error.
   */
  CURV_STATUS_EVAL = 3,
  CURV_STATUS_NULL_ARGUMENT = 4,
  CURV_STATUS_INVALID_UTF8 = 5,
  /**
   * Output buffer too small.
   */
  CURV_STATUS_BUFFER_TOO_SMALL = 6,
  CURV_STATUS_PANIC = 7,
} CurvStatus;

/**
 * Parsed metric file.
 */
typedef struct CurvMetric CurvMetric;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses metric-file text into a new handle stored in `*out`.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CurvStatus curv_metric_parse(const char *text, struct CurvMetric **out);

/**
 * Releases a handle; null is ignored.
 *
 * # Safety
 * `m` must come from [`curv_metric_parse`] and not be used afterwards.
 */
void curv_metric_free(struct CurvMetric *m);

/**
 * Number of coordinates, or 0 for a null handle.
 *
 * # Safety
 * `m` must be null or a live handle.
 */
size_t curv_metric_dimension(const struct CurvMetric *m);

/**
 * Binds parameter `name` to `value`.
 *
 * # Safety
 * `m` must be a live handle and `name` a NUL-terminated string.
 */
enum CurvStatus curv_metric_set_param(struct CurvMetric *m, const char *name, double value);

/**
 * Writes `R_ijkl` (row-major, `n⁴` values) at `point` into `out`.
 *
 * # Safety
 * `point` must hold `len` values and `out` room for `out_len` values.
 */
enum CurvStatus curv_riemann(const struct CurvMetric *m,
                             const double *point,
                             size_t len,
                             double *out,
                             size_t out_len);

/**
 * Chern–Simons density at `point`, raw or divided by `√|det g|`.
 *
 * # Safety
 * `point` must hold `len` values and `out` must be valid.
 */
enum CurvStatus curv_cs_density(const struct CurvMetric *m,
                                const double *point,
                                size_t len,
                                bool normalized,
                                double *out);

/**
 * Constant-curvature check over the file's sample plan; the report is
 * returned as JSON. `estimate` ignores `lambda`; `tol ≤ 0` uses the default.
 *
 * # Safety
 * `m` must be a live handle and `out_json` a valid pointer.
 */
enum CurvStatus curv_check_constant_curvature(const struct CurvMetric *m,
                                              double lambda,
                                              bool estimate,
                                              double tol,
                                              char **out_json);

/**
 * Residuals of the named system over the file's fields and plan, as JSON.
 *
 * # Safety
 * `m` must be a live handle, `system` NUL-terminated, `out_json` valid.
 */
enum CurvStatus curv_residual(const struct CurvMetric *m,
                              const char *system,
                              double tol,
                              char **out_json);

/**
 * Runs a corpus case (or `"all"`); `VerdictFail` if any outcome differs from its expectation.
 *
 * # Safety
 * `name` must be NUL-terminated and `out_json` valid.
 */
enum CurvStatus curv_corpus_run(const char *name, char **out_json);

/**
 * Message for the last failed call on this thread; empty after a success.
 * Valid until the next call on the same thread.
 */
const char *curv_last_error(void);

/**
 * Releases a string returned by this library; null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void curv_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CURVLAB_H */
