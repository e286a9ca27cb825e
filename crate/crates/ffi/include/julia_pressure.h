#ifndef JULIA_PRESSURE_H
#define JULIA_PRESSURE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum JpStatus {
  JP_STATUS_OK = 0,
  JP_STATUS_NULL_POINTER = 1,
  JP_STATUS_INVALID_ARGUMENT = 2,
  JP_STATUS_MAP_ERROR = 3,
  JP_STATUS_SAMPLE_ERROR = 4,
  JP_STATUS_COMPUTE_ERROR = 5,
  JP_STATUS_PANIC = 6,
} JpStatus;

/**
 * A map together with a Julia-set sample and its periodic-point cache.
 */
typedef struct JpEnumerator JpEnumerator;

/**
 * A rational map `P/Q`.
 */
typedef struct JpMap JpMap;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null if none.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *jp_last_error(void);

/**
 * Builds `P/Q` from ascending coefficient arrays. `*_im` may be null for real
 * coefficients; `den_len == 0` means `Q = 1`.
 *
 * # Safety
 * Non-null arrays must hold the stated number of elements; `out` must be writable.
 */
enum JpStatus jp_map_new(const double *num_re,
                         const double *num_im,
                         size_t num_len,
                         const double *den_re,
                         const double *den_im,
                         size_t den_len,
                         struct JpMap **out);

/**
 * Builds `z^2 + c`.
 *
 * # Safety
 * `out` must be writable.
 */
enum JpStatus jp_map_quadratic(double c_re, double c_im, struct JpMap **out);

/**
 * # Safety
 * `map` must be null or a handle from `jp_map_new`/`jp_map_quadratic` not yet freed.
 */
void jp_map_free(struct JpMap *map);

/**
 * # Safety
 * `map` must be a live handle; `out` must be writable.
 */
enum JpStatus jp_map_degree(const struct JpMap *map, size_t *out);

/**
 * Evaluates `f(z)`. `*out_infinite` is set to 1 when `f(z) = infinity`, in
 * which case the coordinates are left untouched.
 *
 * # Safety
 * `map` must be a live handle; the output pointers must be writable.
 */
enum JpStatus jp_map_eval(const struct JpMap *map,
                          double re,
                          double im,
                          double *out_re,
                          double *out_im,
                          int32_t *out_infinite);

/**
 * Samples the Julia set by inverse iteration and prepares periodic-point
 * enumeration with default search options. The map is copied.
 *
 * # Safety
 * `map` must be a live handle; `out` must be writable.
 */
enum JpStatus jp_enumerator_new(const struct JpMap *map,
                                size_t sample_count,
                                size_t depth,
                                uint64_t seed,
                                struct JpEnumerator **out);

/**
 * # Safety
 * `e` must be null or a handle from `jp_enumerator_new` not yet freed.
 */
void jp_enumerator_free(struct JpEnumerator *e);

/**
 * # Safety
 * `e` must be a live handle; `out` must be writable.
 */
enum JpStatus jp_sample_len(const struct JpEnumerator *e, size_t *out);

/**
 * Copies up to `cap` sample points into `re`/`im`; `*out_len` receives the
 * number copied.
 *
 * # Safety
 * `re` and `im` must hold `cap` writable elements; `out_len` must be writable.
 */
enum JpStatus jp_sample_points(const struct JpEnumerator *e,
                               double *re,
                               double *im,
                               size_t cap,
                               size_t *out_len);

/**
 * Finds the fixed points of `f^n`. `*out_found` is the number of distinct
 * points, `*out_expected` the count predicted by the degree.
 *
 * # Safety
 * `e` must be a live handle; the output pointers must be writable.
 */
enum JpStatus jp_periodic_count(struct JpEnumerator *e,
                                size_t n,
                                size_t *out_found,
                                size_t *out_expected);

/**
 * Copies up to `cap` fixed points of `f^n` with the logarithm of their
 * multiplier modulus; `*out_len` receives the number copied.
 *
 * # Safety
 * Non-null arrays must hold `cap` writable elements; `out_len` must be writable.
 */
enum JpStatus jp_periodic_points(struct JpEnumerator *e,
                                 size_t n,
                                 double *re,
                                 double *im,
                                 double *log_abs_multiplier,
                                 size_t cap,
                                 size_t *out_len);

/**
 * Periodic-point pressure of `potential` over `n_min..=n_max` with the given
 * tail window. `potential` uses the library's text form; null means zero.
 *
 * # Safety
 * `e` must be a live handle; `potential_expr` must be null or NUL-terminated;
 * `out` must be writable.
 */
enum JpStatus jp_pressure_pp(struct JpEnumerator *e,
                             const char *potential_expr,
                             double alpha,
                             double c,
                             size_t n_min,
                             size_t n_max,
                             size_t window,
                             double *out);

/**
 * Root of `t -> P_P(-t log|f'|)` in `[t_lo, t_hi]` to within `tol`, using the
 * largest `n <= n_max` whose enumeration is complete.
 *
 * # Safety
 * `e` must be a live handle; `out` must be writable.
 */
enum JpStatus jp_bowen_root(struct JpEnumerator *e,
                            double alpha,
                            double c,
                            size_t n_min,
                            size_t n_max,
                            double t_lo,
                            double t_hi,
                            double tol,
                            double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* JULIA_PRESSURE_H */
