#ifndef ROUGHREG_H
#define ROUGHREG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum RrStatus {
  RR_STATUS_OK = 0,
  RR_STATUS_NULL_POINTER = 1,
  RR_STATUS_INVALID_ARGUMENT = 2,
  RR_STATUS_GRID_MISMATCH = 3,
  RR_STATUS_NON_FINITE = 4,
  RR_STATUS_NUMERICAL = 5,
  RR_STATUS_BUFFER_TOO_SMALL = 6,
  RR_STATUS_PANIC = 7,
} RrStatus;

/**
 * Second-order enhancement flavor.
 */
typedef enum RrFlavor {
  RR_FLAVOR_ITO = 0,
  RR_FLAVOR_STRAT = 1,
} RrFlavor;

/**
 * A path together with its second-order process.
 */
typedef struct RrEnhanced RrEnhanced;

/**
 * A controlled pair `(Y, Y')` over a reference path.
 */
typedef struct RrPair RrPair;

/**
 * A sampled path on a uniform grid.
 */
typedef struct RrPath RrPath;

/**
 * `f(x)` for `x` of length `dim`.
 */
typedef double (*RrScalarFn)(const double *x, size_t dim, void *user);

/**
 * Writes the gradient of `f` at `x` into `out` (length `dim`).
 */
typedef void (*RrGradFn)(const double *x, size_t dim, double *out, void *user);

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message, NUL-terminated, into
 * `buf` and returns the buffer size the full message needs.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t rr_last_error(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *rr_version(void);

/**
 * Path from `(steps + 1) * dim` row-major values.
 *
 * # Safety
 * `values` must be valid for `(steps + 1) * dim` reads; `out` must be writable.
 */
enum RrStatus rr_path_from_values(double horizon,
                                  size_t steps,
                                  size_t dim,
                                  const double *values,
                                  struct RrPath **out);

/**
 * Brownian path started at zero, from stream `stream` of seed `master`.
 *
 * # Safety
 * `out` must be writable.
 */
enum RrStatus rr_path_bm(double horizon,
                         size_t steps,
                         size_t dim,
                         uint64_t master,
                         uint64_t stream,
                         struct RrPath **out);

/**
 * Fractional Brownian path with independent components.
 *
 * # Safety
 * `out` must be writable.
 */
enum RrStatus rr_path_fbm(double horizon,
                          size_t steps,
                          double hurst,
                          size_t dim,
                          uint64_t master,
                          uint64_t stream,
                          struct RrPath **out);

/**
 * Grid steps and dimension of a path.
 *
 * # Safety
 * `path` must be a live handle; `steps` and `dim` must be writable.
 */
enum RrStatus rr_path_shape(const struct RrPath *path, size_t *steps, size_t *dim);

/**
 * Copies the row-major values of a path.
 *
 * # Safety
 * `path` must be a live handle; `out` must be valid for `len` writes.
 */
enum RrStatus rr_path_values(const struct RrPath *path, double *out, size_t len);

/**
 * # Safety
 * `path` must be null or a handle not yet freed.
 */
void rr_path_free(struct RrPath *path);

/**
 * Second-order enhancement of a path.
 *
 * # Safety
 * `path` must be a live handle; `out` must be writable.
 */
enum RrStatus rr_enhance(const struct RrPath *path, enum RrFlavor flavor, struct RrEnhanced **out);

/**
 * `XX_{t_j, t_k}` as a `dim x dim` block.
 *
 * # Safety
 * `e` must be a live handle; `out` must be valid for `len` writes.
 */
enum RrStatus rr_enhanced_block(const struct RrEnhanced *e,
                                size_t j,
                                size_t k,
                                double *out,
                                size_t len);

/**
 * Chen residual on the triple `j <= m <= k`.
 *
 * # Safety
 * `e` must be a live handle; `out` must be writable.
 */
enum RrStatus rr_chen_residual(const struct RrEnhanced *e,
                               size_t j,
                               size_t m,
                               size_t k,
                               double *out);

/**
 * # Safety
 * `e` must be null or a handle not yet freed.
 */
void rr_enhanced_free(struct RrEnhanced *e);

/**
 * Pair from explicit arrays: `y` is `(steps + 1) x n`, `yprime` is
 * `(steps + 1) x n x dim`, both row-major, over the grid of `x`.
 *
 * # Safety
 * `x` must be a live handle and the arrays valid for the stated lengths.
 */
enum RrStatus rr_pair_from_arrays(const struct RrPath *x,
                                  size_t n,
                                  const double *y,
                                  const double *yprime,
                                  struct RrPair **out);

/**
 * Pair `(f(X), grad f(X)^T)` from callbacks; the gradient is checked against
 * finite differences.
 *
 * # Safety
 * `x` must be a live handle; the callbacks must be safe to call with `user`.
 */
enum RrStatus rr_pair_gradient(const struct RrPath *x,
                               RrScalarFn f,
                               RrGradFn grad,
                               void *user,
                               struct RrPair **out);

/**
 * Rows `n` of `Y` and columns `dim` of `X` for a pair.
 *
 * # Safety
 * `pair` must be a live handle; `n` and `dim` must be writable.
 */
enum RrStatus rr_pair_shape(const struct RrPair *pair, size_t *n, size_t *dim);

/**
 * # Safety
 * `pair` must be null or a handle not yet freed.
 */
void rr_pair_free(struct RrPair *pair);

/**
 * Regularized rough integral on `[0, t]`, an `n x dim` matrix.
 *
 * # Safety
 * Handles must be live; `out` must be valid for `len` writes.
 */
enum RrStatus rr_rough_integral_reg(const struct RrPair *pair,
                                    const struct RrEnhanced *e,
                                    double eps,
                                    double t,
                                    double *out,
                                    size_t len);

/**
 * Backward rough integral on `[0, t]`, an `n x dim` matrix.
 *
 * # Safety
 * Handles must be live; `out` must be valid for `len` writes.
 */
enum RrStatus rr_rough_integral_backward(const struct RrPair *pair,
                                         const struct RrEnhanced *e,
                                         double eps,
                                         double t,
                                         double *out,
                                         size_t len);

/**
 * Dyadic sewing of the germ on `[0, t]`. `converged` is set to 0 when the
 * tolerance was not reached; the finest value is still written.
 *
 * # Safety
 * Handles must be live; `out` must be valid for `len` writes and the scalar
 * outputs writable.
 */
enum RrStatus rr_sewing_integral(const struct RrPair *pair,
                                 const struct RrEnhanced *e,
                                 double t,
                                 double tol,
                                 size_t max_level,
                                 double *out,
                                 size_t len,
                                 size_t *level,
                                 double *delta,
                                 int32_t *converged);

/**
 * Scalar quadratic variation `[X, X]^R` at width `eps` on `[0, t]`.
 *
 * # Safety
 * `path` must be a live handle; `out` must be writable.
 */
enum RrStatus rr_scalar_qv(const struct RrPath *path, double eps, double t, double *out);

/**
 * Regularized covariation `C(eps, X1, X2)(t)` of two scalar paths.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum RrStatus rr_c_eps(const struct RrPath *x1,
                       const struct RrPath *x2,
                       double eps,
                       double t,
                       double *out);

/**
 * Orthogonality statistic of a pair's remainder.
 *
 * # Safety
 * `pair` must be a live handle; `out` must be writable.
 */
enum RrStatus rr_orthogonality_stat(const struct RrPair *pair, double eps, double t, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ROUGHREG_H */
