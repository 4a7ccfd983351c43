#ifndef CHEBKERN_H
#define CHEBKERN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes shared by all functions.
typedef enum ChebkernStatus {
  CHEBKERN_STATUS_OK = 0,
  CHEBKERN_STATUS_NULL_POINTER = 1,
  CHEBKERN_STATUS_DOMAIN = 2,
  CHEBKERN_STATUS_INVALID_ARGUMENT = 3,
  CHEBKERN_STATUS_DIMENSION_MISMATCH = 4,
  CHEBKERN_STATUS_DEGENERATE_SAMPLE = 5,
  CHEBKERN_STATUS_PRECONDITION = 6,
  CHEBKERN_STATUS_FORMAT = 7,
  CHEBKERN_STATUS_IO = 8,
  CHEBKERN_STATUS_PANIC = 9,
} ChebkernStatus;

// Opaque handle to a trained network.
typedef struct ChebkernModel ChebkernModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL after a success.
//
// The pointer stays valid until the next call into this library on the same thread.
const char *chebkern_last_error(void);

// Chebyshev polynomial `T_degree(x)`.
//
// # Safety
// `out` must be valid for one write.
enum ChebkernStatus chebkern_cheb_eval(size_t degree, double x, double *out);

// Integral of `T_degree` over `[a, b]`.
//
// # Safety
// `out` must be valid for one write.
enum ChebkernStatus chebkern_segment_integral(size_t degree, double a, double b, double *out);

// First `count` Chebyshev moments of a weighted spectrum.
//
// # Safety
// `eigenvalues` and `weights` must hold `len` values; `out` must hold `count`.
enum ChebkernStatus chebkern_moments(const double *eigenvalues,
                                     const double *weights,
                                     size_t len,
                                     size_t count,
                                     double *out);

// Minimum-norm least-squares effective coefficients for a spectrum on grid `(k, l)`.
//
// # Safety
// `eigenvalues` and `weights` must hold `len` values; `out` must hold `moment_count`.
enum ChebkernStatus chebkern_lsq_solve(size_t k,
                                       size_t l,
                                       const double *eigenvalues,
                                       const double *weights,
                                       size_t len,
                                       size_t moment_count,
                                       double *out);

// Upper-bound cost of effective coefficients `c` against a spectrum on grid `(k, l)`.
//
// # Safety
// `eigenvalues` and `weights` must hold `len` values; `c` must hold `moment_count`.
enum ChebkernStatus chebkern_cost_upper(size_t k,
                                        size_t l,
                                        const double *eigenvalues,
                                        const double *weights,
                                        size_t len,
                                        const double *c,
                                        size_t moment_count,
                                        double *out);

// Upper-bound cost of the Gaussian-kernel baseline with its λ chosen for `(k, l, moment_count)`.
//
// # Safety
// `eigenvalues` and `weights` must hold `len` values; `out` and `lambda_out` (if non-NULL) one value each.
enum ChebkernStatus chebkern_git_cost(size_t k,
                                      size_t l,
                                      const double *eigenvalues,
                                      const double *weights,
                                      size_t len,
                                      size_t moment_count,
                                      double *out,
                                      double *lambda_out);

// Loads a network saved by the `chebkern` tool.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be valid for one write.
enum ChebkernStatus chebkern_model_load(const char *path, struct ChebkernModel **out);

// Releases a handle from [`chebkern_model_load`]. NULL is ignored.
//
// # Safety
// `model` must come from [`chebkern_model_load`] and not be used afterwards.
void chebkern_model_free(struct ChebkernModel *model);

// Number of moments the network expects.
//
// # Safety
// `model` must be a live handle; `out` must be valid for one write.
enum ChebkernStatus chebkern_model_moment_count(const struct ChebkernModel *model, size_t *out);

// Predicts the row-major `M x M` kernel matrix from `M` moments.
//
// # Safety
// `model` must be a live handle; `moments` must hold `moment_count` values and
// `out` `moment_count * moment_count`.
enum ChebkernStatus chebkern_model_predict(const struct ChebkernModel *model,
                                           const double *moments,
                                           size_t moment_count,
                                           double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CHEBKERN_H */
