#ifndef QGRANGER_H
#define QGRANGER_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QgStatus {
  QG_STATUS_OK = 0,
  QG_STATUS_NULL_POINTER = 1,
  QG_STATUS_INVALID_ARGUMENT = 2,
  QG_STATUS_NUMERIC = 3,
  QG_STATUS_PANIC = 4,
} QgStatus;

typedef enum QgVerdict {
  QG_VERDICT_NON_CAUSAL = 0,
  QG_VERDICT_CAUSAL = 1,
  QG_VERDICT_NOT_DECIDED = 2,
} QgVerdict;

/**
 * Opaque VAR model.
 */
typedef struct QgModel QgModel;

/**
 * Opaque lagged moments, estimated or exact.
 */
typedef struct QgMoments QgMoments;

/**
 * Opaque quantizer.
 */
typedef struct QgQuantizer QgQuantizer;

/**
 * Prior brackets on the unquantized statistics.
 */
typedef struct QgPriors {
  double rho_xz_max;
  double rho_zz_max;
  double sigma_x_lo;
  double sigma_x_hi;
  double sigma_z_lo;
  double sigma_z_hi;
  double gamma_xz_max;
} QgPriors;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *qg_version(void);

/**
 * Copy the last error message of this thread into `buf` (truncated, always
 * NUL-terminated when `len > 0`). Returns the full message length, 0 if none.
 *
 * # Safety
 * `buf` must be valid for `len` bytes or null.
 */
size_t qg_last_error_message(char *buf, size_t len);

/**
 * The four-state example system; `causal != 0` selects the coupled variant.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum QgStatus qg_model_example(bool causal, struct QgModel **out);

/**
 * Build a model from row-major `dim x dim` transition and noise covariance.
 *
 * # Safety
 * `transition` and `noise_cov` must hold `dim * dim` values; `out` must be valid.
 */
enum QgStatus qg_model_new(const double *transition,
                           const double *noise_cov,
                           size_t dim,
                           size_t x_index,
                           size_t z_index,
                           struct QgModel **out);

/**
 * # Safety
 * `model` must come from a `qg_model_*` constructor or be null.
 */
void qg_model_free(struct QgModel *model);

/**
 * Simulate `n` samples into caller buffers `x` and `z`.
 *
 * # Safety
 * `x` and `z` must be writable for `n` values.
 */
enum QgStatus qg_model_simulate(const struct QgModel *model,
                                size_t n,
                                size_t burn_in,
                                uint64_t seed,
                                double *x,
                                double *z);

/**
 * # Safety
 * `out` must be valid.
 */
enum QgStatus qg_quantizer_binary(double threshold, struct QgQuantizer **out);

/**
 * Uniform quantizer on `[lo, hi]` with `2^bits` cells plus the upper overload level.
 *
 * # Safety
 * `out` must be valid.
 */
enum QgStatus qg_quantizer_saturated(double lo, double hi, uint32_t bits, struct QgQuantizer **out);

/**
 * Non-uniform quantizer: `n_thresholds` increasing thresholds, one more level.
 *
 * # Safety
 * `thresholds` must hold `n_thresholds` values and `levels` `n_thresholds + 1`.
 */
enum QgStatus qg_quantizer_finite(const double *thresholds,
                                  size_t n_thresholds,
                                  const double *levels,
                                  struct QgQuantizer **out);

/**
 * # Safety
 * `out` must be valid.
 */
enum QgStatus qg_quantizer_uniform(double delta, struct QgQuantizer **out);

/**
 * # Safety
 * `quantizer` must come from a `qg_quantizer_*` constructor or be null.
 */
void qg_quantizer_free(struct QgQuantizer *quantizer);

/**
 * Quantize `n` samples; `input` and `out` may alias.
 *
 * # Safety
 * Both buffers must hold `n` values.
 */
enum QgStatus qg_quantizer_apply(const struct QgQuantizer *quantizer,
                                 const double *input_ptr,
                                 size_t n,
                                 double *out);

/**
 * Estimate lagged moments up to depth `q` from `n` samples.
 *
 * # Safety
 * `x` and `z` must hold `n` values; `out` must be valid.
 */
enum QgStatus qg_moments_estimate(const double *x,
                                  const double *z,
                                  size_t n,
                                  size_t m,
                                  size_t q,
                                  bool zero_mean,
                                  struct QgMoments **out);

/**
 * Exact moments of the model after quantization by `qx`, `qz`.
 *
 * # Safety
 * All handles must be valid; `out` must be valid.
 */
enum QgStatus qg_moments_quantized_exact(const struct QgModel *model,
                                         const struct QgQuantizer *qx,
                                         const struct QgQuantizer *qz,
                                         size_t m,
                                         size_t q,
                                         struct QgMoments **out);

/**
 * # Safety
 * `moments` must come from a `qg_moments_*` constructor or be null.
 */
void qg_moments_free(struct QgMoments *moments);

/**
 * Smallest singular value of the `(m+1) x (ell+m)` causality matrix.
 *
 * # Safety
 * `moments` and `out` must be valid.
 */
enum QgStatus qg_sigma_min(const struct QgMoments *moments, size_t m, size_t ell, double *out);

/**
 * Threshold test on sign data: CAUSAL iff `sigma_min(R(m, m)) > theta`.
 *
 * # Safety
 * `moments` must be valid; output pointers may be null.
 */
enum QgStatus qg_binary_test(const struct QgMoments *moments,
                             size_t m,
                             double theta,
                             enum QgVerdict *verdict_out,
                             double *sigma_min_out);

/**
 * Sufficient condition for finite quantizers at depth `q`. Writes the margin
 * `sqrt(N_o N_I) - sigma_min(C^Q)`; negative means CAUSAL.
 * `grid_density == 0` selects the analytic bounds.
 *
 * # Safety
 * All pointers must be valid; output pointers may be null.
 */
enum QgStatus qg_nonuniform_test(const struct QgMoments *moments,
                                 const struct QgPriors *priors,
                                 const struct QgQuantizer *qx,
                                 const struct QgQuantizer *qz,
                                 size_t m,
                                 size_t q,
                                 size_t grid_density,
                                 enum QgVerdict *verdict_out,
                                 double *margin_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QGRANGER_H */
