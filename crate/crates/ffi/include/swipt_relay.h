#ifndef SWIPT_RELAY_H
#define SWIPT_RELAY_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * CSI mode selectors accepted by the `mode` arguments.
 */
#define SWIPT_MODE_INSTANTANEOUS 0

#define SWIPT_MODE_STATISTICAL 1

#define SWIPT_MODE_NO_CSI 2

/**
 * Metric selectors accepted by [`swipt_mc_estimate`].
 */
#define SWIPT_METRIC_OUTAGE 0

#define SWIPT_METRIC_CAPACITY 1

/**
 * Result codes.
 */
typedef enum SwiptStatus {
  SWIPT_STATUS_OK = 0,
  SWIPT_STATUS_NULL_POINTER = 1,
  SWIPT_STATUS_INVALID_ARGUMENT = 2,
  /**
   * A quadrature or special-function evaluation did not converge.
   */
  SWIPT_STATUS_NUMERICAL = 3,
  SWIPT_STATUS_UNSUPPORTED = 4,
  /**
   * A Rust panic was caught at the boundary.
   */
  SWIPT_STATUS_PANIC = 5,
} SwiptStatus;

/**
 * Opaque link handle.
 */
typedef struct SwiptLink SwiptLink;

/**
 * System parameters. `gamma_th_db` is the outage threshold in dB.
 */
typedef struct SwiptParams {
  double eta;
  double theta;
  double tau;
  double d1;
  double d2;
  uint32_t n;
  double gamma_th_db;
} SwiptParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL if none. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *swipt_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *swipt_version(void);

/**
 * Builds a link with exponential correlation `r^{|i-j|}` on both hops.
 *
 * # Safety
 * `params` must point to a valid [`SwiptParams`]; `out` must be writable.
 */
enum SwiptStatus swipt_link_new_exponential(const struct SwiptParams *params,
                                            double r_rx,
                                            double r_tx,
                                            struct SwiptLink **out);

/**
 * Builds a link from explicit correlation matrices, row-major `n × n`.
 * The imaginary parts may be NULL for real matrices.
 *
 * # Safety
 * Each non-null matrix pointer must reference `n * n` readable doubles,
 * with `n = params->n`; `out` must be writable.
 */
enum SwiptStatus swipt_link_new_matrices(const struct SwiptParams *params,
                                         const double *rx_re,
                                         const double *rx_im,
                                         const double *tx_re,
                                         const double *tx_im,
                                         struct SwiptLink **out);

/**
 * Releases a link. NULL is ignored.
 *
 * # Safety
 * `link` must come from a `swipt_link_new_*` call and not be freed twice.
 */
void swipt_link_free(struct SwiptLink *link);

/**
 * Copies the (guarded, descending) receive and transmit eigenvalues into
 * `eig_r` and `eig_t`, each of length `n`.
 *
 * # Safety
 * `link` must be valid; both outputs must hold `n` doubles.
 */
enum SwiptStatus swipt_link_eigenvalues(const struct SwiptLink *link, double *eig_r, double *eig_t);

/**
 * Exact outage probability with instantaneous CSI.
 *
 * # Safety
 * `link` must be valid and `out` writable.
 */
enum SwiptStatus swipt_outage_exact_inst(const struct SwiptLink *link, double rho_db, double *out);

/**
 * Exact outage probability with statistical CSI.
 *
 * # Safety
 * `link` must be valid and `out` writable.
 */
enum SwiptStatus swipt_outage_exact_stat(const struct SwiptLink *link, double rho_db, double *out);

/**
 * Closed-form lower bound on the instantaneous-CSI outage.
 *
 * # Safety
 * `link` must be valid and `out` writable.
 */
enum SwiptStatus swipt_outage_lb_inst(const struct SwiptLink *link, double rho_db, double *out);

/**
 * High-SNR approximation of the instantaneous-CSI outage, clamped to `[0, 1]`.
 *
 * # Safety
 * `link` must be valid and `out` writable.
 */
enum SwiptStatus swipt_outage_highsnr_inst(const struct SwiptLink *link,
                                           double rho_db,
                                           double *out);

/**
 * High-SNR approximation of the statistical-CSI outage, clamped to `[0, 1]`.
 *
 * # Safety
 * `link` must be valid and `out` writable.
 */
enum SwiptStatus swipt_outage_highsnr_stat(const struct SwiptLink *link,
                                           double rho_db,
                                           double *out);

/**
 * Upper bound on the instantaneous-CSI ergodic capacity (bits/s/Hz).
 *
 * # Safety
 * `link` must be valid and `out` writable.
 */
enum SwiptStatus swipt_capacity_ub_inst(const struct SwiptLink *link, double rho_db, double *out);

/**
 * Upper bound on the statistical-CSI ergodic capacity (bits/s/Hz).
 *
 * # Safety
 * `link` must be valid and `out` writable.
 */
enum SwiptStatus swipt_capacity_ub_stat(const struct SwiptLink *link, double rho_db, double *out);

/**
 * Monte Carlo estimate of `metric` under `mode`. Results depend only on
 * `seed`, not on `workers`.
 *
 * # Safety
 * `link` must be valid; `mean` and `stderr` must be writable.
 */
enum SwiptStatus swipt_mc_estimate(const struct SwiptLink *link,
                                   uint32_t mode,
                                   uint32_t metric,
                                   double rho_db,
                                   uint64_t samples,
                                   uint64_t seed,
                                   uint32_t workers,
                                   double *mean,
                                   double *stderr);

/**
 * Power-splitting ratio maximizing the capacity upper bound of `mode`
 * (instantaneous or statistical) at `rho_db`.
 *
 * # Safety
 * `link` must be valid; `theta` and `value` must be writable.
 */
enum SwiptStatus swipt_optimize_theta(const struct SwiptLink *link,
                                      uint32_t mode,
                                      double rho_db,
                                      double *theta,
                                      double *value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SWIPT_RELAY_H */
