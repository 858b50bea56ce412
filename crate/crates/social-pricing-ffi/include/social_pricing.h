#ifndef SOCIAL_PRICING_H
#define SOCIAL_PRICING_H

/* Generated by cbindgen from social-pricing-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every call.
 */
typedef enum {
  /**
   * Success.
   */
  SP_STATUS_OK = 0,
  /**
   * Invalid configuration or input shape.
   */
  SP_STATUS_CONFIG = 1,
  /**
   * The solver could not produce an equilibrium for this instance.
   */
  SP_STATUS_SOLVER = 2,
  /**
   * Underlying I/O failure.
   */
  SP_STATUS_IO = 3,
  /**
   * A required pointer argument was null.
   */
  SP_STATUS_NULL_ARG = 4,
  /**
   * A string argument was not valid UTF-8.
   */
  SP_STATUS_UTF8 = 5,
} SpStatus;

/**
 * Opaque market handle wrapping a validated configuration.
 */
typedef struct SpMarket SpMarket;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parse a market configuration from JSON (the same schema as the CLI's
 * `market` block) and hand back an owned handle through `out`.
 *
 * # Safety
 * `json` must point to a NUL-terminated byte string valid for the duration
 * of the call. `out` must be valid for one pointer-sized write.
 */
SpStatus sp_market_from_json(const char *json, SpMarket **out);

/**
 * Release a handle returned by `sp_market_from_json`. Null is a no-op.
 *
 * # Safety
 * `market` must be null or a pointer previously returned by
 * `sp_market_from_json` that has not been freed already.
 */
void sp_market_free(SpMarket *market);

/**
 * Copy the most recent error message on this thread into `buf`, truncating
 * to `cap - 1` bytes and always NUL-terminating when `cap > 0`. Returns
 * the full message length in bytes (excluding the NUL), so a caller can
 * size a buffer and call again.
 *
 * # Safety
 * `buf` must be valid for `cap` bytes of writes, unless `cap` is zero or
 * `buf` is null (then nothing is written).
 */
size_t sp_last_error_message(char *buf, size_t cap);

/**
 * Solve the profiling equilibrium, routing the accuracy endpoints to their
 * benchmark solutions. Writes the activity threshold, the uniform price,
 * and the fixed-point residual.
 *
 * # Safety
 * `market` must be a live handle from `sp_market_from_json`; each non-null
 * out pointer must be valid for one f64 write.
 */
SpStatus sp_solve_pbe(const SpMarket *market, double *v_star, double *p0_star, double *residual);

/**
 * Solve the price-commitment variant. Writes the announced threshold, the
 * committed uniform price, and the seller's total expected revenue.
 *
 * # Safety
 * `market` must be a live handle from `sp_market_from_json`; each non-null
 * out pointer must be valid for one f64 write.
 */
SpStatus sp_solve_four_stage(const SpMarket *market,
                             double *v_e,
                             double *p0_e,
                             double *total_revenue);

/**
 * Expected social benefit of staying fully active when every other user
 * activates below the threshold `v`.
 *
 * # Safety
 * `market` must be a live handle from `sp_market_from_json`; `out` must be
 * null or valid for one f64 write.
 */
SpStatus sp_expected_benefit(const SpMarket *market, double v, double *out);

/**
 * Monte Carlo market simulation under a threshold activity rule. Writes
 * the mean and variance of per-run seller revenue.
 *
 * # Safety
 * `market` must be a live handle from `sp_market_from_json`; each non-null
 * out pointer must be valid for one f64 write.
 */
SpStatus sp_simulate(const SpMarket *market,
                     double price,
                     double threshold,
                     uint64_t seed,
                     uint32_t runs,
                     double *mean_revenue,
                     double *var_revenue);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SOCIAL_PRICING_H */
