#ifndef PNLAB_H
#define PNLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes returned by every function.
 */
typedef enum PnlabStatus {
  PNLAB_STATUS_OK = 0,
  PNLAB_STATUS_NULL_POINTER = 1,
  PNLAB_STATUS_INVALID_ARGUMENT = 2,
  PNLAB_STATUS_CONFIG = 3,
  PNLAB_STATUS_NUMERICAL = 4,
  PNLAB_STATUS_IO = 5,
  PNLAB_STATUS_BUFFER_TOO_SMALL = 6,
  PNLAB_STATUS_OUT_OF_RANGE = 7,
  PNLAB_STATUS_PANIC = 99,
} PnlabStatus;

/**
 * Receiver selector.
 */
typedef enum PnlabReceiver {
  PNLAB_RECEIVER_BP_MF_EP = 0,
  PNLAB_RECEIVER_EKS = 1,
  PNLAB_RECEIVER_KNOWN_PN = 2,
} PnlabReceiver;

/**
 * Experiment configuration handle.
 */
typedef struct PnlabConfig PnlabConfig;

/**
 * Experiment results handle.
 */
typedef struct PnlabResults PnlabResults;

/**
 * One row of the results table.
 */
typedef struct PnlabRow {
  enum PnlabReceiver receiver;
  double snr_db;
  size_t iteration;
  size_t n_frames;
  uint64_t n_bit_errors;
  uint64_t n_bits;
  double ber;
  double pn_mse_mean;
  double pn_mse_median;
  double wall_ms_per_frame;
  uint64_t seed;
} PnlabRow;

/**
 * Frame and channel description for single-frame calls.
 *
 * `taps` points to `n_taps` real tap values, `h_0` first.
 */
typedef struct PnlabFrameParams {
  size_t n_data_symbols;
  size_t pilot_period;
  size_t pilots_per_block;
  uint64_t interleaver_seed;
  const double *taps;
  size_t n_taps;
  double noise_var;
  double pn_var;
} PnlabFrameParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *pnlab_version(void);

/**
 * Copies the last error message of this thread into `buf`, truncated and
 * NUL-terminated. Returns the full message length excluding the NUL, or 0
 * when no error is recorded.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t pnlab_last_error(char *buf, size_t len);

/**
 * Creates a configuration with default values.
 *
 * # Safety
 * `out` must be valid for a pointer write.
 */
enum PnlabStatus pnlab_config_new(struct PnlabConfig **out);

/**
 * Parses a TOML configuration. Unknown keys are ignored with a log warning.
 *
 * # Safety
 * `toml` must be a NUL-terminated string and `out` valid for a pointer write.
 */
enum PnlabStatus pnlab_config_from_toml(const char *toml, struct PnlabConfig **out);

/**
 * Releases a configuration. Null is accepted.
 *
 * # Safety
 * `cfg` must come from this library and not be used afterwards.
 */
void pnlab_config_free(struct PnlabConfig *cfg);

/**
 * # Safety
 * `cfg` must be a live handle and `snr_db` valid for `n` reads.
 */
enum PnlabStatus pnlab_config_set_snr_grid(struct PnlabConfig *cfg, const double *snr_db, size_t n);

/**
 * # Safety
 * `cfg` must be a live handle and `kinds` valid for `n` reads.
 */
enum PnlabStatus pnlab_config_set_receivers(struct PnlabConfig *cfg,
                                            const enum PnlabReceiver *kinds,
                                            size_t n);

/**
 * # Safety
 * `cfg` must be a live handle.
 */
enum PnlabStatus pnlab_config_set_frames(struct PnlabConfig *cfg, size_t n);

/**
 * # Safety
 * `cfg` must be a live handle.
 */
enum PnlabStatus pnlab_config_set_iters(struct PnlabConfig *cfg, size_t n);

/**
 * # Safety
 * `cfg` must be a live handle.
 */
enum PnlabStatus pnlab_config_set_seed(struct PnlabConfig *cfg, uint64_t seed);

/**
 * # Safety
 * `cfg` must be a live handle.
 */
enum PnlabStatus pnlab_config_set_pn_var(struct PnlabConfig *cfg, double pn_var);

/**
 * # Safety
 * `cfg` must be a live handle.
 */
enum PnlabStatus pnlab_config_set_layout(struct PnlabConfig *cfg,
                                         size_t n_data_symbols,
                                         size_t pilot_period,
                                         size_t pilots_per_block);

/**
 * Replaces the channel taps, `h_0` first.
 *
 * # Safety
 * `cfg` must be a live handle and `taps` valid for `n` reads.
 */
enum PnlabStatus pnlab_config_set_taps(struct PnlabConfig *cfg, const double *taps, size_t n);

/**
 * Runs the Monte-Carlo experiment described by `cfg`.
 *
 * # Safety
 * `cfg` must be a live handle and `out` valid for a pointer write.
 */
enum PnlabStatus pnlab_run(const struct PnlabConfig *cfg, struct PnlabResults **out);

/**
 * Number of rows in the results table, 0 for null.
 *
 * # Safety
 * `res` must be null or a live handle.
 */
size_t pnlab_results_len(const struct PnlabResults *res);

/**
 * # Safety
 * `res` must be a live handle and `out` valid for a write.
 */
enum PnlabStatus pnlab_results_row(const struct PnlabResults *res,
                                   size_t index,
                                   struct PnlabRow *out);

/**
 * Writes the results CSV and its per-frame sidecar.
 *
 * # Safety
 * `res` must be a live handle and `path` a NUL-terminated string.
 */
enum PnlabStatus pnlab_results_write_csv(const struct PnlabResults *res, const char *path);

/**
 * Releases a results handle. Null is accepted.
 *
 * # Safety
 * `res` must come from this library and not be used afterwards.
 */
void pnlab_results_free(struct PnlabResults *res);

/**
 * Reports the number of complex observations and information bits per frame.
 *
 * # Safety
 * `params` must be valid; `obs_len` and `n_info` valid for writes.
 */
enum PnlabStatus pnlab_frame_sizes(const struct PnlabFrameParams *params,
                                   size_t *obs_len,
                                   size_t *n_info);

/**
 * Simulates one frame. `y` receives `2 * obs_len` doubles, `bits` receives
 * `n_info` bits and `theta` receives `obs_len` phases.
 *
 * # Safety
 * `params` must be valid and each buffer valid for its stated length.
 */
enum PnlabStatus pnlab_simulate_frame(const struct PnlabFrameParams *params,
                                      uint64_t seed,
                                      double *y,
                                      size_t y_len,
                                      uint8_t *bits,
                                      size_t bits_len,
                                      double *theta,
                                      size_t theta_len);

/**
 * Runs one receiver on one frame.
 *
 * `y` holds `2 * obs_len` doubles. `true_theta` is required for
 * `KnownPn` and ignored otherwise. Decoded bits go to `bits` (`n_info`
 * entries) and the final phase estimate to `theta_hat` (`obs_len`
 * entries); `theta_hat` may be null.
 *
 * # Safety
 * `params` must be valid and each non-null buffer valid for its length.
 */
enum PnlabStatus pnlab_receive_frame(enum PnlabReceiver kind,
                                     const struct PnlabFrameParams *params,
                                     size_t iters,
                                     const double *y,
                                     size_t y_len,
                                     const double *true_theta,
                                     uint8_t *bits,
                                     size_t bits_len,
                                     double *theta_hat);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PNLAB_H */
