#ifndef NSDDE_H
#define NSDDE_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NsddeStatus {
  NSDDE_STATUS_OK = 0,
  NSDDE_STATUS_NULL_ARGUMENT = 1,
  NSDDE_STATUS_INVALID_UTF8 = 2,
  NSDDE_STATUS_CONFIG = 3,
  NSDDE_STATUS_NESTING = 4,
  NSDDE_STATUS_GRID = 5,
  NSDDE_STATUS_MODEL = 6,
  NSDDE_STATUS_EXPLOSION_BUDGET = 7,
  NSDDE_STATUS_DEGENERATE = 8,
  NSDDE_STATUS_OUT_OF_RANGE = 9,
  NSDDE_STATUS_IO = 10,
  NSDDE_STATUS_BUFFER_TOO_SMALL = 11,
  NSDDE_STATUS_INDEX = 12,
  NSDDE_STATUS_PANIC = 13,
} NsddeStatus;

/**
 * Which table of a finished run to read.
 */
typedef enum NsddeTable {
  NSDDE_TABLE_STRONG_ERROR = 0,
  NSDDE_TABLE_DISPLACEMENT = 1,
  NSDDE_TABLE_SUP_MOMENT = 2,
} NsddeTable;

typedef struct NsddeConfig NsddeConfig;

typedef struct NsddeModel NsddeModel;

typedef struct NsddeRun NsddeRun;

typedef struct NsddeErrorRow {
  double h;
  double p;
  uint64_t n_paths;
  double err;
  /**
   * Monte Carlo standard error of `err`.
   */
  double std_error;
  double exploded_frac;
} NsddeErrorRow;

typedef struct NsddeOrderFit {
  double slope;
  double intercept;
  double r_squared;
  uint64_t n_points;
} NsddeOrderFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *nsdde_version(void);

/**
 * Message of the last failure on this thread, or NULL. Valid until the
 * next failing call on the same thread.
 */
const char *nsdde_last_error(void);

size_t nsdde_model_count(void);

/**
 * Registered model id at `index`, or NULL past the end. Static storage.
 */
const char *nsdde_model_id(size_t index);

/**
 * # Safety
 * `toml` must be a NUL-terminated string; `out` must be writable.
 */
enum NsddeStatus nsdde_config_parse(const char *toml, struct NsddeConfig **out);

/**
 * # Safety
 * `cfg` must come from [`nsdde_config_parse`].
 */
enum NsddeStatus nsdde_config_set_seed(struct NsddeConfig *cfg, uint64_t seed);

/**
 * Sets the worker count; 0 restores the default pool.
 *
 * # Safety
 * `cfg` must come from [`nsdde_config_parse`].
 */
enum NsddeStatus nsdde_config_set_workers(struct NsddeConfig *cfg, size_t workers);

/**
 * # Safety
 * `cfg` must come from [`nsdde_config_parse`] or be NULL.
 */
void nsdde_config_free(struct NsddeConfig *cfg);

/**
 * Runs the configured experiments, writing artifacts into `out_dir`.
 * A failed acceptance gate is not an error; see [`nsdde_run_gates_passed`].
 *
 * # Safety
 * `cfg` must be a live config, `out_dir` a NUL-terminated path, `out`
 * writable.
 */
enum NsddeStatus nsdde_run(const struct NsddeConfig *cfg,
                           const char *out_dir,
                           struct NsddeRun **out);

/**
 * # Safety
 * `run` must come from [`nsdde_run`] or be NULL.
 */
void nsdde_run_free(struct NsddeRun *run);

/**
 * # Safety
 * `run` must be a live run.
 */
bool nsdde_run_gates_passed(const struct NsddeRun *run);

/**
 * Number of rows in table `which` for the `p_index`-th moment order.
 *
 * # Safety
 * `run` must be a live run and `rows` writable.
 */
enum NsddeStatus nsdde_run_table_len(const struct NsddeRun *run,
                                     enum NsddeTable which,
                                     size_t p_index,
                                     size_t *rows);

/**
 * # Safety
 * `run` must be a live run and `out` writable.
 */
enum NsddeStatus nsdde_run_table_row(const struct NsddeRun *run,
                                     enum NsddeTable which,
                                     size_t p_index,
                                     size_t row,
                                     struct NsddeErrorRow *out);

/**
 * Order fit of a run table.
 *
 * # Safety
 * `run` must be a live run and `out` writable.
 */
enum NsddeStatus nsdde_run_fit(const struct NsddeRun *run,
                               enum NsddeTable which,
                               size_t p_index,
                               struct NsddeOrderFit *out);

/**
 * Builds a registered model. `names[i]` is set to `values[i]`; pass
 * `n = 0` for defaults.
 *
 * # Safety
 * `id` must be NUL-terminated; `names` and `values` must hold `n` entries;
 * `out` must be writable.
 */
enum NsddeStatus nsdde_model_new(const char *id,
                                 const char *const *names,
                                 const double *values,
                                 size_t n,
                                 struct NsddeModel **out);

/**
 * # Safety
 * `model` must come from [`nsdde_model_new`] or be NULL.
 */
void nsdde_model_free(struct NsddeModel *model);

/**
 * State dimension of `model`, or 0 for NULL.
 *
 * # Safety
 * `model` must be a live model or NULL.
 */
size_t nsdde_model_dim(const struct NsddeModel *model);

/**
 * Simulates one continuous EM path from the constant segment `xi` and
 * writes its states at the fine nodes of `[0, T]` row by row. `len`
 * receives the number of values needed; if `cap` is smaller nothing is
 * written and `NSDDE_STATUS_BUFFER_TOO_SMALL` is returned.
 *
 * # Safety
 * `model` must be live, `out` must hold `cap` doubles (may be NULL when
 * `cap` is 0), `len` must be writable.
 */
enum NsddeStatus nsdde_simulate_path(const struct NsddeModel *model,
                                     double tau,
                                     double horizon,
                                     size_t m,
                                     size_t refine,
                                     double xi,
                                     uint64_t seed,
                                     uint64_t path,
                                     double *out,
                                     size_t cap,
                                     size_t *len);

/**
 * Least-squares slope of `log2 err` against `log2 h`.
 *
 * # Safety
 * `h` and `err` must hold `n` doubles; `out` must be writable.
 */
enum NsddeStatus nsdde_fit_order(const double *h,
                                 const double *err,
                                 size_t n,
                                 struct NsddeOrderFit *out);

/**
 * `1 / (1 + theta)^floor(T / tau)`.
 *
 * # Safety
 * `out` must be writable.
 */
enum NsddeStatus nsdde_theory_rate_jump(double p,
                                        double theta,
                                        double horizon,
                                        double tau,
                                        double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NSDDE_H */
