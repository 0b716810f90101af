#ifndef ZOLL_LAB_H
#define ZOLL_LAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ZollStatus {
  ZOLL_STATUS_OK = 0,
  ZOLL_STATUS_NULL_POINTER = 1,
  ZOLL_STATUS_INVALID_ARGUMENT = 2,
  ZOLL_STATUS_NUMERICAL = 3,
  ZOLL_STATUS_CONFIG = 4,
  ZOLL_STATUS_BUFFER_TOO_SMALL = 5,
  ZOLL_STATUS_PANIC = 6,
} ZollStatus;

typedef enum ZollFlowClass {
  ZOLL_FLOW_CLASS_ZOLL = 0,
  ZOLL_FLOW_CLASS_BESSE = 1,
  ZOLL_FLOW_CLASS_NOT_BESSE = 2,
  ZOLL_FLOW_CLASS_UNDECIDED = 3,
} ZollFlowClass;

/**
 * Opaque manifold handle.
 */
typedef struct ZollManifold ZollManifold;

/**
 * Opaque spectral-data handle.
 */
typedef struct ZollSpectral ZollSpectral;

/**
 * Result of [`zoll_detect_period`].
 */
typedef struct ZollPeriod {
  double period;
  double defect;
  /**
   * 1 when the orbit closed, 0 for the best non-closing candidate.
   */
  int32_t closed;
} ZollPeriod;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message, NUL-terminated, into
 * `buf` (truncating) and returns the full length without the terminator.
 *
 * # Safety
 * `buf` must be null or valid for `capacity` bytes.
 */
size_t zoll_last_error_message(char *buf, size_t capacity);

/**
 * Library version as a static NUL-terminated string.
 */
const char *zoll_version(void);

/**
 * Builds a registered manifold. `keys`/`values` hold `n_params` parameter
 * overrides and may be null when `n_params == 0`.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `keys` must point to `n_params`
 * such strings and `values` to `n_params` doubles; `out` must be writable.
 */
enum ZollStatus zoll_manifold_new(const char *name,
                                  const char *const *keys,
                                  const double *values,
                                  size_t n_params,
                                  struct ZollManifold **out);

/**
 * Releases a manifold handle; null is ignored.
 *
 * # Safety
 * `m` must come from [`zoll_manifold_new`] and not be used afterwards.
 */
void zoll_manifold_free(struct ZollManifold *m);

/**
 * # Safety
 * `m` must be a live handle and `out` writable.
 */
enum ZollStatus zoll_manifold_dim(const struct ZollManifold *m, size_t *out);

/**
 * `K̂` at the unit vector `v` over `q` in `chart`.
 *
 * # Safety
 * `q` and `v` must hold `dim` doubles; `out` must be writable.
 */
enum ZollStatus zoll_khat(const struct ZollManifold *m,
                          size_t chart,
                          const double *q,
                          const double *v,
                          size_t dim,
                          double *out);

/**
 * Closure period of the orbit through `(q, v)` searched in
 * `(0.5, 1.5)·t_guess`.
 *
 * # Safety
 * `q` and `v` must hold `dim` doubles; `out` must be writable.
 */
enum ZollStatus zoll_detect_period(const struct ZollManifold *m,
                                   size_t chart,
                                   const double *q,
                                   const double *v,
                                   size_t dim,
                                   double t_guess,
                                   double tol,
                                   struct ZollPeriod *out);

/**
 * Integrates the magnetic flow to `t_end`. Writes the final `(q, v)` into
 * `y_out` (`2·dim` doubles), its chart into `chart_out` and the maximum
 * relative energy drift into `drift_out` (each output may be null).
 *
 * # Safety
 * Pointers must be valid for the stated lengths.
 */
enum ZollStatus zoll_integrate(const struct ZollManifold *m,
                               size_t chart,
                               const double *q,
                               const double *v,
                               size_t dim,
                               double t_end,
                               double tol,
                               double *y_out,
                               size_t *chart_out,
                               double *drift_out);

/**
 * Builds spectral data from row-major `dim × dim` matrices.
 *
 * # Safety
 * `rho` and `gamma` must hold `dim²` doubles; `out` must be writable.
 */
enum ZollStatus zoll_spectral_new(const double *rho,
                                  const double *gamma,
                                  size_t dim,
                                  struct ZollSpectral **out);

/**
 * # Safety
 * `s` must come from [`zoll_spectral_new`] and not be used afterwards.
 */
void zoll_spectral_free(struct ZollSpectral *s);

/**
 * Writes the `k` spectral numbers (descending) into `out`. `len_out`
 * always receives `k`; a short buffer gives [`ZollStatus::BufferTooSmall`].
 *
 * # Safety
 * `out` must be valid for `capacity` doubles; `len_out` writable.
 */
enum ZollStatus zoll_spectral_numbers(const struct ZollSpectral *s,
                                      double *out,
                                      size_t capacity,
                                      size_t *len_out);

/**
 * Classifies `e^{tÃ}` with denominators up to `denom_bound`. The common
 * period (`2π` for Zoll, NaN otherwise) goes to `period_out` if non-null.
 *
 * # Safety
 * `class_out` must be writable; `period_out` null or writable.
 */
enum ZollStatus zoll_spectral_classify(const struct ZollSpectral *s,
                                       uint64_t denom_bound,
                                       enum ZollFlowClass *class_out,
                                       double *period_out);

/**
 * Runs a scenario as the CLI would. `config_path` and `out_dir` may be
 * null. `exit_code_out` receives the CLI exit code (0 all rules passed,
 * 1 some rule failed).
 *
 * # Safety
 * String arguments must be NUL-terminated or null; `exit_code_out` writable.
 */
enum ZollStatus zoll_run_scenario(const char *scenario,
                                  const char *config_path,
                                  const char *out_dir,
                                  int32_t *exit_code_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ZOLL_LAB_H */
