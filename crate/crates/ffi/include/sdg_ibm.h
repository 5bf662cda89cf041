#ifndef SDG_IBM_H
#define SDG_IBM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes of every exported function.
 */
typedef enum SdgStatus {
  SDG_STATUS_OK = 0,
  SDG_STATUS_NULL_POINTER = 1,
  SDG_STATUS_INVALID_UTF8 = 2,
  SDG_STATUS_INVALID_PARAMETER = 3,
  SDG_STATUS_INVALID_GEOMETRY = 4,
  SDG_STATUS_POINT_OUTSIDE_DOMAIN = 5,
  SDG_STATUS_UNSUPPORTED_DEGREE = 6,
  SDG_STATUS_INVALID_EVALUATION = 7,
  SDG_STATUS_ASSEMBLY_FAILURE = 8,
  SDG_STATUS_SINGULAR_SYSTEM = 9,
  SDG_STATUS_SOLVE_DIVERGED = 10,
  SDG_STATUS_POSTPROCESS_FAILURE = 11,
  SDG_STATUS_MARKER_ESCAPED = 12,
  SDG_STATUS_IO = 13,
  SDG_STATUS_USAGE = 14,
  SDG_STATUS_BUFFER_TOO_SMALL = 15,
  SDG_STATUS_PANIC = 16,
} SdgStatus;

/**
 * Run state reported by [`sdg_simulation_state`].
 */
typedef enum SdgRunState {
  SDG_RUN_STATE_RUNNING = 0,
  SDG_RUN_STATE_COMPLETED = 1,
  SDG_RUN_STATE_BLOWN_UP = 2,
  SDG_RUN_STATE_MARKER_ESCAPED = 3,
  SDG_RUN_STATE_FAILED = 4,
} SdgRunState;

/**
 * Opaque simulation handle.
 */
typedef struct SdgSimulation SdgSimulation;

/**
 * Diagnostics of one step.
 */
typedef struct SdgDiagnostics {
  size_t step;
  double time;
  double area;
  double area_change_pct;
  double energy;
  double eta;
  size_t picard_iters;
  bool picard_converged;
  bool blown_up;
} SdgDiagnostics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates a simulation from `key = value` configuration text.
 *
 * # Safety
 * `config` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SdgStatus sdg_simulation_new(const char *config, struct SdgSimulation **out);

/**
 * Releases a handle; null is ignored.
 *
 * # Safety
 * `sim` must come from [`sdg_simulation_new`] and not be used afterwards.
 */
void sdg_simulation_free(struct SdgSimulation *sim);

/**
 * Advances one step; `running` receives 1 while the run continues.
 *
 * # Safety
 * `sim` must be a live handle; `running` may be null.
 */
enum SdgStatus sdg_simulation_step(struct SdgSimulation *sim, bool *running);

/**
 * Steps until the run terminates.
 *
 * # Safety
 * `sim` must be a live handle.
 */
enum SdgStatus sdg_simulation_run(struct SdgSimulation *sim);

/**
 * # Safety
 * `sim` must be a live handle and `out` a valid pointer.
 */
enum SdgStatus sdg_simulation_state(const struct SdgSimulation *sim, enum SdgRunState *out);

/**
 * # Safety
 * `sim` must be a live handle and `out` a valid pointer.
 */
enum SdgStatus sdg_simulation_num_markers(const struct SdgSimulation *sim, size_t *out);

/**
 * Copies marker positions as `x₀, y₀, x₁, y₁, …` into `xy` of length `len`.
 *
 * # Safety
 * `sim` must be a live handle and `xy` valid for `len` writes.
 */
enum SdgStatus sdg_simulation_markers(const struct SdgSimulation *sim, double *xy, size_t len);

/**
 * Diagnostics of the latest recorded step.
 *
 * # Safety
 * `sim` must be a live handle and `out` a valid pointer.
 */
enum SdgStatus sdg_simulation_diagnostics(const struct SdgSimulation *sim,
                                          struct SdgDiagnostics *out);

/**
 * Writes `area_history.csv`, marker snapshots and `run.meta` into `dir`.
 *
 * # Safety
 * `sim` must be a live handle and `dir` a NUL-terminated string.
 */
enum SdgStatus sdg_simulation_write_output(const struct SdgSimulation *sim, const char *dir);

/**
 * Copies the last error message of this thread, NUL-terminated and truncated
 * to `len` bytes; returns the full message length.
 *
 * # Safety
 * `buf` must be valid for `len` writes or null.
 */
size_t sdg_last_error_message(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *sdg_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SDG_IBM_H */
