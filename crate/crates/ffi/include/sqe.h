#ifndef SQE_H
#define SQE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SqeStatus {
  SQE_STATUS_OK = 0,
  SQE_STATUS_NULL_POINTER = 1,
  SQE_STATUS_INVALID_ARGUMENT = 2,
  SQE_STATUS_INVALID_MEASURE = 3,
  SQE_STATUS_INVALID_GRID = 4,
  SQE_STATUS_NOT_ONE_SIGNED = 5,
  SQE_STATUS_NUMERIC_ABORT = 6,
  SQE_STATUS_ACCEPTANCE_COLLAPSE = 7,
  SQE_STATUS_IO = 8,
  SQE_STATUS_BUFFER_TOO_SMALL = 9,
  SQE_STATUS_PANIC = 10,
} SqeStatus;

/**
 * Opaque weighted measure.
 */
typedef struct SqeMeasure SqeMeasure;

/**
 * Opaque running trajectory.
 */
typedef struct SqeSimulation SqeSimulation;

/**
 * Plain configuration of a single trajectory. Zero `grid_size` or `dt`
 * selects the default.
 */
typedef struct SqeSimConfig {
  double a;
  uint32_t n;
  uint32_t grid_size;
  double dt;
  uint64_t seed;
  uint64_t replica;
  /**
   * Nonzero runs the X + Y scheme.
   */
  uint8_t decomposed;
  uint8_t random_initial;
  uint8_t noise;
} SqeSimConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` (NUL
 * terminated, truncated to `len`). Returns the full message length
 * excluding the terminator. `buf` may be null to query the length.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t sqe_last_error(char *buf, size_t len);

/**
 * Builds a purely atomic measure `Σ weights[i] δ_{alphas[i]}` on
 * `[-alpha0, alpha0]`; `alpha0 = 0` picks the smallest interval that fits.
 *
 * # Safety
 * `alphas` and `weights` must be valid for `count` reads, `out` for one write.
 */
enum SqeStatus sqe_measure_atoms(double alpha0,
                                 const double *alphas,
                                 const double *weights,
                                 size_t count,
                                 struct SqeMeasure **out);

/**
 * `(δ_alpha + δ_{-alpha}) / 2`, the sinh-type measure.
 *
 * # Safety
 * `out` must be valid for one write.
 */
enum SqeStatus sqe_measure_sinh(double alpha, struct SqeMeasure **out);

/**
 * # Safety
 * `m` must be null or a handle from an `sqe_measure_*` constructor, freed once.
 */
void sqe_measure_free(struct SqeMeasure *m);

/**
 * Defaults matching the `sqe simulate` command.
 */
struct SqeSimConfig sqe_sim_config_default(void);

/**
 * # Safety
 * `measure` and `cfg` must be valid handles/pointers, `out` valid for one write.
 */
enum SqeStatus sqe_simulation_new(const struct SqeMeasure *measure,
                                  const struct SqeSimConfig *cfg,
                                  struct SqeSimulation **out);

/**
 * Advances `steps` time steps.
 *
 * # Safety
 * `sim` must be a live handle.
 */
enum SqeStatus sqe_simulation_step(struct SqeSimulation *sim, uint64_t steps);

/**
 * Current time, or NaN for a null handle.
 *
 * # Safety
 * `sim` must be null or a live handle.
 */
double sqe_simulation_time(const struct SqeSimulation *sim);

/**
 * Grid size `M`, or 0 for a null handle.
 *
 * # Safety
 * `sim` must be null or a live handle.
 */
size_t sqe_simulation_grid_size(const struct SqeSimulation *sim);

/**
 * Copies the `M²` grid values of the field, row-major, into `buf`.
 *
 * # Safety
 * `sim` must be a live handle and `buf` valid for `len` writes.
 */
enum SqeStatus sqe_simulation_copy_field(const struct SqeSimulation *sim, double *buf, size_t len);

/**
 * Writes the current field as a binary snapshot.
 *
 * # Safety
 * `sim` must be a live handle and `path` a NUL-terminated UTF-8 string.
 */
enum SqeStatus sqe_simulation_write_snapshot(const struct SqeSimulation *sim, const char *path);

/**
 * # Safety
 * `sim` must be null or a handle from [`sqe_simulation_new`], freed once.
 */
void sqe_simulation_free(struct SqeSimulation *sim);

/**
 * Renormalization constant `C_N` of the cutoff `A^N`.
 *
 * # Safety
 * `out` must be valid for one write.
 */
enum SqeStatus sqe_renorm_constant(double a, uint32_t n, double *out);

/**
 * Hermite polynomial `H_n(x; c)`.
 */
double sqe_hermite(uint32_t n, double x, double c);

/**
 * Exact `E‖exp_{N+1}(αφ) - exp_N(αφ)‖²_{H^{-β}}` on an `M × M` grid
 * (`grid_size = 0` picks one resolving the finer cutoff).
 *
 * # Safety
 * `out` must be valid for one write.
 */
enum SqeStatus sqe_wick_exp_diff_norm_oracle(double alpha,
                                             double a,
                                             uint32_t n,
                                             double beta,
                                             uint32_t grid_size,
                                             double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SQE_H */
