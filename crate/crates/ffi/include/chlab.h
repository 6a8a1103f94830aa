#ifndef CHLAB_H
#define CHLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

/**
 * Result codes; zero is success.
 */
typedef enum ChlabStatus {
  CHLAB_STATUS_OK = 0,
  CHLAB_STATUS_INVALID_ARGUMENT = 1,
  CHLAB_STATUS_DIMENSION_MISMATCH = 2,
  CHLAB_STATUS_OVERFLOW = 3,
  CHLAB_STATUS_QUADRATURE_UNRESOLVED = 4,
  CHLAB_STATUS_DEGENERATE = 5,
  CHLAB_STATUS_COUPLING = 6,
  CHLAB_STATUS_CONFIG = 7,
  CHLAB_STATUS_IO = 8,
  CHLAB_STATUS_NULL_POINTER = 9,
  CHLAB_STATUS_BUFFER_TOO_SMALL = 10,
  CHLAB_STATUS_PANIC = 11,
} ChlabStatus;

/**
 * Drift families; see [`ChlabDrift`] for the parameters each one reads.
 */
typedef enum ChlabDriftKind {
  /**
   * `f = 0`
   */
  CHLAB_DRIFT_KIND_ZERO = 0,
  /**
   * `f(x) = a·sin x`
   */
  CHLAB_DRIFT_KIND_SCALED_SINE = 1,
  /**
   * `f(x) = a·x/(1 + x²)`
   */
  CHLAB_DRIFT_KIND_LIPSCHITZ_RATIONAL = 2,
  /**
   * `f(x) = c0·x³ + c1·x² + c2·x + c3`
   */
  CHLAB_DRIFT_KIND_CUBIC = 3,
  /**
   * Cubic multiplied by the smooth cutoff of radius `r`
   */
  CHLAB_DRIFT_KIND_CUBIC_CUTOFF = 4,
} ChlabDriftKind;

typedef enum ChlabDiffusionKind {
  /**
   * `σ(x) = b`
   */
  CHLAB_DIFFUSION_KIND_CONSTANT = 0,
  /**
   * `σ(x) = b + a·sin x` with `|a| < b`
   */
  CHLAB_DIFFUSION_KIND_SHIFTED_SINE = 1,
} ChlabDiffusionKind;

/**
 * Precomputed mesh, eigenvalues and transform plan for one `n`.
 */
typedef struct ChlabBasis ChlabBasis;

/**
 * One Brownian sheet realization on an `m × n` cell grid.
 */
typedef struct ChlabSheet ChlabSheet;

typedef struct ChlabDrift {
  /**
   * A `ChlabDriftKind` value.
   */
  uint32_t kind;
  /**
   * Scale for `ScaledSine` and `LipschitzRational`.
   */
  double a;
  /**
   * Cubic coefficients, highest degree first.
   */
  double c[4];
  /**
   * Cutoff radius for `CubicCutoff`.
   */
  double r;
} ChlabDrift;

typedef struct ChlabDiffusion {
  /**
   * A `ChlabDiffusionKind` value.
   */
  uint32_t kind;
  double b;
  double a;
} ChlabDiffusion;

/**
 * Scheme parameters; the initial datum is `u0_amplitude·sin(u0_mode·x)`.
 */
typedef struct ChlabSolverConfig {
  size_t n;
  size_t m;
  double t_final;
  struct ChlabDrift drift;
  struct ChlabDiffusion diffusion;
  uint32_t u0_mode;
  double u0_amplitude;
} ChlabSolverConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, a static NUL-terminated string.
 */
const char *chlab_version(void);

/**
 * Message of the last failed call on this thread; empty after a success.
 * Valid until the next `chlab_*` call on the same thread.
 */
const char *chlab_last_error(void);

/**
 * Default model (`f = sin`, `σ = 1 + ½ sin`, `u₀ = sin`) on an `(n, m, T)` grid.
 */
struct ChlabSolverConfig chlab_solver_config_default(size_t n, size_t m, double t_final);

/**
 * Builds the spectral basis for `n ≥ 2` into `*out`.
 *
 * # Safety
 * `out` must be null or valid for one pointer write.
 */
enum ChlabStatus chlab_basis_new(size_t n, struct ChlabBasis **out);

/**
 * # Safety
 * `basis` must be null or a handle from `chlab_basis_new` not yet freed.
 */
void chlab_basis_free(struct ChlabBasis *basis);

/**
 * Writes the `n - 1` discrete Laplacian eigenvalues `λ_{1,n} … λ_{n-1,n}`.
 *
 * # Safety
 * `basis` must be a live handle; `out` valid for `len` writes.
 */
enum ChlabStatus chlab_basis_eigenvalues(const struct ChlabBasis *basis, double *out, size_t len);

/**
 * Draws sheet `sample_index` of master seed `seed` on `m × n` cells over `[0, T]`.
 *
 * # Safety
 * `out` must be null or valid for one pointer write.
 */
enum ChlabStatus chlab_sheet_generate(uint64_t seed,
                                      uint64_t sample_index,
                                      size_t m,
                                      size_t n,
                                      double t_final,
                                      struct ChlabSheet **out);

/**
 * Sums `time_factor × space_factor` blocks into a new sheet.
 *
 * # Safety
 * `sheet` must be a live handle; `out` valid for one pointer write.
 */
enum ChlabStatus chlab_sheet_coarsen(const struct ChlabSheet *sheet,
                                     size_t time_factor,
                                     size_t space_factor,
                                     struct ChlabSheet **out);

/**
 * # Safety
 * `sheet` must be null or a live handle not yet freed.
 */
void chlab_sheet_free(struct ChlabSheet *sheet);

/**
 * Writes the cell grid dimensions.
 *
 * # Safety
 * `sheet` must be a live handle; `m` and `n` valid for one write each.
 */
enum ChlabStatus chlab_sheet_dims(const struct ChlabSheet *sheet, size_t *m, size_t *n);

/**
 * Copies the `m·n` increments, row-major in time.
 *
 * # Safety
 * `sheet` must be a live handle; `out` valid for `len` writes.
 */
enum ChlabStatus chlab_sheet_increments(const struct ChlabSheet *sheet, double *out, size_t len);

/**
 * Runs the scheme on the `(m, n)` aggregation of `sheet` and writes the
 * terminal values at nodes `0..=n` (boundary zeros included).
 *
 * # Safety
 * `config` and `sheet` must be valid; `out` valid for `len` writes.
 */
enum ChlabStatus chlab_simulate(const struct ChlabSolverConfig *config,
                                const struct ChlabSheet *sheet,
                                double *out,
                                size_t len);

/**
 * Malliavin H-norm `‖D u(T, x*)‖²` and the value `u(T, x*)` on the
 * `(m, n)` aggregation of `sheet`. Requires `m·n ≤ 8192`.
 *
 * # Safety
 * `config` and `sheet` must be valid; outputs valid for one write each.
 */
enum ChlabStatus chlab_hnorm2(const struct ChlabSolverConfig *config,
                              const struct ChlabSheet *sheet,
                              double x_star,
                              double *hnorm2,
                              double *value);

/**
 * Continuous kernel `G_t(x, y)` for `t > 0`, truncated at `tail_tol`.
 *
 * # Safety
 * `out` must be valid for one write.
 */
enum ChlabStatus chlab_exact_kernel(double t, double x, double y, double tail_tol, double *out);

/**
 * Discrete kernel `G^n_t(x, y)` for `t ≥ 0`.
 *
 * # Safety
 * `basis` must be a live handle; `out` valid for one write.
 */
enum ChlabStatus chlab_discrete_kernel(const struct ChlabBasis *basis,
                                       double t,
                                       double x,
                                       double y,
                                       double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CHLAB_H */
