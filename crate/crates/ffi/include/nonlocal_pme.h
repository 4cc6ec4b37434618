#ifndef NONLOCAL_PME_H
#define NONLOCAL_PME_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. `NLPME_STATUS_OK` is zero.
 */
typedef enum NlpmeStatus {
  NLPME_STATUS_OK = 0,
  NLPME_STATUS_NULL_POINTER = 1,
  NLPME_STATUS_DOMAIN = 2,
  NLPME_STATUS_SINGULAR_CELL = 3,
  NLPME_STATUS_QUADRATURE = 4,
  NLPME_STATUS_NOT_LEVY = 5,
  NLPME_STATUS_NOT_GRID_COMPATIBLE = 6,
  NLPME_STATUS_MISMATCH = 7,
  NLPME_STATUS_CFL = 8,
  NLPME_STATUS_INFINITE_LIPSCHITZ = 9,
  NLPME_STATUS_NON_FINITE = 10,
  NLPME_STATUS_CONFIG = 11,
  NLPME_STATUS_IO = 12,
  NLPME_STATUS_ASSERTION = 13,
  NLPME_STATUS_PANIC = 14,
} NlpmeStatus;

/**
 * Opaque nonlinearity.
 */
typedef struct NlpmeNonlinearity NlpmeNonlinearity;

/**
 * Opaque lattice operator.
 */
typedef struct NlpmeStencil NlpmeStencil;

/**
 * A lattice box: `dim` axes, index origin `lo[d]`, `shape[d]` points per
 * axis, spacing `spacing`. Boundary is periodic when `periodic` is nonzero
 * and zero extension otherwise.
 */
typedef struct NlpmeGrid {
  size_t dim;
  double spacing;
  const int64_t *lo;
  const size_t *shape;
  int32_t periodic;
} NlpmeGrid;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len` bytes) and returns the full message length.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t nlpme_last_error(char *buf, size_t len);

/**
 * `c_{N,s}` of the fractional Laplacian.
 *
 * # Safety
 * `result` must be a valid pointer.
 */
enum NlpmeStatus nlpme_fractional_constant(size_t dim, double order, double *result);

/**
 * Stencil of `−(−Δ)^{s/2}` truncated at `r_cut`. `absorb_tail` nonzero
 * lumps the truncated mass into the diagonal; `second_moment` nonzero
 * replaces the skipped origin cell by its second-moment stencil.
 *
 * # Safety
 * `result` must be a valid pointer.
 */
enum NlpmeStatus nlpme_stencil_new_fractional(size_t dim,
                                              double order,
                                              double spacing,
                                              double r_cut,
                                              int32_t absorb_tail,
                                              int32_t second_moment,
                                              struct NlpmeStencil **result);

/**
 * Stencil of `Σ_k m_k (ψ(x+z_k) − ψ(x))`; `offsets` holds `n_atoms × dim`
 * coordinates row by row.
 *
 * # Safety
 * `offsets` and `masses` must hold `n_atoms × dim` and `n_atoms` values;
 * `result` must be a valid pointer.
 */
enum NlpmeStatus nlpme_stencil_new_dirac(size_t dim,
                                         size_t n_atoms,
                                         const double *offsets,
                                         const double *masses,
                                         double spacing,
                                         double r_cut,
                                         struct NlpmeStencil **result);

/**
 * Second-difference stencil along the `n_cols` integer columns of `σ`,
 * given column by column (`dim` entries each).
 *
 * # Safety
 * `sigma` must hold `dim × n_cols` values; `result` must be a valid pointer.
 */
enum NlpmeStatus nlpme_stencil_new_local(size_t dim,
                                         size_t n_cols,
                                         const double *sigma,
                                         double spacing,
                                         struct NlpmeStencil **result);

/**
 * Stencil of the sum of two operators on the same lattice.
 *
 * # Safety
 * `a`, `b` must be live handles and `result` a valid pointer.
 */
enum NlpmeStatus nlpme_stencil_combine(const struct NlpmeStencil *a,
                                       const struct NlpmeStencil *b,
                                       struct NlpmeStencil **result);

/**
 * # Safety
 * `stencil` must be null or a handle not yet freed.
 */
void nlpme_stencil_free(struct NlpmeStencil *stencil);

/**
 * Number of stored offsets and total weight `Σ w_α`.
 *
 * # Safety
 * `stencil` must be a live handle; outputs must be valid pointers.
 */
enum NlpmeStatus nlpme_stencil_info(const struct NlpmeStencil *stencil,
                                    size_t *len,
                                    double *total_weight,
                                    double *tail_mass);

/**
 * `result = L_h u`.
 *
 * # Safety
 * `u` and `result` must hold as many values as the grid has points.
 */
enum NlpmeStatus nlpme_apply(const struct NlpmeStencil *stencil,
                             const struct NlpmeGrid *grid,
                             const double *u,
                             double *result);

/**
 * `r |r|^{m−1}`.
 *
 * # Safety
 * `result` must be a valid pointer.
 */
enum NlpmeStatus nlpme_nonlinearity_new_power(double m, struct NlpmeNonlinearity **result);

/**
 * `c2 r` for `r < 0`, `c1 (r − latent)⁺` for `r ≥ 0`.
 *
 * # Safety
 * `result` must be a valid pointer.
 */
enum NlpmeStatus nlpme_nonlinearity_new_stefan(double c1,
                                               double c2,
                                               double latent,
                                               struct NlpmeNonlinearity **result);

/**
 * `a r`.
 *
 * # Safety
 * `result` must be a valid pointer.
 */
enum NlpmeStatus nlpme_nonlinearity_new_linear(double a, struct NlpmeNonlinearity **result);

/**
 * `φ_η` tabulated on `[−range, range]`.
 *
 * # Safety
 * `phi` must be a live handle and `result` a valid pointer.
 */
enum NlpmeStatus nlpme_nonlinearity_mollify(const struct NlpmeNonlinearity *phi,
                                            double eta,
                                            double range,
                                            struct NlpmeNonlinearity **result);

/**
 * # Safety
 * `phi` must be a live handle and `result` a valid pointer.
 */
enum NlpmeStatus nlpme_nonlinearity_eval(const struct NlpmeNonlinearity *phi,
                                         double r,
                                         double *result);

/**
 * # Safety
 * `phi` must be null or a handle not yet freed.
 */
void nlpme_nonlinearity_free(struct NlpmeNonlinearity *phi);

/**
 * Largest monotone time step for data bounded by `max_abs`; `INFINITY`
 * for the zero operator.
 *
 * # Safety
 * Handles must be live and `result` a valid pointer.
 */
enum NlpmeStatus nlpme_cfl_dt(const struct NlpmeStencil *stencil,
                              const struct NlpmeNonlinearity *phi,
                              double max_abs,
                              double *result);

/**
 * One forward-Euler step `result = u + dt · L_h[φ(u)]`; fails with
 * `NLPME_CFL` when `dt` exceeds the monotonicity bound.
 *
 * # Safety
 * `u` and `result` must hold as many values as the grid has points.
 */
enum NlpmeStatus nlpme_step(const struct NlpmeStencil *stencil,
                            const struct NlpmeNonlinearity *phi,
                            const struct NlpmeGrid *grid,
                            double dt,
                            const double *u,
                            double *result);

/**
 * Evolves `u0` to `t_final` with `Δt = dt` when `dt > 0` and `θ = cfl`
 * times the CFL bound otherwise; writes the final state and step count.
 * Absorbs the truncated tail when `absorb_tail` is nonzero.
 *
 * # Safety
 * `u0` and `result` must hold as many values as the grid has points;
 * `steps` must be a valid pointer.
 */
enum NlpmeStatus nlpme_evolve(const struct NlpmeStencil *stencil,
                              const struct NlpmeNonlinearity *phi,
                              const struct NlpmeGrid *grid,
                              const double *u0,
                              double t_final,
                              double dt,
                              double cfl,
                              int32_t absorb_tail,
                              double *result,
                              size_t *steps);

/**
 * Solves `εv − L_h v = g` by the contraction iteration.
 *
 * # Safety
 * `g` and `result` must hold as many values as the grid has points;
 * `iterations` and `residual` must be valid pointers.
 */
enum NlpmeStatus nlpme_solve_resolvent(const struct NlpmeStencil *stencil,
                                       const struct NlpmeGrid *grid,
                                       const double *g,
                                       double epsilon,
                                       double tol,
                                       double *result,
                                       size_t *iterations,
                                       double *residual);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NONLOCAL_PME_H */
