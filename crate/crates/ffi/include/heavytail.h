#ifndef HEAVYTAIL_H
#define HEAVYTAIL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum HtStatus {
  HT_STATUS_OK = 0,
  HT_STATUS_NULL_POINTER = 1,
  HT_STATUS_INVALID_BETA = 2,
  HT_STATUS_DOMAIN = 3,
  HT_STATUS_CONVERGENCE = 4,
  HT_STATUS_RESOLUTION = 5,
  HT_STATUS_NUMERICAL = 6,
  HT_STATUS_PANIC = 7,
} HtStatus;

/**
 * A finished per-mode evolution.
 */
typedef struct HtEvolution HtEvolution;

/**
 * Validated model constants.
 */
typedef struct HtModel HtModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length without the NUL,
 * or 0 when no error is recorded.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t ht_last_error_message(char *buf, size_t len);

/**
 * Creates a model for `beta`; `*out` receives the handle.
 *
 * # Safety
 * `out` must be null or a valid pointer.
 */
enum HtStatus ht_model_new(double beta, struct HtModel **out);

/**
 * Releases a model handle; null is ignored.
 *
 * # Safety
 * `model` must be null or a handle from [`ht_model_new`] not yet freed.
 */
void ht_model_free(struct HtModel *model);

/**
 * `β`, `γ = β/2`, `α = (β+1)/3` and `C_β²` of a model.
 *
 * # Safety
 * `model` must be a live handle; the out-pointers must be valid.
 */
enum HtStatus ht_model_constants(const struct HtModel *model,
                                 double *beta,
                                 double *gamma,
                                 double *alpha,
                                 double *c_beta_sq);

/**
 * Closed-form `κ(β)`.
 *
 * # Safety
 * `model` must be a live handle and `out` valid.
 */
enum HtStatus ht_kappa(const struct HtModel *model, double *out);

/**
 * Connection coefficient `d(λ)` extracted from the model-equation solution.
 *
 * # Safety
 * `model` must be a live handle and the out-pointers valid.
 */
enum HtStatus ht_d_coeff(const struct HtModel *model,
                         double lambda_re,
                         double lambda_im,
                         double *out_re,
                         double *out_im);

/**
 * `μ(η)` from the connection condition.
 *
 * # Safety
 * `model` must be a live handle and the out-pointers valid.
 */
enum HtStatus ht_mu_connection(const struct HtModel *model,
                               double eta,
                               double *out_re,
                               double *out_im);

/**
 * `μ(η)` from the finite-difference oracle with `n_grid` and `2 n_grid`
 * cells; `v_max ≤ 0` selects the default half-width.
 *
 * # Safety
 * `model` must be a live handle and the out-pointers valid.
 */
enum HtStatus ht_mu_matrix(const struct HtModel *model,
                           double eta,
                           double v_max,
                           size_t n_grid,
                           double *out_re,
                           double *out_im);

/**
 * Evolves one mode from the normalised equilibrium. `n_grid = 0` picks the
 * default grid; the step-halving check is always on.
 *
 * # Safety
 * `model` must be a live handle and `out` valid.
 */
enum HtStatus ht_evolve(const struct HtModel *model,
                        double k,
                        double epsilon,
                        double s_final,
                        size_t n_steps,
                        size_t n_grid,
                        struct HtEvolution **out);

/**
 * Number of recorded times.
 *
 * # Safety
 * `evolution` must be a live handle and `out` valid.
 */
enum HtStatus ht_evolution_len(const struct HtEvolution *evolution, size_t *out);

/**
 * Record `i`: time, density `ρ̂`, moment `F̂` and reference `e^{-κ|k|^α s}ρ̂₀`.
 *
 * # Safety
 * `evolution` must be a live handle; the out-pointers must be valid.
 */
enum HtStatus ht_evolution_get(const struct HtEvolution *evolution,
                               size_t i,
                               double *s,
                               double *rho_re,
                               double *rho_im,
                               double *f_re,
                               double *f_im,
                               double *ref_re,
                               double *ref_im);

/**
 * `sup_s |ρ̂(s) - e^{-κ|k|^α s}ρ̂₀|` of an evolution.
 *
 * # Safety
 * `evolution` must be a live handle and `out` valid.
 */
enum HtStatus ht_evolution_gap(const struct HtEvolution *evolution, double *out);

/**
 * Releases an evolution handle; null is ignored.
 *
 * # Safety
 * `evolution` must be null or a handle from [`ht_evolve`] not yet freed.
 */
void ht_evolution_free(struct HtEvolution *evolution);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HEAVYTAIL_H */
