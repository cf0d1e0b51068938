#ifndef HARMONIC_NESS_H
#define HARMONIC_NESS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum HnStatus {
  HN_STATUS_OK = 0,
  HN_STATUS_DOMAIN = 1,
  HN_STATUS_CONTRACT = 2,
  HN_STATUS_QUADRATURE = 3,
  HN_STATUS_NUMERIC = 4,
  HN_STATUS_OPTIMIZATION = 5,
  HN_STATUS_CONFIG = 6,
  HN_STATUS_IO = 7,
  HN_STATUS_NULL_POINTER = 8,
  HN_STATUS_PANIC = 9,
} HnStatus;

/**
 * Opaque local function of `k` consecutive occupations.
 */
typedef struct HnLocalFunction HnLocalFunction;

/**
 * Opaque test function on `[0, 1]`.
 */
typedef struct HnTestFunction HnTestFunction;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *hn_version(void);

/**
 * Message of the last failed call on this thread, or NULL after a success.
 * The pointer stays valid until the next library call on the same thread.
 */
const char *hn_last_error_message(void);

/**
 * `eta_1`.
 */
struct HnLocalFunction *hn_local_function_density(void);

/**
 * `eta_1 eta_2`.
 */
struct HnLocalFunction *hn_local_function_pair_product(void);

/**
 * `1{eta_1 = 0}`; bounded, so usable in free energies.
 */
struct HnLocalFunction *hn_local_function_indicator_vacuum(void);

/**
 * Polynomial `sum_t coeffs[t] prod_j eta_j^powers[t * k + j]` on a window of `k` sites.
 *
 * # Safety
 * `coeffs` must hold `n_terms` values and `powers` `n_terms * k` values;
 * `out` must be writable.
 */
enum HnStatus hn_local_function_polynomial(size_t k,
                                           size_t n_terms,
                                           const double *coeffs,
                                           const uint32_t *powers,
                                           struct HnLocalFunction **out);

/**
 * # Safety
 * `g` must come from one of the constructors above and not be freed twice.
 */
void hn_local_function_free(struct HnLocalFunction *g);

/**
 * `phi(x) = sum_j coeffs[j] x^j`.
 *
 * # Safety
 * `coeffs` must hold `len` values; `out` must be writable.
 */
enum HnStatus hn_test_function_polynomial(const double *coeffs,
                                          size_t len,
                                          struct HnTestFunction **out);

/**
 * # Safety
 * `phi` must come from [`hn_test_function_polynomial`] and not be freed twice.
 */
void hn_test_function_free(struct HnTestFunction *phi);

/**
 * `nu_theta(n) = theta^n / (1 + theta)^(n + 1)`.
 *
 * # Safety
 * `out` must be writable.
 */
enum HnStatus hn_geometric_pmf(double theta, uint64_t n, double *out);

/**
 * One steady-state sample on `n` sites. `theta_out` may be NULL.
 *
 * # Safety
 * `eta_out` (and `theta_out` when non-NULL) must have room for `n` values.
 */
enum HnStatus hn_sample_ness(size_t n,
                             double theta_left,
                             double theta_right,
                             uint64_t seed_master,
                             uint64_t seed_stream,
                             double *theta_out,
                             uint64_t *eta_out);

/**
 * `E[prod_i U_{i:n}^alphas[i]]` for `n` sorted uniforms.
 *
 * # Safety
 * `alphas` must hold `n` values; `out` must be writable.
 */
enum HnStatus hn_orderstat_product_moment(size_t n, const uint32_t *alphas, double *out);

/**
 * `E[prod_j Theta_{start+j}^exps[j]]` for the window starting at site `start` (1-based).
 *
 * # Safety
 * `exps` must hold `len` values; `out` must be writable.
 */
enum HnStatus hn_theta_product_moment(size_t start,
                                      const uint32_t *exps,
                                      size_t len,
                                      size_t n,
                                      double theta_left,
                                      double theta_right,
                                      double *out);

/**
 * Exact local-equilibrium deviation of the duality window `p` placed at `x`.
 *
 * # Safety
 * `p` must hold `len` values; `out` must be writable.
 */
enum HnStatus hn_le_deviation(double x,
                              const uint32_t *p,
                              size_t len,
                              size_t n,
                              double theta_left,
                              double theta_right,
                              double *out);

/**
 * `int_0^1 h(rho(x)) phi(x) dx` with default quadrature controls.
 *
 * # Safety
 * `g` and `phi` must be live handles; `out` must be writable.
 */
enum HnStatus hn_lln_limit(const struct HnLocalFunction *g,
                           const struct HnTestFunction *phi,
                           double theta_left,
                           double theta_right,
                           double *out);

/**
 * Parameter and conditional parts of the CLT variance.
 *
 * # Safety
 * `g` and `phi` must be live handles; both out-pointers must be writable.
 */
enum HnStatus hn_clt_variances(const struct HnLocalFunction *g,
                               const struct HnTestFunction *phi,
                               double theta_left,
                               double theta_right,
                               double *sigma_t_sq,
                               double *sigma_e_sq);

/**
 * Free energy `F(theta, lambda)` of a bounded local function.
 *
 * # Safety
 * `g` must be a live handle; `out` must be writable.
 */
enum HnStatus hn_free_energy(double theta,
                             double lambda,
                             const struct HnLocalFunction *g,
                             double *out);

/**
 * Rate function `I(theta, x)`, the Legendre transform of the free energy.
 *
 * # Safety
 * `g` must be a live handle; `out` must be writable.
 */
enum HnStatus hn_rate_function(double theta,
                               double x,
                               const struct HnLocalFunction *g,
                               double *out);

/**
 * Path rate `J(u)` of a non-decreasing profile sampled on a uniform grid of `len` points.
 *
 * # Safety
 * `grid` must hold `len` values; `out` must be writable.
 */
enum HnStatus hn_path_rate(const double *grid,
                           size_t len,
                           double theta_left,
                           double theta_right,
                           double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HARMONIC_NESS_H */
