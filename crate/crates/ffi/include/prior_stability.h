#ifndef PRIOR_STABILITY_H
#define PRIOR_STABILITY_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result code of every fallible call.
 */
typedef enum PsStatus {
  PS_STATUS_OK = 0,
  PS_STATUS_NULL_POINTER = -1,
  PS_STATUS_INVALID_ARGUMENT = -2,
  PS_STATUS_INCONSISTENT = -3,
  PS_STATUS_SOLVER = -4,
  PS_STATUS_PANIC = -5,
} PsStatus;

/**
 * Opaque decision problem.
 */
typedef struct PsProblem PsProblem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL if none failed.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *ps_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ps_version(void);

/**
 * Build a problem from a row-major utility matrix. Acts are labelled
 * `a1..an` and states `s1..sm`.
 *
 * # Safety
 * `utilities` must point to `n_acts * n_states` readable doubles and `out`
 * to writable storage for one handle.
 */
enum PsStatus ps_problem_new(const double *utilities,
                             size_t n_acts,
                             size_t n_states,
                             struct PsProblem **out_problem);

/**
 * Release a handle from [`ps_problem_new`]. NULL is ignored.
 *
 * # Safety
 * `problem` must be NULL or a handle not yet freed.
 */
void ps_problem_free(struct PsProblem *problem);

/**
 * Number of acts and states of a problem.
 *
 * # Safety
 * `problem` must be a live handle; the out pointers must be writable.
 */
enum PsStatus ps_problem_shape(const struct PsProblem *problem,
                               size_t *out_acts,
                               size_t *out_states);

/**
 * `E_π[u_a]`.
 *
 * # Safety
 * `prior_mass` must point to `n_states` doubles and `out_value` be writable.
 */
enum PsStatus ps_expected_utility(const struct PsProblem *problem,
                                  size_t act,
                                  const double *prior_mass,
                                  size_t n_states,
                                  double *out_value);

/**
 * Mark the Bayes acts under `prior_mass`: `out_flags[i]` is set to true for
 * optimal acts and false otherwise.
 *
 * # Safety
 * `prior_mass` must point to `n_states` doubles and `out_flags` to `n_acts`
 * writable bools, where `n_acts` is the problem's act count.
 */
enum PsStatus ps_bayes_acts(const struct PsProblem *problem,
                            const double *prior_mass,
                            size_t n_states,
                            bool *out_flags,
                            size_t n_acts);

/**
 * `R_{a,b}(ε)`, the worst expected advantage of `a` over `b` in the band.
 *
 * # Safety
 * `prior_mass` must point to `n_states` doubles and `out_value` be writable.
 */
enum PsStatus ps_pairwise_margin(const struct PsProblem *problem,
                                 size_t a,
                                 size_t b,
                                 const double *prior_mass,
                                 size_t n_states,
                                 double epsilon,
                                 double *out_value);

/**
 * `R(ε) = min_{b≠a} R_{a,b}(ε)`.
 *
 * # Safety
 * `prior_mass` must point to `n_states` doubles and `out_value` be writable.
 */
enum PsStatus ps_worst_case_margin(const struct PsProblem *problem,
                                   size_t act,
                                   const double *prior_mass,
                                   size_t n_states,
                                   double epsilon,
                                   double *out_value);

/**
 * Robustness radius by bisection to `tolerance`. When `act` is not Bayes at
 * the prior, `*out_is_bayes` is false and `*out_radius` is `-INFINITY`.
 *
 * # Safety
 * `prior_mass` must point to `n_states` doubles; the out pointers must be writable.
 */
enum PsStatus ps_robustness_radius(const struct PsProblem *problem,
                                   size_t act,
                                   const double *prior_mass,
                                   size_t n_states,
                                   double tolerance,
                                   double *out_radius,
                                   bool *out_is_bayes);

/**
 * Contamination need of `act`.
 *
 * When some prior in a band makes `act` optimal, `*out_admissible` is true,
 * `*out_epsilon` holds the smallest such radius and, if `out_witness` is not
 * NULL, the `n_states` masses of a witness prior are written there. When no
 * prior does, `*out_admissible` is false, `*out_epsilon` is `INFINITY` and,
 * if `out_weights` is not NULL, the `n_acts` mixture weights of the dominating
 * certificate are written there (zero for `act` itself).
 *
 * # Safety
 * `prior_mass` must point to `n_states` doubles; `out_witness` must be NULL
 * or hold `n_states` doubles; `out_weights` must be NULL or hold as many
 * doubles as the problem has acts.
 */
enum PsStatus ps_contamination_need(const struct PsProblem *problem,
                                    size_t act,
                                    const double *prior_mass,
                                    size_t n_states,
                                    double *out_epsilon,
                                    bool *out_admissible,
                                    double *out_witness,
                                    double *out_weights);

/**
 * Minimum of `⟨direction, π⟩` over the band of `radius` around `center`
 * intersected with the simplex. The minimizer is written to `out_point`
 * unless it is NULL.
 *
 * # Safety
 * `direction` and `center` must point to `n_states` doubles; `out_point`
 * must be NULL or hold `n_states` doubles.
 */
enum PsStatus ps_minimize_over_band(const double *direction,
                                    const double *center,
                                    size_t n_states,
                                    double radius,
                                    double *out_value,
                                    double *out_point);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PRIOR_STABILITY_H */
