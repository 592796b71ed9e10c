#ifndef ARKC_H
#define ARKC_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ArkcStatus {
  ARKC_STATUS_OK = 0,
  ARKC_STATUS_NULL_POINTER = 1,
  ARKC_STATUS_INVALID_ARGUMENT = 2,
  ARKC_STATUS_DIVERGENCE = 3,
  ARKC_STATUS_STEP_FAILED = 4,
  ARKC_STATUS_STAGE_CAP_EXCEEDED = 5,
  ARKC_STATUS_REDUCE_STEP = 6,
  ARKC_STATUS_REFERENCE_UNATTAINABLE = 7,
  ARKC_STATUS_IO = 8,
  ARKC_STATUS_BUFFER_SIZE = 9,
  ARKC_STATUS_PANIC = 10,
} ArkcStatus;

typedef enum ArkcScheme {
  ARKC_SCHEME_CHEB1 = 0,
  ARKC_SCHEME_RKC = 1,
  ARKC_SCHEME_AD1 = 2,
  ARKC_SCHEME_ARKC = 3,
} ArkcScheme;

/**
 * Opaque problem handle.
 */
typedef struct ArkcProblem ArkcProblem;

/**
 * Vector field callback: write `f(y)` into `out`, both of length `n`.
 */
typedef void (*ArkcField)(const double *y, double *out, size_t n, void *user_data);

typedef struct ArkcAdaptiveOptions {
  double atol;
  double rtol;
  double h_init;
  double t0;
  double t_end;
  uint64_t max_steps;
  /**
   * `Arkc` or `Rkc`.
   */
  enum ArkcScheme scheme;
} ArkcAdaptiveOptions;

typedef struct ArkcStats {
  uint64_t steps_accepted;
  uint64_t steps_rejected;
  uint64_t fd_evals;
  uint64_t fa_evals;
  uint64_t s_max;
  double final_time;
  /**
   * Nonzero when `max_steps` was reached before the end time.
   */
  int incomplete;
} ArkcStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *arkc_version(void);

/**
 * Message of the last failed call on this thread (empty if none). Valid
 * until the next failing call on the same thread.
 */
const char *arkc_last_error_message(void);

/**
 * Periodic linear advection-diffusion on `n_cells` cells with speed `a`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum ArkcStatus arkc_problem_linear_ad(size_t n_cells, double a, struct ArkcProblem **out);

/**
 * Burgers equation with reaction term on `n_cells` cells.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum ArkcStatus arkc_problem_burgers(size_t n_cells, struct ArkcProblem **out);

/**
 * User-defined split problem. `advection_reaction` may be NULL. `linear`
 * nonzero means spectral radii are estimated only once.
 *
 * # Safety
 * The callbacks must be safe to call with `user_data` for the lifetime of
 * the handle, from any thread; `out` must be valid for writes.
 */
enum ArkcStatus arkc_problem_custom(size_t dimension,
                                    ArkcField diffusion,
                                    ArkcField advection_reaction,
                                    void *user_data,
                                    int linear,
                                    struct ArkcProblem **out);

/**
 * # Safety
 * `problem` must be a handle from `arkc_problem_*` or NULL.
 */
size_t arkc_problem_dimension(const struct ArkcProblem *problem);

/**
 * Copy the benchmark initial state into `y0` (length `n`). Custom problems
 * have none and return `InvalidArgument`.
 *
 * # Safety
 * `problem` must be a valid handle and `y0` valid for `n` writes.
 */
enum ArkcStatus arkc_problem_initial_state(const struct ArkcProblem *problem, double *y0, size_t n);

/**
 * Release a handle. NULL is ignored.
 *
 * # Safety
 * `problem` must come from `arkc_problem_*` and not be used afterwards.
 */
void arkc_problem_free(struct ArkcProblem *problem);

/**
 * Defaults: `atol = rtol = tol`, `h_init = 1e-3`, span `[0, t_end]`
 * (`t_end` is 1/2 for the benchmarks, 1 for custom problems).
 *
 * # Safety
 * `problem` must be a valid handle or NULL.
 */
struct ArkcAdaptiveOptions arkc_adaptive_options_default(const struct ArkcProblem *problem,
                                                         double tol);

/**
 * Adaptive integration from `y0` to `options.t_end`; the final state goes
 * to `y_out`. `stats` may be NULL.
 *
 * # Safety
 * Pointers must be valid; `y0` and `y_out` must hold `n` values.
 */
enum ArkcStatus arkc_integrate_adaptive(const struct ArkcProblem *problem,
                                        const double *y0,
                                        size_t n,
                                        const struct ArkcAdaptiveOptions *options,
                                        double *y_out,
                                        struct ArkcStats *stats);

/**
 * `n_steps` equal steps of `scheme` with fixed stage count and damping.
 *
 * # Safety
 * Pointers must be valid; `y0` and `y_out` must hold `n` values.
 */
enum ArkcStatus arkc_integrate_fixed(const struct ArkcProblem *problem,
                                     const double *y0,
                                     size_t n,
                                     double t0,
                                     double t_end,
                                     size_t n_steps,
                                     enum ArkcScheme scheme,
                                     size_t stages,
                                     double eta,
                                     double *y_out,
                                     struct ArkcStats *stats);

/**
 * First-order stability polynomial at `(p, q)`.
 *
 * # Safety
 * `re` and `im` must be valid for writes.
 */
enum ArkcStatus arkc_eval_r1(double p, double q, size_t s, double eta, double *re, double *im);

/**
 * Second-order stability polynomial at `(p, q)`.
 *
 * # Safety
 * `re` and `im` must be valid for writes.
 */
enum ArkcStatus arkc_eval_r2(double p, double q, size_t s, double eta, double *re, double *im);

/**
 * Inscribed-ellipse half-axes of the stability region (default grid).
 * `second_order` selects the second-order polynomial.
 *
 * # Safety
 * `d_s` and `a_s` must be valid for writes.
 */
enum ArkcStatus arkc_scan_metrics(int second_order, size_t s, double eta, double *d_s, double *a_s);

/**
 * Damping from the standard table for `rho_A / sqrt(rho_D)` and `s` stages.
 *
 * # Safety
 * `eta` must be valid for writes.
 */
enum ArkcStatus arkc_select_damping(double rho_ratio, size_t s, double *eta);

/**
 * Whether the curve `q = ratio sqrt(-p)` lies in the stability region.
 *
 * # Safety
 * `stable` must be valid for writes.
 */
enum ArkcStatus arkc_verify_table_entry(double ratio, size_t s, double eta, int *stable);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ARKC_H */
