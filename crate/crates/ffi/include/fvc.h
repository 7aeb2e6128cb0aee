#ifndef FVC_H
#define FVC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FvcStatus {
  FVC_STATUS_OK = 0,
  /**
   * A pointer was null or a string was not UTF-8.
   */
  FVC_STATUS_INVALID_ARGUMENT = 1,
  /**
   * The problem or trajectory could not be parsed, is invalid or does
   * not fit the grid.
   */
  FVC_STATUS_INVALID_INPUT = 2,
  /**
   * An argument is outside the domain of the operation.
   */
  FVC_STATUS_DOMAIN = 3,
  /**
   * The constraint map is not regular at the endpoints.
   */
  FVC_STATUS_REGULARITY = 4,
  FVC_STATUS_DIVERGED = 5,
  FVC_STATUS_INTERNAL = 6,
} FvcStatus;

/**
 * A validated problem together with its solver settings.
 */
typedef struct FvcProblem FvcProblem;

/**
 * Outcome of [`fvc_solve`].
 */
typedef struct FvcResult FvcResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *fvc_last_error_message(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void fvc_string_free(char *s);

/**
 * Parses a problem in the JSON format read by `fvc solve`.
 * `n_cells` overrides the grid size when nonzero.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum FvcStatus fvc_problem_from_json(const char *json, size_t n_cells, struct FvcProblem **out);

/**
 * # Safety
 * `p` must come from [`fvc_problem_from_json`] and not have been freed.
 */
void fvc_problem_free(struct FvcProblem *p);

/**
 * Number of grid cells of the problem, or 0 for null.
 *
 * # Safety
 * `p` must be null or a live problem handle.
 */
size_t fvc_problem_n_cells(const struct FvcProblem *p);

/**
 * Minimizes the problem from the zero control. `max_iters` overrides the
 * per-stage iteration cap when nonzero. Not converging is not an error;
 * query it with [`fvc_result_converged`].
 *
 * # Safety
 * `problem` must be a live handle and `out` a valid pointer.
 */
enum FvcStatus fvc_solve(const struct FvcProblem *problem,
                         size_t max_iters,
                         uint64_t seed,
                         struct FvcResult **out);

/**
 * # Safety
 * `r` must come from [`fvc_solve`] and not have been freed.
 */
void fvc_result_free(struct FvcResult *r);

/**
 * Objective value of the final iterate.
 *
 * # Safety
 * `r` must be a live result handle and `out` a valid pointer.
 */
enum FvcStatus fvc_result_objective(const struct FvcResult *r, double *out);

/**
 * # Safety
 * `r` must be a live result handle and `out` a valid pointer.
 */
enum FvcStatus fvc_result_converged(const struct FvcResult *r, bool *out);

/**
 * The report `fvc solve` writes, as JSON.
 *
 * # Safety
 * `r` must be a live result handle and `out` a valid pointer.
 */
enum FvcStatus fvc_result_report_json(const struct FvcResult *r, char **out);

/**
 * The optimal trajectory in the CSV format read by `fvc check`.
 *
 * # Safety
 * `r` must be a live result handle and `out` a valid pointer.
 */
enum FvcStatus fvc_result_trajectory_csv(const struct FvcResult *r, char **out);

/**
 * Residual report of a trajectory in CSV form, as JSON.
 *
 * # Safety
 * `problem` must be a live handle, `csv` a NUL-terminated string and
 * `out` a valid pointer.
 */
enum FvcStatus fvc_check_json(const struct FvcProblem *problem, const char *csv, char **out);

/**
 * Left Riemann-Liouville integral of order `alpha` of a scalar function
 * given by its values at the `n_cells + 1` nodes of a uniform grid on
 * `[a, b]`. Writes `n_cells + 1` node values to `out`.
 *
 * # Safety
 * `values` and `out` must each point to `n_cells + 1` doubles.
 */
enum FvcStatus fvc_rl_integral_left(const double *values,
                                    size_t n_cells,
                                    double a,
                                    double b,
                                    double alpha,
                                    double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FVC_H */
