#ifndef PLAP_RADIAL_H
#define PLAP_RADIAL_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Outcome of a call. Values 0 to 5 match the command-line exit codes.
 */
typedef enum RpStatus {
  RP_STATUS_OK = 0,
  /**
   * Internal consistency check failed.
   */
  RP_STATUS_INTERNAL = 1,
  /**
   * Schema violation or invalid argument.
   */
  RP_STATUS_INVALID_INPUT = 2,
  /**
   * Expression syntax error.
   */
  RP_STATUS_EXPRESSION = 3,
  /**
   * Iteration budget or value cap reached; the solution is still returned.
   */
  RP_STATUS_NOT_CONVERGED = 4,
  /**
   * Evaluation domain error or non-finite value.
   */
  RP_STATUS_DOMAIN = 5,
  RP_STATUS_NULL_POINTER = 10,
  RP_STATUS_INVALID_UTF8 = 11,
  /**
   * Caller buffer shorter than the data to copy.
   */
  RP_STATUS_BUFFER_TOO_SMALL = 12,
  /**
   * Component index out of range.
   */
  RP_STATUS_OUT_OF_RANGE = 13,
  RP_STATUS_PANIC = 14,
} RpStatus;

/**
 * A loaded problem: expressions, grid and iteration settings.
 */
typedef struct RpProblem RpProblem;

/**
 * Converged (or last) profiles of a solve together with its report.
 */
typedef struct RpSolution RpSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *rp_version(void);

/**
 * Message for the most recent failure on this thread, or null.
 *
 * The pointer stays valid until the next `rp_` call on the same thread.
 */
const char *rp_last_error_message(void);

/**
 * Parses a problem document (the command-line problem-file format).
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable. On success
 * `*out` owns a problem to be released with [`rp_problem_free`].
 */
enum RpStatus rp_problem_from_json(const char *json, struct RpProblem **out);

/**
 * # Safety
 * `problem` must come from [`rp_problem_from_json`] and not be used afterwards. Null is ignored.
 */
void rp_problem_free(struct RpProblem *problem);

/**
 * Number of unknowns `m`, or 0 for a null handle.
 *
 * # Safety
 * `problem` must be null or a live handle.
 */
size_t rp_problem_components(const struct RpProblem *problem);

/**
 * Warnings raised while loading (sampled hypothesis violations) as a JSON array.
 *
 * # Safety
 * `problem` must be a live handle; `out` must be writable.
 */
enum RpStatus rp_problem_warnings_json(const struct RpProblem *problem, char **out);

/**
 * Solves the system on the problem grid.
 *
 * Returns [`RpStatus::NotConverged`] with `*out` still set when the budget or
 * the value cap was reached.
 *
 * # Safety
 * `problem` must be a live handle; `out` must be writable. `*out` is released
 * with [`rp_solution_free`].
 */
enum RpStatus rp_solve(const struct RpProblem *problem, struct RpSolution **out);

/**
 * # Safety
 * `solution` must come from [`rp_solve`] and not be used afterwards. Null is ignored.
 */
void rp_solution_free(struct RpSolution *solution);

/**
 * Number of grid nodes, or 0 for a null handle.
 *
 * # Safety
 * `solution` must be null or a live handle.
 */
size_t rp_solution_len(const struct RpSolution *solution);

/**
 * Number of components, or 0 for a null handle.
 *
 * # Safety
 * `solution` must be null or a live handle.
 */
size_t rp_solution_components(const struct RpSolution *solution);

/**
 * # Safety
 * `solution` must be null or a live handle.
 */
bool rp_solution_converged(const struct RpSolution *solution);

/**
 * # Safety
 * `solution` must be null or a live handle.
 */
size_t rp_solution_iterations(const struct RpSolution *solution);

/**
 * Copies the grid nodes into `buffer`, which must hold [`rp_solution_len`] values.
 *
 * # Safety
 * `solution` must be a live handle; `buffer` must be valid for `capacity` writes.
 */
enum RpStatus rp_solution_nodes(const struct RpSolution *solution, double *buffer, size_t capacity);

/**
 * Copies component `component` (0-based) into `buffer`.
 *
 * # Safety
 * `solution` must be a live handle; `buffer` must be valid for `capacity` writes.
 */
enum RpStatus rp_solution_profile(const struct RpSolution *solution,
                                  size_t component,
                                  double *buffer,
                                  size_t capacity);

/**
 * The solve report, identical to the command line's `report.json`.
 *
 * # Safety
 * `solution` must be a live handle; `out` must be writable.
 */
enum RpStatus rp_solution_report_json(const struct RpSolution *solution, char **out);

/**
 * Classifies the integral conditions and writes the prediction report.
 *
 * A non-positive or non-finite `epsilon` selects the problem's own.
 *
 * # Safety
 * `problem` must be a live handle; `out` must be writable.
 */
enum RpStatus rp_predict_json(const struct RpProblem *problem, double epsilon, char **out);

/**
 * Solves on `[0, R], [0, 2R], ...` and writes the growth report.
 *
 * A non-positive or non-finite `base_r` selects the problem's `r_max`.
 *
 * # Safety
 * `problem` must be a live handle; `out` must be writable.
 */
enum RpStatus rp_sweep_json(const struct RpProblem *problem,
                            double base_r,
                            uint32_t doublings,
                            char **out);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void rp_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PLAP_RADIAL_H */
