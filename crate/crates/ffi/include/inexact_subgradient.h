#ifndef INEXACT_SUBGRADIENT_H
#define INEXACT_SUBGRADIENT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum IsgStatus {
  ISG_STATUS_OK = 0,
  ISG_STATUS_NULL_ARGUMENT = 1,
  ISG_STATUS_INVALID_ARGUMENT = 2,
  ISG_STATUS_INVALID_JSON = 3,
  /**
   * Projection or barrier failure, including a run that stopped on one.
   */
  ISG_STATUS_PROJECTION_FAILED = 4,
  ISG_STATUS_SOLVER_ERROR = 5,
  ISG_STATUS_PANIC = 6,
} IsgStatus;

/**
 * Opaque problem instance.
 */
typedef struct IsgInstance IsgInstance;

/**
 * Opaque finished run.
 */
typedef struct IsgRun IsgRun;

/**
 * Opaque feasible set.
 */
typedef struct IsgSet IsgSet;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Free with
 * [`isg_string_free`].
 */
char *isg_last_error_message(void);

/**
 * # Safety
 * `s` must come from this library or be NULL.
 */
void isg_string_free(char *s);

/**
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum IsgStatus isg_set_from_json(const char *json, struct IsgSet **out);

/**
 * Closed ball with the given center and radius.
 *
 * # Safety
 * `center` must point to `n` doubles; `out` must be writable.
 */
enum IsgStatus isg_set_new_ball(const double *center, size_t n, double radius, struct IsgSet **out);

/**
 * # Safety
 * `lower` and `upper` must point to `n` doubles; `out` must be writable.
 */
enum IsgStatus isg_set_new_box(const double *lower,
                               const double *upper,
                               size_t n,
                               struct IsgSet **out);

/**
 * # Safety
 * `set` must come from this library or be NULL.
 */
void isg_set_free(struct IsgSet *set);

/**
 * Dimension of the set, 0 for NULL.
 *
 * # Safety
 * `set` must be a live handle or NULL.
 */
size_t isg_set_dimension(const struct IsgSet *set);

/**
 * Writes `argmin_{z ∈ C} ⟨c, z⟩` to `out`.
 *
 * # Safety
 * `c` and `out` must point to `n` doubles.
 */
enum IsgStatus isg_set_lmo(const struct IsgSet *set, const double *c, double *out, size_t n);

/**
 * Frank-Wolfe feasible inexact projection of `v` started at `u ∈ C`.
 * `max_inner = 0` selects the default budget. The inner iteration count is
 * written to `iterations` when it is not NULL.
 *
 * # Safety
 * `u`, `v` and `out` must point to `n` doubles.
 */
enum IsgStatus isg_fw_project(const struct IsgSet *set,
                              double gamma,
                              double theta,
                              double lambda,
                              const double *u,
                              const double *v,
                              size_t n,
                              size_t max_inner,
                              double *out,
                              size_t *iterations);

/**
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum IsgStatus isg_instance_from_json(const char *json, struct IsgInstance **out);

/**
 * Draws a sparse-recovery instance of dimension `n ≥ 2`.
 *
 * # Safety
 * `out` must be writable.
 */
enum IsgStatus isg_instance_generate(size_t n, uint64_t seed, struct IsgInstance **out);

/**
 * # Safety
 * `inst` must be a live handle; `out` must be writable.
 */
enum IsgStatus isg_instance_to_json(const struct IsgInstance *inst, char **out);

/**
 * # Safety
 * `inst` must be a live handle or NULL.
 */
size_t isg_instance_dimension(const struct IsgInstance *inst);

/**
 * # Safety
 * `inst` must come from this library or be NULL.
 */
void isg_instance_free(struct IsgInstance *inst);

/**
 * Solves `inst` with the rule and options of a run configuration JSON
 * (its problem field is ignored). NULL selects the default configuration.
 * A run that stops on a projection failure is still returned, together
 * with `ProjectionFailed`.
 *
 * # Safety
 * `inst` must be a live handle; `config_json` NULL or NUL-terminated;
 * `out` writable.
 */
enum IsgStatus isg_solve(const struct IsgInstance *inst,
                         const char *config_json,
                         struct IsgRun **out);

/**
 * # Safety
 * `run` must be a live handle; `out` must be writable.
 */
enum IsgStatus isg_run_report_json(const struct IsgRun *run, char **out);

/**
 * Per-iteration records as CSV with a header line.
 *
 * # Safety
 * `run` must be a live handle; `out` must be writable.
 */
enum IsgStatus isg_run_trace_csv(const struct IsgRun *run, char **out);

/**
 * Best objective value found, NaN for NULL.
 *
 * # Safety
 * `run` must be a live handle or NULL.
 */
double isg_run_f_rec(const struct IsgRun *run);

/**
 * Outer iterations performed.
 *
 * # Safety
 * `run` must be a live handle or NULL.
 */
size_t isg_run_iterations(const struct IsgRun *run);

/**
 * Copies the best point found into `out`.
 *
 * # Safety
 * `out` must point to `n` doubles.
 */
enum IsgStatus isg_run_x_rec(const struct IsgRun *run, double *out, size_t n);

/**
 * Runs every applicable trace check and writes the aggregated report as
 * JSON. `passed` receives 1 when no blocking check failed.
 *
 * # Safety
 * `inst` and `run` must be live handles; `out` writable; `passed` NULL or
 * writable.
 */
enum IsgStatus isg_run_verify_json(const struct IsgInstance *inst,
                                   const struct IsgRun *run,
                                   char **out,
                                   int32_t *passed);

/**
 * # Safety
 * `run` must come from this library or be NULL.
 */
void isg_run_free(struct IsgRun *run);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* INEXACT_SUBGRADIENT_H */
