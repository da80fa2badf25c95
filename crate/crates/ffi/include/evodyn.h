/* C interface to the evodyn model-evolution library. */

#ifndef EVODYN_H
#define EVODYN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum EvodynStatus {
  // Success; out-pointers were written.
  EVODYN_STATUS_OK = 0,
  // A required pointer argument was null.
  EVODYN_STATUS_NULL_POINTER = 1,
  // A string argument was not valid UTF-8.
  EVODYN_STATUS_INVALID_UTF8 = 2,
  // A size or value argument was rejected at the boundary.
  EVODYN_STATUS_INVALID_ARGUMENT = 3,
  // The library reported an error; see `evodyn_last_error`.
  EVODYN_STATUS_FAILURE = 4,
  // An internal panic was caught at the boundary.
  EVODYN_STATUS_PANIC = 5,
} EvodynStatus;

// A loaded patient cohort.
typedef struct EvodynCohort EvodynCohort;

// A parsed model structure plus its state names.
typedef struct EvodynModel EvodynModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static string; do not free.
const char *evodyn_version(void);

// Message for the most recent failure on this thread, or null after a
// success. Borrowed; valid until the next evodyn call on this thread.
const char *evodyn_last_error(void);

// Releases a string returned through an out-pointer. Null is a no-op.
//
// # Safety
// `s` must have been returned by this library and not freed before.
void evodyn_string_free(char *s);

// Builds a model from its JSON document (schema, lambda_max, trees).
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be a valid pointer.
enum EvodynStatus evodyn_model_from_json(const char *json, struct EvodynModel **out);

// Parses rendered equation text (`name(t+1) = expr` lines) into a model.
// `names` lists the state names in order; `lambda_max` sizes the shared
// parameter pool.
//
// # Safety
// `text` must be NUL-terminated; `names` must point to `n_names` valid
// NUL-terminated strings; `out` must be a valid pointer.
enum EvodynStatus evodyn_model_parse_text(const char *text,
                                          const char *const *names,
                                          size_t n_names,
                                          size_t lambda_max,
                                          struct EvodynModel **out);

// The built-in seven-state self-report fixture model.
//
// # Safety
// `out` must be a valid pointer.
enum EvodynStatus evodyn_model_mood_fixture(struct EvodynModel **out);

// Serializes a model to its JSON document.
//
// # Safety
// `model` must be a live handle; `out` must be a valid pointer.
enum EvodynStatus evodyn_model_to_json(const struct EvodynModel *model, char **out);

// Renders a model as one `name(t+1) = expr` line per state.
//
// # Safety
// `model` must be a live handle; `out` must be a valid pointer.
enum EvodynStatus evodyn_model_render(const struct EvodynModel *model, char **out);

// Number of state variables; 0 for a null handle.
//
// # Safety
// `model` must be null or a live handle.
size_t evodyn_model_state_count(const struct EvodynModel *model);

// Number of distinct parameters referenced; 0 for a null handle.
//
// # Safety
// `model` must be null or a live handle.
size_t evodyn_model_param_count(const struct EvodynModel *model);

// Advances the state one step. `params` supplies the model's distinct
// parameters in ascending pool order; `state` and `next` hold one value per
// state variable. With `clamp` set, outputs are clipped to [0, 1].
//
// # Safety
// `model` must be a live handle; the array arguments must match their
// declared lengths; `next` must have room for `n_state` values.
enum EvodynStatus evodyn_model_step(const struct EvodynModel *model,
                                    const double *params,
                                    size_t n_params,
                                    const double *state,
                                    size_t n_state,
                                    bool clamp,
                                    double *next);

// Releases a model handle. Null is a no-op.
//
// # Safety
// `model` must have been returned by this library and not freed before.
void evodyn_model_free(struct EvodynModel *model);

// Loads a cohort JSON file from disk.
//
// # Safety
// `path` must be NUL-terminated; `out` must be a valid pointer.
enum EvodynStatus evodyn_cohort_load(const char *path, struct EvodynCohort **out);

// Builds a cohort from its JSON document.
//
// # Safety
// `json` must be NUL-terminated; `out` must be a valid pointer.
enum EvodynStatus evodyn_cohort_from_json(const char *json, struct EvodynCohort **out);

// Number of patients; 0 for a null handle.
//
// # Safety
// `cohort` must be null or a live handle.
size_t evodyn_cohort_patient_count(const struct EvodynCohort *cohort);

// Releases a cohort handle. Null is a no-op.
//
// # Safety
// `cohort` must have been returned by this library and not freed before.
void evodyn_cohort_free(struct EvodynCohort *cohort);

// Evolves a model on the cohort and returns the best model's JSON document.
// `config_json` overrides individual evolution settings over the defaults
// (e.g. `{"population": 20, "master_seed": 7}`); null keeps every default.
// Deterministic for a fixed cohort and configuration.
//
// # Safety
// `cohort` must be a live handle; `config_json` must be null or
// NUL-terminated; `out_model_json` must be a valid pointer.
enum EvodynStatus evodyn_evolve_json(const struct EvodynCohort *cohort,
                                     const char *config_json,
                                     char **out_model_json);

// Exact dominated hypervolume of `n_points` rows of `n_objectives` values
// against a reference point of the same width.
//
// # Safety
// `points` must hold `n_points * n_objectives` values; `reference` must
// hold `n_objectives`; `out` must be a valid pointer.
enum EvodynStatus evodyn_hypervolume(const double *points,
                                     size_t n_points,
                                     size_t n_objectives,
                                     const double *reference,
                                     double *out);

// Two-sided Wilcoxon rank-sum test. Writes the first sample's rank-sum
// statistic and the p-value (exact for small tie-free pools, otherwise a
// tie-corrected normal approximation).
//
// # Safety
// `xs` and `ys` must hold their declared lengths; the out-pointers must be
// valid.
enum EvodynStatus evodyn_rank_sum(const double *xs,
                                  size_t n_xs,
                                  const double *ys,
                                  size_t n_ys,
                                  double *out_statistic,
                                  double *out_p);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EVODYN_H */
