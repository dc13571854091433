#ifndef LES_PLANNER_H
#define LES_PLANNER_H

/* Generated by cbindgen from les-planner-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Status code returned by every fallible entry point.
typedef enum LesStatus {
  LES_STATUS_OK = 0,
  LES_STATUS_NULL_POINTER = 1,
  LES_STATUS_INVALID_ARGUMENT = 2,
  LES_STATUS_INVALID_ENVIRONMENT = 3,
  LES_STATUS_IO = 4,
  LES_STATUS_NO_SOLUTION = 5,
  LES_STATUS_BUFFER_TOO_SMALL = 6,
  LES_STATUS_INTERNAL = 7,
} LesStatus;

// Sampling strategy selector.
typedef enum LesSampler {
  LES_SAMPLER_UNIFORM = 0,
  LES_SAMPLER_INFORMED = 1,
  LES_SAMPLER_RELEVANT = 2,
  LES_SAMPLER_LES = 3,
} LesSampler;

// Opaque environment handle.
typedef struct LesEnv LesEnv;

// Opaque run-result handle.
typedef struct LesRunResult LesRunResult;

// Planner options. Zero or negative optional fields mean "unset".
typedef struct LesPlanOptions {
  enum LesSampler sampler;
  uint64_t seed;
  // Wall-clock budget in seconds; <= 0 means unset.
  double time_budget_s;
  // Iteration budget; 0 means unset. At least one budget is required.
  uint64_t iteration_budget;
  // Steering range; <= 0 falls back to the environment's value.
  double eta;
  // Probability of the exploitative branch; negative uses the default.
  double p_les;
  // Goal bias; negative uses the default.
  double goal_bias;
} LesPlanOptions;

// Appendix measurement, plain data.
typedef struct LesAppendixReport {
  double empirical_p;
  double bound;
  double r_c;
  double std_err;
} LesAppendixReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Static name for a status code; never null.
const char *les_status_name(enum LesStatus status);

// Parse an environment from a JSON string.
//
// # Safety
// `json` must be a valid NUL-terminated string and `out` a valid pointer.
// The returned handle must be released with `les_env_free`.
enum LesStatus les_env_from_json(const char *json, struct LesEnv **out);

// Load an environment from a JSON file.
//
// # Safety
// `path` must be a valid NUL-terminated string and `out` a valid pointer.
enum LesStatus les_env_from_file(const char *path, struct LesEnv **out);

// # Safety
// `env` must come from `les_env_from_json`/`les_env_from_file` and must
// not be used afterwards. Null is a no-op.
void les_env_free(struct LesEnv *env);

// Search-space dimension of the environment; 0 for null.
//
// # Safety
// `env` must be a live handle or null.
uint32_t les_env_dimension(const struct LesEnv *env);

// Run the planner. On success `out` receives a result handle to be
// released with `les_result_free`.
//
// # Safety
// `env`, `options` and `out` must be valid pointers.
enum LesStatus les_plan(const struct LesEnv *env,
                        const struct LesPlanOptions *options,
                        struct LesRunResult **out);

// # Safety
// `result` must come from `les_plan` and must not be used afterwards.
void les_result_free(struct LesRunResult *result);

// Best solution cost; +inf when unsolved, NaN for null.
//
// # Safety
// `result` must be a live handle or null.
double les_result_final_cost(const struct LesRunResult *result);

// # Safety
// `result` must be a live handle or null.
uint64_t les_result_iterations(const struct LesRunResult *result);

// # Safety
// `result` must be a live handle or null.
uint64_t les_result_rewires(const struct LesRunResult *result);

// Number of states on the solution path; 0 when unsolved.
//
// # Safety
// `result` must be a live handle or null.
uintptr_t les_result_path_len(const struct LesRunResult *result);

// Copy the solution path into `buffer` as `path_len * dimension` doubles,
// state by state.
//
// # Safety
// `buffer` must point to at least `buffer_len` writable doubles.
enum LesStatus les_result_path_copy(const struct LesRunResult *result,
                                    double *buffer,
                                    uintptr_t buffer_len);

// Monte-Carlo check of the local-search improvement bound.
//
// # Safety
// `out` must be a valid pointer.
enum LesStatus les_verify_appendix(uint32_t dimension,
                                   double ratio,
                                   uint64_t samples,
                                   uint64_t seed,
                                   struct LesAppendixReport *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LES_PLANNER_H */
