#ifndef ESC_H
#define ESC_H

/* Generated by cbindgen from esc-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Status of one call. A verification status means a mathematical contract
// of the tuner was broken; anything else wrong with inputs or I/O is a
// validation status.
typedef enum EscStatus {
  ESC_STATUS_OK = 0,
  ESC_STATUS_INVALID_ARGUMENT = 1,
  ESC_STATUS_VALIDATION = 2,
  ESC_STATUS_VERIFICATION = 3,
} EscStatus;

// One finished tuning run, tied to the workload it was produced from.
typedef struct EscRun EscRun;

// A validated workload and everything derived from it.
typedef struct EscWorkload EscWorkload;

// Tuning options in C-friendly form. Integer selectors out of range are
// rejected with `ESC_STATUS_INVALID_ARGUMENT`.
typedef struct EscOptions {
  // 0 two-phase greedy, 1 MCTS.
  uint32_t algorithm;
  // What-if call interception: 0 off, 1 bound, 2 coverage.
  uint32_t wii;
  // Early stopping: 0 off, 1 raw bounds, 2 interaction-refined bounds.
  uint32_t esc;
  // Verification scheme: 0 algorithm default, 1 heuristic, 2 generic,
  // 3 fixed-step.
  uint32_t esvs;
  // Improvement-loss tolerance in (0,1).
  double epsilon;
  // What-if call budget.
  uint64_t budget;
  // Configuration size cap K.
  uint64_t k;
  // Verification grid step, in what-if calls.
  uint64_t step;
  // Concavity-significance threshold in (0,1).
  double sigma;
  // Feature-similarity threshold in [0,1].
  double tau;
  // Interception gap threshold, fraction of a query's base cost.
  double theta;
  uint64_t seed;
} EscOptions;

// Message of the most recent failure on this thread. Empty string when no
// failure happened yet; valid until the next failing call on this thread.
const char *esc_last_error(void);

// Releases a string returned through an out-pointer.
//
// # Safety
// `s` must be null or a string previously returned by this library.
void esc_string_free(char *s);

// Generates a workload from a preset name ("tpch-like"), a generator spec
// JSON file path, or inline generator spec JSON.
//
// # Safety
// `spec` must be a NUL-terminated string; `out` a valid pointer.
enum EscStatus esc_workload_generate(const char *spec, uint64_t seed, struct EscWorkload **out);

// Parses and validates a workload document.
//
// # Safety
// `json` must be a NUL-terminated string; `out` a valid pointer.
enum EscStatus esc_workload_from_json(const char *json, struct EscWorkload **out);

// Serializes the workload document.
//
// # Safety
// `w` must be a live workload handle; `out` a valid pointer.
enum EscStatus esc_workload_to_json(const struct EscWorkload *w, char **out);

// Number of queries; 0 for a null handle.
//
// # Safety
// `w` must be null or a live workload handle.
uint64_t esc_workload_query_count(const struct EscWorkload *w);

// Number of candidate indexes; 0 for a null handle.
//
// # Safety
// `w` must be null or a live workload handle.
void esc_workload_free(struct EscWorkload *w);

// # Safety
// `w` must be null or a live workload handle.
uint64_t esc_workload_index_count(const struct EscWorkload *w);

// Fills `out` with the default options: two-phase greedy, interception
// off, raw-bound early stopping with the algorithm-default scheme,
// epsilon 0.05, budget 20000, K 20, step 100, sigma 0.5, tau 0.2,
// theta 0.05, seed 0.
//
// # Safety
// `out` must be a valid pointer.
enum EscStatus esc_options_default(struct EscOptions *out);

// Runs one tuning session.
//
// # Safety
// `w` and `opts` must be live; `out` a valid pointer.
enum EscStatus esc_tune(const struct EscWorkload *w,
                        const struct EscOptions *opts,
                        struct EscRun **out);

// # Safety
// `r` must be null or a live run handle.
void esc_run_free(struct EscRun *r);

// What-if calls consumed; 0 for a null handle.
//
// # Safety
// `r` must be null or a live run handle.
uint64_t esc_run_calls_used(const struct EscRun *r);

// # Safety
// `r` must be null or a live run handle.
bool esc_run_stopped_early(const struct EscRun *r);

// 0 natural, 1 early stop, 2 budget exhausted; -1 for a null handle.
//
// # Safety
// `r` must be null or a live run handle.
int32_t esc_run_termination(const struct EscRun *r);

// Observed improvement of the returned configuration; NaN for a null
// handle.
//
// # Safety
// `r` must be null or a live run handle.
double esc_run_observed_improvement(const struct EscRun *r);

// # Safety
// `r` must be null or a live run handle.
uint64_t esc_run_esv_invocations(const struct EscRun *r);

// Number of indexes in the returned configuration; 0 for a null handle.
//
// # Safety
// `r` must be null or a live run handle.
uint64_t esc_run_config_len(const struct EscRun *r);

// Identifier of the `i`-th selected index.
//
// # Safety
// `w` and `r` must be live handles; `out` a valid pointer.
enum EscStatus esc_run_config_member(const struct EscWorkload *w,
                                     const struct EscRun *r,
                                     uint64_t i,
                                     char **out);

// Writes workload.json, curve.csv, calls.csv and result.json into `dir`.
//
// # Safety
// `w` and `r` must be live handles; `dir` a NUL-terminated path.
enum EscStatus esc_run_save(const struct EscWorkload *w, const struct EscRun *r, const char *dir);

// The run's result document as JSON.
//
// # Safety
// `w` and `r` must be live handles; `out` a valid pointer.
enum EscStatus esc_run_result_json(const struct EscWorkload *w, const struct EscRun *r, char **out);

// The per-decision curve CSV.
//
// # Safety
// `r` must be a live run handle; `out` a valid pointer.
enum EscStatus esc_run_curve_csv(const struct EscRun *r, char **out);

// The what-if call log CSV.
//
// # Safety
// `w` and `r` must be live handles; `out` a valid pointer.
enum EscStatus esc_run_calls_csv(const struct EscWorkload *w, const struct EscRun *r, char **out);

// Improvement loss, call savings and overhead of `early` against
// `ground_truth`, as a JSON document. The ground-truth run must have the
// same algorithm, seed, interception mode, K and budget, and must not have
// stopped early.
//
// # Safety
// All handles must be live; `out` a valid pointer.
enum EscStatus esc_evaluate(const struct EscWorkload *w,
                            const struct EscRun *ground_truth,
                            const struct EscRun *early,
                            char **out);

#endif  /* ESC_H */
