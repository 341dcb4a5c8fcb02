#ifndef CONFLICTLENS_H
#define CONFLICTLENS_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Outcome of a fallible call.
 */
typedef enum {
  CL_STATUS_OK = 0,
  /**
   * A required pointer argument was NULL.
   */
  CL_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  CL_STATUS_INVALID_UTF8 = 2,
  /**
   * The scenario or CNF text was rejected, or an argument is out of range.
   */
  CL_STATUS_INVALID_INPUT = 3,
  /**
   * The analysis itself failed, e.g. a strategy bound was exceeded.
   */
  CL_STATUS_ANALYSIS_FAILED = 4,
  /**
   * An internal error was caught at the boundary.
   */
  CL_STATUS_INTERNAL = 5,
} ClStatus;

/**
 * The result of analysing a scenario.
 */
typedef struct ClReport ClReport;

/**
 * A validated, compiled scenario.
 */
typedef struct ClScenario ClScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, a static string.
 */
const char *cl_version(void);

/**
 * Message of the last failed call on this thread, or NULL. The pointer is
 * valid until the next call into the library on the same thread.
 */
const char *cl_last_error(void);

/**
 * Parses, validates and compiles scenario text. A negative `horizon`
 * keeps the declared one.
 *
 * # Safety
 * `text` must be NULL or a NUL-terminated string; `out` must be NULL or
 * point to writable storage for a handle.
 */
ClStatus cl_scenario_parse(const char *text, int64_t horizon, ClScenario **out);

/**
 * Loads one of the bundled scenarios by name, e.g. `highway_ex4`.
 *
 * # Safety
 * As for [`cl_scenario_parse`].
 */
ClStatus cl_scenario_fixture(const char *name, int64_t horizon, ClScenario **out);

/**
 * Horizon the scenario was compiled with, 0 for NULL.
 *
 * # Safety
 * `sc` must be NULL or a live handle.
 */
size_t cl_scenario_horizon(const ClScenario *sc);

/**
 * # Safety
 * `sc` must be NULL or a handle not yet freed.
 */
void cl_scenario_free(ClScenario *sc);

/**
 * Analyses a scenario. `max_level` 1 to 4 allows resolution up to C1..C4;
 * 0 only detects. `strategy_bound` 0 keeps the default.
 *
 * # Safety
 * `sc` must be NULL or a live handle; `out` must be NULL or writable.
 */
ClStatus cl_resolve(const ClScenario *sc,
                    uint32_t max_level,
                    size_t strategy_bound,
                    ClReport **out);

/**
 * 0 no conflict, 1 resolved, 2 unresolved (the CLI's exit codes); -1 for
 * NULL.
 *
 * # Safety
 * `r` must be NULL or a live handle.
 */
int32_t cl_report_verdict(const ClReport *r);

/**
 * Level the conflict was resolved at, 1 to 4; 0 if none; -1 for NULL.
 *
 * # Safety
 * `r` must be NULL or a live handle.
 */
int32_t cl_report_level(const ClReport *r);

/**
 * Number of surviving strategies.
 *
 * # Safety
 * `r` must be NULL or a live handle.
 */
size_t cl_report_strategy_count(const ClReport *r);

/**
 * Number of conflict causes over all rounds.
 *
 * # Safety
 * `r` must be NULL or a live handle.
 */
size_t cl_report_cause_count(const ClReport *r);

/**
 * The report as JSON, or NULL for NULL.
 *
 * # Safety
 * `r` must be NULL or a live handle.
 */
char *cl_report_json(const ClReport *r);

/**
 * The justification chain as JSON, or NULL for NULL.
 *
 * # Safety
 * `r` must be NULL or a live handle.
 */
char *cl_explain_json(const ClReport *r);

/**
 * The justification chain as text, or NULL for NULL.
 *
 * # Safety
 * `r` must be NULL or a live handle.
 */
char *cl_explain_text(const ClReport *r);

/**
 * # Safety
 * `r` must be NULL or a handle not yet freed.
 */
void cl_report_free(ClReport *r);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library, not yet freed.
 */
void cl_string_free(char *s);

/**
 * Seed of the SAT solver's initial activities for later calls in this
 * process. Results do not depend on it.
 */
void cl_set_seed(uint64_t seed);

/**
 * Decides a DIMACS CNF. On success `*out_sat` is true iff satisfiable.
 *
 * # Safety
 * `dimacs` must be NULL or a NUL-terminated string; `out_sat` must be NULL
 * or writable.
 */
ClStatus cl_solve_dimacs(const char *dimacs, bool *out_sat);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CONFLICTLENS_H */
