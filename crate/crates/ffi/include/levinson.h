#ifndef LEVINSON_H
#define LEVINSON_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible function.
typedef enum LevStatus {
  LEV_STATUS_OK = 0,
  LEV_STATUS_PARSE = 1,
  LEV_STATUS_VALIDATION = 2,
  LEV_STATUS_NUMERICAL = 3,
  LEV_STATUS_RESOLUTION = 4,
  LEV_STATUS_MATCHING_SINGULAR = 5,
  LEV_STATUS_RANGE = 6,
  LEV_STATUS_INCONSISTENCY = 7,
  LEV_STATUS_NON_INTEGER_WINDING = 8,
  LEV_STATUS_USAGE = 9,
  LEV_STATUS_IO = 10,
  LEV_STATUS_NULL_POINTER = 11,
  LEV_STATUS_INVALID_UTF8 = 12,
  LEV_STATUS_PANIC = 13,
} LevStatus;

// Verdict of a report.
typedef enum LevVerdict {
  LEV_VERDICT_PASS = 0,
  LEV_VERDICT_FAIL = 1,
  LEV_VERDICT_HYPOTHESIS_VIOLATED = 2,
} LevVerdict;

// Parsed, validated run configuration.
typedef struct LevConfig LevConfig;

// Result of a full Levinson check.
typedef struct LevReport LevReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. The pointer is
// valid until the next library call on the same thread.
const char *lev_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *lev_version(void);

// Releases a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void lev_string_free(char *s);

// Parses a TOML configuration. `base_dir` (may be NULL) resolves relative
// table paths.
//
// # Safety
// `text` and `base_dir` must be NULL or valid NUL-terminated strings;
// `out` must be a valid pointer.
enum LevStatus lev_config_parse(const char *text, const char *base_dir, struct LevConfig **out);

// Applies a dotted `key=value` override, revalidating the whole config.
// On failure the config is unchanged.
//
// # Safety
// `config` must be a live handle and `assignment` a valid string.
enum LevStatus lev_config_set(struct LevConfig *config, const char *assignment);

// The validated config serialized back to TOML.
//
// # Safety
// `config` must be a live handle; `out` a valid pointer.
enum LevStatus lev_config_to_toml(const struct LevConfig *config, char **out);

// # Safety
// `config` must be NULL or a live handle; it is invalid afterwards.
void lev_config_free(struct LevConfig *config);

// Unwrapped variable-phase shift `delta_l(lambda)` of the configured
// potential.
//
// # Safety
// `config` must be a live handle; `out` a valid pointer.
enum LevStatus lev_phase_shift(const struct LevConfig *config,
                               uint32_t ell,
                               double lambda,
                               double *out);

// Number of bound states in channel `ell`.
//
// # Safety
// `config` must be a live handle; `out` a valid pointer.
enum LevStatus lev_bound_count(const struct LevConfig *config, uint32_t ell, uint64_t *out);

// Runs the full check (both identities and the winding relation).
//
// # Safety
// `config` must be a live handle; `out` a valid pointer.
enum LevStatus lev_run_levinson(const struct LevConfig *config, struct LevReport **out);

// # Safety
// `report` must be a live handle; `out` a valid pointer.
enum LevStatus lev_report_trace_p(const struct LevReport *report, uint64_t *out);

// Real and imaginary parts of `int tr[i(S-1)* S'] d lambda`.
//
// # Safety
// `report` must be a live handle; `re` and `im` valid pointers.
enum LevStatus lev_report_lhs_topological(const struct LevReport *report, double *re, double *im);

// Per-channel classical value and the literal value with the Born
// subtraction.
//
// # Safety
// `report` must be a live handle; outputs valid pointers.
enum LevStatus lev_report_lhs_classical(const struct LevReport *report,
                                        double *per_channel,
                                        double *literal);

// # Safety
// `report` must be a live handle; outputs valid pointers.
enum LevStatus lev_report_winding(const struct LevReport *report,
                                  double *winding,
                                  int64_t *rounded);

// # Safety
// `report` must be a live handle; `out` a valid pointer.
enum LevStatus lev_report_verdict(const struct LevReport *report, enum LevVerdict *out);

// The report as JSON; release with [`lev_string_free`].
//
// # Safety
// `report` must be a live handle; `out` a valid pointer.
enum LevStatus lev_report_to_json(const struct LevReport *report, char **out);

// # Safety
// `report` must be NULL or a live handle; it is invalid afterwards.
void lev_report_free(struct LevReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LEVINSON_H */
