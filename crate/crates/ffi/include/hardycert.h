#ifndef HARDYCERT_H
#define HARDYCERT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HcStatus {
  HC_STATUS_OK = 0,
  HC_STATUS_NULL_POINTER = 1,
  HC_STATUS_INVALID_UTF8 = 2,
  HC_STATUS_CONFIG_ERROR = 3,
  HC_STATUS_COMPUTE_ERROR = 4,
  HC_STATUS_NOT_FOUND = 5,
  HC_STATUS_PANIC = 6,
} HcStatus;

/**
 * Validated run configuration.
 */
typedef struct HcConfig HcConfig;

/**
 * Result of [`hc_compute`]; owns its JSON rendering.
 */
typedef struct HcReport HcReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, a static string.
 */
const char *hc_version(void);

/**
 * Message of the last failure on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *hc_last_error(void);

/**
 * Parses and validates a JSON configuration.
 *
 * # Safety
 * `json` must be a nul-terminated string and `out` a valid pointer.
 */
enum HcStatus hc_config_from_json(const char *json, struct HcConfig **out);

/**
 * Overrides the number of grid nodes per axis.
 *
 * # Safety
 * `cfg` must come from [`hc_config_from_json`].
 */
enum HcStatus hc_config_set_nodes(struct HcConfig *cfg, size_t nodes);

/**
 * # Safety
 * `cfg` must come from [`hc_config_from_json`] or be null.
 */
void hc_config_free(struct HcConfig *cfg);

/**
 * Evaluates the functionals, and the norm estimate when `with_norm` is
 * nonzero.
 *
 * # Safety
 * `cfg` must be a live configuration and `out` a valid pointer.
 */
enum HcStatus hc_compute(const struct HcConfig *cfg, int with_norm, struct HcReport **out);

/**
 * Value of the functional `name` (e.g. `"B1"`).
 *
 * # Safety
 * `report` must be live, `name` nul-terminated, `out` valid.
 */
enum HcStatus hc_report_value(const struct HcReport *report, const char *name, double *out);

/**
 * Certified interval for the best constant; `upper` is infinite when no
 * theorem bound applies.
 *
 * # Safety
 * `report` must be live and both out pointers valid.
 */
enum HcStatus hc_report_interval(const struct HcReport *report, double *lower, double *upper);

/**
 * Direct norm estimate; `NotFound` unless computed with `with_norm`.
 *
 * # Safety
 * `report` must be live and `out` valid.
 */
enum HcStatus hc_report_estimate(const struct HcReport *report, double *out);

/**
 * 1 when every chained estimate held, 0 otherwise, -1 for null.
 *
 * # Safety
 * `report` must be live or null.
 */
int hc_report_passed(const struct HcReport *report);

/**
 * Full report as JSON, owned by `report`.
 *
 * # Safety
 * `report` must be live or null.
 */
const char *hc_report_json(const struct HcReport *report);

/**
 * # Safety
 * `report` must come from [`hc_compute`] or be null.
 */
void hc_report_free(struct HcReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HARDYCERT_H */
