#ifndef OPERAD_FORGE_H
#define OPERAD_FORGE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes.
typedef enum OfStatus {
  OF_STATUS_OK = 0,
  OF_STATUS_NULL_ARGUMENT = 1,
  OF_STATUS_INVALID_UTF8 = 2,
  OF_STATUS_USAGE = 3,
  OF_STATUS_MALFORMED_INPUT = 4,
  OF_STATUS_BOUND_EXCEEDED = 5,
  // a mathematical check failed (exit code 2 of the CLI)
  OF_STATUS_CHECK_FAILED = 6,
  // an internal error or a caught panic
  OF_STATUS_INTERNAL = 7,
} OfStatus;

// A quadratic operad presentation.
typedef struct OfPresentation OfPresentation;

// A rendered command report.
typedef struct OfReport OfReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Owned by the library.
const char *of_last_error(void);

// Library version, static string.
const char *of_version(void);

// Builtin presentation: "com", "ass", "lie" or "gerst".
//
// # Safety
// `name` must be a nul-terminated string; `out` a valid pointer.
enum OfStatus of_presentation_builtin(const char *name, struct OfPresentation **out);

// Presentation from the JSON file format.
//
// # Safety
// `json` must be a nul-terminated string; `out` a valid pointer.
enum OfStatus of_presentation_from_json(const char *json, struct OfPresentation **out);

// Koszul dual operad of `p` as a new handle.
//
// # Safety
// `p` must be a live handle; `out` a valid pointer.
enum OfStatus of_presentation_koszul_dual(const struct OfPresentation *p,
                                          struct OfPresentation **out);

// Dimension of the arity-`n` component of the presented operad.
//
// # Safety
// `p` must be a live handle; `out` a valid pointer.
enum OfStatus of_presentation_component_dim(const struct OfPresentation *p, size_t n, size_t *out);

// Whether the Koszul complex on `dim_v` generators of degree 0 is acyclic
// in every arity `1..=max_arity`.
//
// # Safety
// `p` must be a live handle; `out` a valid pointer.
enum OfStatus of_koszulity_check(const struct OfPresentation *p,
                                 size_t dim_v,
                                 size_t max_arity,
                                 bool *out);

// Release a presentation handle. Null is ignored.
//
// # Safety
// `p` must come from this library and not be used afterwards.
void of_presentation_free(struct OfPresentation *p);

// Stabilized `dim HH^n_w(k[x_1..x_vars])` at degree bound `degree`, and the HKR count.
//
// # Safety
// `dim` and `hkr` must be valid pointers.
enum OfStatus of_hochschild_dim(size_t vars,
                                int64_t degree,
                                size_t arity,
                                int64_t weight,
                                size_t *dim,
                                size_t *hkr);

// Run a CLI command (`argv` without the program name). The report handle is
// produced even when the command fails; `exit_code` follows the CLI contract.
//
// # Safety
// `argv` must hold `argc` nul-terminated strings; `out` a valid pointer.
enum OfStatus of_run(const char *const *argv, size_t argc, struct OfReport **out);

// The JSON report (empty when the command failed before producing one).
//
// # Safety
// `r` must be a live handle; the string lives as long as the handle.
const char *of_report_json(const struct OfReport *r);

// Diagnostics written by the command.
//
// # Safety
// `r` must be a live handle; the string lives as long as the handle.
const char *of_report_diagnostics(const struct OfReport *r);

// 0 = all checks pass, 1 = usage/input error, 2 = a mathematical check failed; −1 for null.
//
// # Safety
// `r` must be a live handle or null.
int32_t of_report_exit_code(const struct OfReport *r);

// Release a report handle. Null is ignored.
//
// # Safety
// `r` must come from this library and not be used afterwards.
void of_report_free(struct OfReport *r);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OPERAD_FORGE_H */
