#ifndef WOP_FFI_H
#define WOP_FFI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

#define WOP_BACKEND_EXACT 0

#define WOP_BACKEND_ANNEAL 1

#define WOP_BACKEND_REMOTE 2

typedef enum WopStatus {
  WOP_STATUS_OK = 0,
  WOP_STATUS_NULL_ARGUMENT = 1,
  WOP_STATUS_INVALID_UTF8 = 2,
  WOP_STATUS_PARSE = 3,
  WOP_STATUS_INVALID_INSTANCE = 4,
  WOP_STATUS_MALFORMED_SOLUTION = 5,
  WOP_STATUS_INFEASIBLE = 6,
  WOP_STATUS_ORACLE_LIMIT = 7,
  WOP_STATUS_INVALID_CONFIG = 8,
  WOP_STATUS_NO_INITIAL_SOLUTION = 9,
  WOP_STATUS_GENERATOR_INFEASIBLE = 10,
  WOP_STATUS_REMOTE = 11,
  WOP_STATUS_IO = 12,
  WOP_STATUS_MODEL = 13,
  WOP_STATUS_PANIC = 99,
} WopStatus;

/**
 * Opaque instance handle.
 */
typedef struct WopInstance WopInstance;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null. The pointer
 * stays valid until the next call into this library on the same thread.
 */
const char *wop_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *wop_version(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void wop_string_free(char *s);

/**
 * Parses an instance document. Does not validate it.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum WopStatus wop_instance_from_json(const char *json, struct WopInstance **out);

/**
 * # Safety
 * `h` must be null or a handle from this library, not yet freed.
 */
void wop_instance_free(struct WopInstance *h);

/**
 * # Safety
 * `h` must be a live handle; `out` must be writable.
 */
enum WopStatus wop_instance_to_json(const struct WopInstance *h, char **out);

/**
 * Item count, or 0 for a null handle.
 *
 * # Safety
 * `h` must be null or a live handle.
 */
uintptr_t wop_instance_num_items(const struct WopInstance *h);

/**
 * Location count, or 0 for a null handle.
 *
 * # Safety
 * `h` must be null or a live handle.
 */
uintptr_t wop_instance_num_locations(const struct WopInstance *h);

/**
 * Writes the validation report as JSON; `feasible` receives its verdict.
 *
 * # Safety
 * `h` must be a live handle; both out pointers must be writable.
 */
enum WopStatus wop_instance_validate(const struct WopInstance *h,
                                     bool *feasible,
                                     char **report_json);

/**
 * Generates an instance from a spec document (missing fields take
 * defaults). The feasibility witness is written as a solution document.
 *
 * # Safety
 * `spec_json` must be a NUL-terminated string; out pointers must be writable.
 */
enum WopStatus wop_generate_instance(const char *spec_json,
                                     struct WopInstance **out,
                                     char **witness_json);

/**
 * Checks a solution document against the instance.
 *
 * # Safety
 * `h` must be a live handle; `solution_json` NUL-terminated; out pointers writable.
 */
enum WopStatus wop_check_solution(const struct WopInstance *h,
                                  const char *solution_json,
                                  bool *feasible,
                                  char **report_json);

/**
 * Storage time and ground area of a feasible solution.
 *
 * # Safety
 * `h` must be a live handle; `solution_json` NUL-terminated; out pointers writable.
 */
enum WopStatus wop_objectives(const struct WopInstance *h,
                              const char *solution_json,
                              int64_t *o1,
                              int64_t *o2);

/**
 * Runs the sampling pipeline and writes the population document.
 * `config_json` may be null for defaults.
 *
 * # Safety
 * `h` must be a live handle; `config_json` null or NUL-terminated; `out` writable.
 */
enum WopStatus wop_run_qi4wop(const struct WopInstance *h,
                              uint32_t backend_kind,
                              const char *config_json,
                              char **out);

/**
 * Runs initialization plus local search and writes the result document.
 * `config_json` may be null for defaults.
 *
 * # Safety
 * `h` must be a live handle; `config_json` null or NUL-terminated; `out` writable.
 */
enum WopStatus wop_run_poc(const struct WopInstance *h,
                           uint32_t backend_kind,
                           const char *config_json,
                           char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WOP_FFI_H */
