#ifndef PBL_INSPECT_H
#define PBL_INSPECT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum PblEvent {
  PBL_EVENT_OPEN_GROUP_REVIEW_PR = 0,
  PBL_EVENT_GROUP_APPROVED = 1,
  PBL_EVENT_REQUEST_INSPECTION = 2,
  PBL_EVENT_STAFF_REVIEW_SUBMITTED = 3,
  PBL_EVENT_INSPECTION_APPROVED = 4,
  PBL_EVENT_INSPECTION_CHANGES_REQUESTED = 5,
  PBL_EVENT_REVISION_SUBMITTED = 6,
  PBL_EVENT_MERGE_TO_MASTER = 7,
} PblEvent;

typedef enum PblMergeDenial {
  PBL_MERGE_DENIAL_NONE = 0,
  PBL_MERGE_DENIAL_NO_COMPLETED_INSPECTION = 1,
  PBL_MERGE_DENIAL_INSPECTION_OPEN = 2,
  PBL_MERGE_DENIAL_REVISION_REQUESTED = 3,
  PBL_MERGE_DENIAL_ALREADY_MERGED = 4,
} PblMergeDenial;

typedef enum PblPhaseKind {
  PBL_PHASE_KIND_DRAFTING = 0,
  PBL_PHASE_KIND_GROUP_REVIEW = 1,
  PBL_PHASE_KIND_INSPECTION_REQUESTED = 2,
  PBL_PHASE_KIND_UNDER_INSPECTION = 3,
  PBL_PHASE_KIND_REVISION_REQUESTED = 4,
  PBL_PHASE_KIND_APPROVED = 5,
  PBL_PHASE_KIND_MERGED_TO_MASTER = 6,
} PblPhaseKind;

typedef enum PblStatus {
  PBL_STATUS_OK = 0,
  PBL_STATUS_NULL_ARGUMENT = 1,
  PBL_STATUS_INVALID_UTF8 = 2,
  PBL_STATUS_INVALID_ARGUMENT = 3,
  /**
   * The engine refused the request (illegal transition, parse error, ...).
   */
  PBL_STATUS_REJECTED = 4,
  PBL_STATUS_PANIC = 5,
} PblStatus;

/**
 * Handle on a project directory.
 */
typedef struct PblProject PblProject;

/**
 * A workflow phase; `round` is 1 or 2 for the three round-carrying kinds
 * and 0 otherwise.
 */
typedef struct PblPhase {
  enum PblPhaseKind kind;
  uint8_t round;
} PblPhase;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static string.
 */
const char *pbl_version(void);

/**
 * Message for the last failed call on this thread, or NULL. Valid until
 * the next call into the library on the same thread.
 */
const char *pbl_last_error(void);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed already.
 */
void pbl_string_free(char *s);

/**
 * Opens a handle on the project directory `dir` (which need not be
 * initialized yet).
 *
 * # Safety
 * `dir` must be NULL or a NUL-terminated string; `out` must be writable.
 */
enum PblStatus pbl_project_open(const char *dir, struct PblProject **out);

/**
 * # Safety
 * `project` must be NULL or a handle from [`pbl_project_open`], freed once.
 */
void pbl_project_free(struct PblProject *project);

/**
 * Runs one command-line verb against the project as `actor`. `argv` holds
 * the verb and its arguments, without program name or global flags
 * (except `--json`). Output text and the exit code the binary would use
 * are returned through `out_stdout`, `out_stderr` and `out_exit`; any of
 * them may be NULL.
 *
 * # Safety
 * `argv` must point to `argc` NUL-terminated strings.
 */
enum PblStatus pbl_project_execute(const struct PblProject *project,
                                   const char *actor,
                                   int argc,
                                   const char *const *argv,
                                   char **out_stdout,
                                   char **out_stderr,
                                   int *out_exit);

/**
 * Successor of `(phase, rounds_used)` under `event`. Rejected transitions
 * return `PBL_STATUS_REJECTED` with the error code in the last error
 * (`illegal-transition`, `rounds-exhausted` or `invalid-state`).
 *
 * # Safety
 * `out_phase` and `out_rounds` must be writable.
 */
enum PblStatus pbl_workflow_advance(struct PblPhase phase,
                                    uint8_t rounds_used,
                                    enum PblEvent event,
                                    struct PblPhase *out_phase,
                                    uint8_t *out_rounds);

/**
 * Whether an artifact in `phase` may be merged into master; the reason
 * for a refusal goes to `out_denial` (`PBL_MERGE_DENIAL_NONE` when allowed).
 *
 * # Safety
 * `out_allowed` and `out_denial` must be writable.
 */
enum PblStatus pbl_can_merge_to_master(struct PblPhase phase,
                                       bool *out_allowed,
                                       enum PblMergeDenial *out_denial);

/**
 * Unified diff of one file. NULL `old_text` or `new_text` means the file
 * does not exist on that side.
 *
 * # Safety
 * Strings must be NUL-terminated; `out` must be writable.
 */
enum PblStatus pbl_diff_unified(const char *path,
                                const char *old_text,
                                const char *new_text,
                                char **out);

/**
 * Parses a PlantUML class diagram into JSON `{"model", "warnings",
 * "index"}`. On a syntax error the status is `PBL_STATUS_REJECTED` and
 * `out_json` holds `{"line", "expected"}`.
 *
 * # Safety
 * `text` must be NUL-terminated; `out_json` must be writable.
 */
enum PblStatus pbl_parse_plantuml_json(const char *text, char **out_json);

/**
 * Checks `len` bytes of `path` against the format `kind` requires
 * (`requirements-spec`, `class-diagram`, ...). The JSON report is written
 * whether or not the file is accepted; `out_accepted` tells which.
 *
 * # Safety
 * `bytes` must point to `len` readable bytes (it may be NULL when `len`
 * is 0); output pointers must be writable.
 */
enum PblStatus pbl_validate_artifact_json(const char *path,
                                          const char *kind,
                                          const uint8_t *bytes,
                                          size_t len,
                                          bool *out_accepted,
                                          char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PBL_INSPECT_H */
