#ifndef MEQUI_H
#define MEQUI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Status codes. Zero is success.
 */
typedef enum MequiStatus {
  MEQUI_STATUS_OK = 0,
  MEQUI_STATUS_CONTRACT = 1,
  MEQUI_STATUS_HORIZON = 2,
  MEQUI_STATUS_RECOGNIZABILITY = 3,
  MEQUI_STATUS_ILLEGAL_WORD = 4,
  MEQUI_STATUS_INVALID_SYSTEM = 5,
  MEQUI_STATUS_CONFIG = 6,
  MEQUI_STATUS_UNSUPPORTED = 7,
  MEQUI_STATUS_IO = 8,
  MEQUI_STATUS_NULL_POINTER = 9,
  MEQUI_STATUS_INVALID_UTF8 = 10,
  MEQUI_STATUS_BUFFER_TOO_SMALL = 11,
  MEQUI_STATUS_PANIC = 12,
} MequiStatus;

/*
 A point of some system.
 */
typedef struct MequiPoint MequiPoint;

/*
 A dynamical system.
 */
typedef struct MequiSystem MequiSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failure on this thread, or null. Valid until the next failing call.
 */
const char *mequi_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *mequi_version(void);

/*
 Builds a system from a TOML description (the body of a `[system]` table).

 # Safety
 `config` must be a NUL-terminated string; `out` must be writable.
 */
enum MequiStatus mequi_system_new(const char *config, struct MequiSystem **out_system);

/*
 # Safety
 `system` must come from [`mequi_system_new`] and not be used afterwards. Null is ignored.
 */
void mequi_system_free(struct MequiSystem *system);

/*
 Builds a point from a TOML point seed (for example `kind = "coordinate"`, `x = 0.25`).
 Subshift windows extend `reach` cells left of the origin and `reach + horizon`
 to the right; addresses to depth `K` need `reach` of at least `2^(K+1)` for
 binary substitutions.

 # Safety
 Pointers must be valid; `seed` NUL-terminated.
 */
enum MequiStatus mequi_point_new(const struct MequiSystem *system,
                                 const char *seed,
                                 size_t horizon,
                                 size_t reach,
                                 struct MequiPoint **out_point);

/*
 # Safety
 `point` must come from [`mequi_point_new`] and not be used afterwards. Null is ignored.
 */
void mequi_point_free(struct MequiPoint *point);

/*
 Writes a NUL-terminated rendering of `point` into `buf`. `needed` receives the
 required size including the terminator; `MEQUI_STATUS_BUFFER_TOO_SMALL` if `len` is short.

 # Safety
 `buf` must hold `len` bytes (it may be null when `len` is 0).
 */
enum MequiStatus mequi_point_render(const struct MequiPoint *point,
                                    char *buf,
                                    size_t len,
                                    size_t *needed);

/*
 Distance between two points of `system`.

 # Safety
 All pointers must be valid.
 */
enum MequiStatus mequi_metric(const struct MequiSystem *system,
                              const struct MequiPoint *p,
                              const struct MequiPoint *q,
                              double *out_value);

/*
 Minimum (`use_max == 0`) or maximum pairwise distance of `m` points.

 # Safety
 `points` must hold `m` valid point pointers.
 */
enum MequiStatus mequi_dm(const struct MequiSystem *system,
                          const struct MequiPoint *const *points,
                          size_t m,
                          int32_t use_max,
                          double *out_value);

/*
 Windowed estimate of the Besicovitch m-distance at `horizon`.
 `out_converged` may be null.

 # Safety
 `points` must hold `m` valid point pointers.
 */
enum MequiStatus mequi_besicovitch(const struct MequiSystem *system,
                                   const struct MequiPoint *const *points,
                                   size_t m,
                                   size_t horizon,
                                   double *out_value,
                                   int32_t *out_converged);

/*
 Writes the first `depth` odometer digits of `point` (least significant first) into `digits`.

 # Safety
 `digits` must hold `depth` bytes.
 */
enum MequiStatus mequi_address(const struct MequiSystem *system,
                               const struct MequiPoint *point,
                               size_t depth,
                               uint8_t *digits);

/*
 Most common fibre cardinality over `samples` random depth-`depth` addresses,
 with the fraction of samples attaining it. `out_fraction` may be null.

 # Safety
 Pointers must be valid.
 */
enum MequiStatus mequi_multiplicity(const struct MequiSystem *system,
                                    size_t depth,
                                    size_t word_radius,
                                    size_t samples,
                                    uint64_t seed,
                                    size_t *out_mode,
                                    double *out_fraction);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MEQUI_H */
