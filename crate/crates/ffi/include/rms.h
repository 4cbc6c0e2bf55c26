#ifndef RMS_H
#define RMS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RmsStatus {
  RMS_STATUS_OK = 0,
  RMS_STATUS_NULL_POINTER = 1,
  RMS_STATUS_INVALID_ARGUMENT = 2,
  RMS_STATUS_INCONSISTENT = 3,
  RMS_STATUS_PANIC = 4,
} RmsStatus;

/**
 * A stratified real moduli space.
 */
typedef struct RmsComplex RmsComplex;

/**
 * Its orientation double cover.
 */
typedef struct RmsCover RmsCover;

/**
 * Message for the last failing call on this thread; valid until the
 * next failing call. Never null.
 */
const char *rms_last_error(void);

/**
 * Builds the stratification for `k` conjugate pairs and `l` real labels.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum RmsStatus rms_complex_new(uint32_t k, uint32_t l, struct RmsComplex **out);

/**
 * # Safety
 * `c` must be null or a handle from `rms_complex_new` not yet freed.
 */
void rms_complex_free(struct RmsComplex *c);

/**
 * Number of strata of dimension `dim`; pass `-1` for all strata.
 *
 * # Safety
 * `c` must be a live handle and `out` writable.
 */
enum RmsStatus rms_complex_strata_count(const struct RmsComplex *c, int32_t dim, uintptr_t *out);

/**
 * # Safety
 * `c` must be a live handle and `out` writable.
 */
enum RmsStatus rms_complex_euler_char(const struct RmsComplex *c, int64_t *out);

/**
 * Number of walls on the first Stiefel-Whitney cycle.
 *
 * # Safety
 * `c` must be a live handle and `out` writable.
 */
enum RmsStatus rms_complex_w1_walls(const struct RmsComplex *c, uintptr_t *out);

/**
 * The poset as a JSON string, released with `rms_string_free`.
 *
 * # Safety
 * `c` must be a live handle and `out` writable.
 */
enum RmsStatus rms_complex_to_json(const struct RmsComplex *c, char **out);

/**
 * # Safety
 * `s` must be null or a string returned by this library not yet freed.
 */
void rms_string_free(char *s);

/**
 * Assembles the orientation double cover.
 *
 * # Safety
 * `c` must be a live handle and `out` writable.
 */
enum RmsStatus rms_cover_new(const struct RmsComplex *c, struct RmsCover **out);

/**
 * # Safety
 * `c` must be null or a handle from `rms_cover_new` not yet freed.
 */
void rms_cover_free(struct RmsCover *c);

/**
 * # Safety
 * `c` must be a live handle and `out` writable.
 */
enum RmsStatus rms_cover_components(const struct RmsCover *c, uintptr_t *out);

/**
 * # Safety
 * `c` must be a live handle and `out` writable.
 */
enum RmsStatus rms_cover_euler_char(const struct RmsCover *c, int64_t *out);

#endif  /* RMS_H */
