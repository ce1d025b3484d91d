#ifndef IUS_H
#define IUS_H

/* Generated by cbindgen from the ius-ffi crate. Do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Outcome of a call. Anything but `Ok` leaves a message for
 `ius_last_error_message`.
 */
typedef enum IusStatus {
  IUS_STATUS_OK = 0,
  /*
   A required pointer argument was null.
   */
  IUS_STATUS_NULL_ARGUMENT = 1,
  /*
   A string argument was not valid UTF-8.
   */
  IUS_STATUS_INVALID_UTF8 = 2,
  /*
   A file could not be read or written.
   */
  IUS_STATUS_IO = 3,
  /*
   An input file or argument was malformed or inconsistent.
   */
  IUS_STATUS_DATA = 4,
  /*
   The computation produced a non-finite or out-of-range value.
   */
  IUS_STATUS_NUMERIC = 5,
} IusStatus;

/*
 A loaded baseline profile. Create with `ius_baseline_load`, release with
 `ius_baseline_free`.
 */
typedef struct IusBaseline IusBaseline;

/*
 A loaded classifier. Create with `ius_model_load`, release with
 `ius_model_free`.
 */
typedef struct IusModel IusModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Loads a model file written by the library. On success `*out` owns the
 handle.

 # Safety
 `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum IusStatus ius_model_load(const char *path, struct IusModel **out);

/*
 Releases a model handle. Null is a no-op.

 # Safety
 `model` must be null or a handle from `ius_model_load` not yet freed.
 */
void ius_model_free(struct IusModel *model);

/*
 Loads a baseline file written by the library. On success `*out` owns the
 handle.

 # Safety
 `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum IusStatus ius_baseline_load(const char *path, struct IusBaseline **out);

/*
 Releases a baseline handle. Null is a no-op.

 # Safety
 `baseline` must be null or a handle from `ius_baseline_load` not yet
 freed.
 */
void ius_baseline_free(struct IusBaseline *baseline);

/*
 Scores one PNG file against a baseline. `class_name` selects the group of
 a per-class baseline and must be null for a global one. The score lands
 in [-1, 1].

 # Safety
 `model` and `baseline` must be live handles, `image_path` a
 NUL-terminated string, `class_name` null or NUL-terminated, and
 `out_score` a valid pointer.
 */
enum IusStatus ius_score_image(const struct IusModel *model,
                               const struct IusBaseline *baseline,
                               const char *image_path,
                               const char *class_name,
                               double *out_score);

/*
 Computes the four contribution components of one PNG file, in the model's
 map order. Each component lands in [-1, 1].

 # Safety
 `model` must be a live handle, `image_path` a NUL-terminated string, and
 `out_components` must point to four doubles.
 */
enum IusStatus ius_profile_image(const struct IusModel *model,
                                 const char *image_path,
                                 double *out_components);

/*
 Buckets a score into a level index: 0 very low through 4 very high. Fails
 with a numeric status when the score is outside [-1, 1].

 # Safety
 `out_level` must be a valid pointer.
 */
enum IusStatus ius_utility_level(double score, int *out_level);

/*
 Copies this thread's last error message into `buf` as a NUL-terminated
 string, truncating to `len - 1` bytes when needed, and returns the full
 message length in bytes. Returns 0 when the previous call succeeded. A
 null `buf` or zero `len` only queries the length.

 # Safety
 `buf` must be null or point to `len` writable bytes.
 */
size_t ius_last_error_message(char *buf, size_t len);

/*
 Library version as a static NUL-terminated string. Never null; do not
 free.
 */
const char *ius_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IUS_H */
