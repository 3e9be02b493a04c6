/* C interface to the wavedbn sub-band DBN ensemble classifier. */

#ifndef WAVEDBN_H
#define WAVEDBN_H

/* Generated by cbindgen from crates/ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Call outcome. Anything other than `Ok` leaves a message in
 * `wavedbn_last_error`.
 */
typedef enum WavedbnStatus {
  WAVEDBN_STATUS_OK = 0,
  /**
   * A pointer was null or an argument was out of range.
   */
  WAVEDBN_STATUS_INVALID_ARGUMENT = 1,
  /**
   * The file could not be read or written.
   */
  WAVEDBN_STATUS_IO_ERROR = 2,
  /**
   * The file exists but is not a valid model.
   */
  WAVEDBN_STATUS_PARSE_ERROR = 3,
  /**
   * Buffer or image dimensions do not match the model.
   */
  WAVEDBN_STATUS_DIMENSION_MISMATCH = 4,
  /**
   * Unexpected internal failure.
   */
  WAVEDBN_STATUS_INTERNAL_ERROR = 5,
} WavedbnStatus;

/**
 * Opaque trained model.
 */
typedef struct WavedbnModel WavedbnModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *wavedbn_last_error(void);

/**
 * Crate version as a static NUL-terminated string.
 */
const char *wavedbn_version(void);

/**
 * Loads a model file produced by `wavedbn train`.
 *
 * On success writes a handle into `out_model`; the caller owns it and
 * must release it with [`wavedbn_model_free`].
 *
 * # Safety
 * `path` must point to a NUL-terminated string and `out_model` to a
 * writable pointer slot.
 */
enum WavedbnStatus wavedbn_model_open(const char *path, struct WavedbnModel **out_model);

/**
 * Releases a handle from [`wavedbn_model_open`]. Null is a no-op.
 *
 * # Safety
 * `model` must be a pointer previously returned by
 * [`wavedbn_model_open`] that has not been freed.
 */
void wavedbn_model_free(struct WavedbnModel *model);

/**
 * Number of classes, or 0 when `model` is null.
 *
 * # Safety
 * `model` must be a live handle or null.
 */
uint32_t wavedbn_model_n_classes(const struct WavedbnModel *model);

/**
 * Expected raw input dimensions (before the model's own downsampling).
 *
 * # Safety
 * `model` must be a live handle; `out_width`/`out_height` writable.
 */
enum WavedbnStatus wavedbn_model_input_size(const struct WavedbnModel *model,
                                            uint32_t *out_width,
                                            uint32_t *out_height);

/**
 * Copies the sixteen voting weights into `out_weights`.
 *
 * # Safety
 * `out_weights` must point to at least 16 writable doubles.
 */
enum WavedbnStatus wavedbn_model_weights(const struct WavedbnModel *model, double *out_weights);

/**
 * Classifies one image. Writes the winning class into `out_class`; the
 * optional `out_tally` (length `n_classes`) and `out_per_dbn` (length
 * 16) receive the vote mass per class and each DBN's prediction when
 * non-null.
 *
 * # Safety
 * `model` must be a live handle, `pixels` must point to `pixel_count`
 * readable doubles, and the output pointers (when non-null) must be
 * writable with the documented lengths.
 */
enum WavedbnStatus wavedbn_model_predict(const struct WavedbnModel *model,
                                         const double *pixels,
                                         size_t pixel_count,
                                         uint32_t width,
                                         uint32_t height,
                                         uint32_t *out_class,
                                         double *out_tally,
                                         uint32_t *out_per_dbn);

/**
 * Full 2-level wavelet decomposition of a raw image.
 *
 * Writes the sixteen quarter-resolution sub-bands, each of length
 * `(width/4) * (height/4)`, concatenated in the canonical order, into
 * `out_subbands` (total length `pixel_count`). `filter` selects "haar"
 * or "db4"; null means "haar".
 *
 * # Safety
 * `pixels` must point to `pixel_count` readable doubles, `out_subbands`
 * to `pixel_count` writable doubles, and `filter` (when non-null) to a
 * NUL-terminated string.
 */
enum WavedbnStatus wavedbn_decompose(const double *pixels,
                                     size_t pixel_count,
                                     uint32_t width,
                                     uint32_t height,
                                     const char *filter,
                                     double *out_subbands);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WAVEDBN_H */
