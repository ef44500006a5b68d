#ifndef GNNSEG_H
#define GNNSEG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Success.
 */
#define GNNSEG_OK 0

/**
 * A required pointer was null, or the library failed internally.
 */
#define GNNSEG_ERR_INTERNAL 1

/**
 * Invalid argument, shape mismatch or unparsable input.
 */
#define GNNSEG_ERR_INVALID 2

/**
 * File system or image codec failure.
 */
#define GNNSEG_ERR_IO 3

/**
 * A computation produced NaN or infinity.
 */
#define GNNSEG_ERR_NON_FINITE 4

/**
 * A per-pixel tissue label map (0 background, 1 CSF, 2 GM, 3 WM).
 */
typedef struct GnnsegMask GnnsegMask;

/**
 * A trained or freshly initialized segmentation model.
 */
typedef struct GnnsegModel GnnsegModel;

/**
 * A multi-modality image slice.
 */
typedef struct GnnsegSlice GnnsegSlice;

/**
 * Trainable parameter counts of a model.
 */
typedef struct GnnsegParameterCount {
  size_t structural;
  size_t classifier;
  size_t total;
} GnnsegParameterCount;

/**
 * Scores of one tissue class. A metric that is not applicable to the
 * given masks is NaN.
 */
typedef struct GnnsegClassMetrics {
  uint8_t class_id;
  double dice;
  double tp;
  /**
   * Average perpendicular distance in pixels.
   */
  double apd;
} GnnsegClassMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *gnnseg_version(void);

/**
 * Message describing the last failed call on this thread, or an empty
 * string. The pointer stays valid until the next call on this thread.
 */
const char *gnnseg_last_error(void);

/**
 * Generate a ring phantom of `size`×`size` pixels with two modalities.
 * `out_mask` may be null when the reference labels are not needed.
 *
 * # Safety
 * `out_slice` must be valid for writes; `out_mask` must be null or valid.
 */
int32_t gnnseg_phantom(size_t size,
                       uint64_t seed,
                       double noise_sigma,
                       struct GnnsegSlice **out_slice,
                       struct GnnsegMask **out_mask);

/**
 * Build a slice from `modalities` planes of `width`×`height` row-major
 * intensities stored one plane after another in `data`.
 *
 * # Safety
 * `data` must point to `modalities * width * height` doubles.
 */
int32_t gnnseg_slice_from_planes(size_t width,
                                 size_t height,
                                 size_t modalities,
                                 const double *data,
                                 struct GnnsegSlice **out);

/**
 * Read a slice from one grayscale image file per modality.
 *
 * # Safety
 * `paths` must point to `count` NUL-terminated strings.
 */
int32_t gnnseg_slice_read(const char *const *paths, size_t count, struct GnnsegSlice **out);

/**
 * Width in pixels, or 0 for a null handle.
 *
 * # Safety
 * `slice` must be null or a live slice handle.
 */
size_t gnnseg_slice_width(const struct GnnsegSlice *slice);

/**
 * Height in pixels, or 0 for a null handle.
 *
 * # Safety
 * `slice` must be null or a live slice handle.
 */
size_t gnnseg_slice_height(const struct GnnsegSlice *slice);

/**
 * Number of modalities, or 0 for a null handle.
 *
 * # Safety
 * `slice` must be null or a live slice handle.
 */
size_t gnnseg_slice_modality_count(const struct GnnsegSlice *slice);

/**
 * # Safety
 * `slice` must be null or a handle not yet freed.
 */
void gnnseg_slice_free(struct GnnsegSlice *slice);

/**
 * Build a mask from `width * height` row-major labels in 0..=3.
 *
 * # Safety
 * `labels` must point to `width * height` bytes.
 */
int32_t gnnseg_mask_new(size_t width,
                        size_t height,
                        const uint8_t *labels,
                        struct GnnsegMask **out);

/**
 * Read a label mask image.
 *
 * # Safety
 * `file` must be a NUL-terminated string and `out` valid for writes.
 */
int32_t gnnseg_mask_read(const char *file, struct GnnsegMask **out);

/**
 * Write a label mask as an 8-bit PNG.
 *
 * # Safety
 * `mask` must be a live handle and `file` a NUL-terminated string.
 */
int32_t gnnseg_mask_write(const struct GnnsegMask *mask, const char *file);

/**
 * Width in pixels, or 0 for a null handle.
 *
 * # Safety
 * `mask` must be null or a live mask handle.
 */
size_t gnnseg_mask_width(const struct GnnsegMask *mask);

/**
 * Height in pixels, or 0 for a null handle.
 *
 * # Safety
 * `mask` must be null or a live mask handle.
 */
size_t gnnseg_mask_height(const struct GnnsegMask *mask);

/**
 * Copy the row-major labels into `buffer`, whose length `len` must equal
 * width × height.
 *
 * # Safety
 * `buffer` must be valid for `len` byte writes.
 */
int32_t gnnseg_mask_copy_labels(const struct GnnsegMask *mask, uint8_t *buffer, size_t len);

/**
 * # Safety
 * `mask` must be null or a handle not yet freed.
 */
void gnnseg_mask_free(struct GnnsegMask *mask);

/**
 * Initialize a model. `config_json` is a JSON model configuration whose
 * missing fields take their defaults; null selects the default model.
 *
 * # Safety
 * `config_json` must be null or NUL-terminated; `out` valid for writes.
 */
int32_t gnnseg_model_new(const char *config_json, uint64_t seed, struct GnnsegModel **out);

/**
 * Load a checkpoint written by the command-line tool or `gnnseg_model_save`.
 *
 * # Safety
 * `file` must be NUL-terminated and `out` valid for writes.
 */
int32_t gnnseg_model_load(const char *file, struct GnnsegModel **out);

/**
 * Write the model to a checkpoint file.
 *
 * # Safety
 * `model` must be a live handle and `file` NUL-terminated.
 */
int32_t gnnseg_model_save(const struct GnnsegModel *model, const char *file);

/**
 * Trainable parameter counts.
 *
 * # Safety
 * `model` must be a live handle and `out` valid for writes.
 */
int32_t gnnseg_model_parameter_count(const struct GnnsegModel *model,
                                     struct GnnsegParameterCount *out);

/**
 * Train in place on `count` labeled slices for `epochs` epochs.
 * `out_final_loss` may be null; otherwise it receives the mean loss of
 * the last epoch.
 *
 * # Safety
 * `slices` and `masks` must each point to `count` live handles.
 */
int32_t gnnseg_model_train(struct GnnsegModel *model,
                           const struct GnnsegSlice *const *slices,
                           const struct GnnsegMask *const *masks,
                           size_t count,
                           size_t epochs,
                           uint64_t seed,
                           double *out_final_loss);

/**
 * Segment a slice.
 *
 * # Safety
 * `model` and `slice` must be live handles; `out` valid for writes.
 */
int32_t gnnseg_infer(const struct GnnsegModel *model,
                     const struct GnnsegSlice *slice,
                     struct GnnsegMask **out);

/**
 * Score `pred` against `truth` for CSF, GM and WM, in that order.
 * `out` must hold at least three entries.
 *
 * # Safety
 * `pred` and `truth` must be live handles; `out` valid for `out_len` writes.
 */
int32_t gnnseg_evaluate(const struct GnnsegMask *pred,
                        const struct GnnsegMask *truth,
                        struct GnnsegClassMetrics *out,
                        size_t out_len);

/**
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void gnnseg_model_free(struct GnnsegModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GNNSEG_H */
