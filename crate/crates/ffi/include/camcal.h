#ifndef CAMCAL_H
#define CAMCAL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CamcalStatus {
  CAMCAL_STATUS_OK = 0,
  CAMCAL_STATUS_NULL_POINTER = 1,
  CAMCAL_STATUS_INVALID_ARGUMENT = 2,
  CAMCAL_STATUS_DIMS_MISMATCH = 3,
  CAMCAL_STATUS_RECOVERY_FAILED = 4,
  CAMCAL_STATUS_DEGENERATE = 5,
  CAMCAL_STATUS_IO = 6,
  CAMCAL_STATUS_FORMAT = 7,
  CAMCAL_STATUS_PANIC = 8,
} CamcalStatus;

typedef enum CamcalVariant {
  CAMCAL_VARIANT_GRAYSCALE = 0,
  CAMCAL_VARIANT_DUPLICATE_THETA = 1,
  CAMCAL_VARIANT_CONSTANT = 2,
} CamcalVariant;

typedef enum CamcalAxis {
  CAMCAL_AXIS_X = 0,
  CAMCAL_AXIS_Y = 1,
} CamcalAxis;

// Opaque camera image.
typedef struct CamcalCameraImage CamcalCameraImage;

typedef struct CamcalRansacConfig {
  size_t iterations;
  double inlier_threshold;
  double min_inlier_fraction;
  uint64_t seed;
  bool refine;
  // Fit on every pixel instead of a `grid` × `grid` sample.
  bool full_sampling;
  size_t grid;
} CamcalRansacConfig;

// Pinhole intrinsics in pixels, principal point from the center of the
// top-left pixel.
typedef struct CamcalIntrinsics {
  double fx;
  double fy;
  double cx;
  double cy;
} CamcalIntrinsics;

typedef struct CamcalRecoveryStats {
  size_t inliers_x;
  size_t samples_x;
  size_t inliers_y;
  size_t samples_y;
  size_t skipped_pixels;
} CamcalRecoveryStats;

typedef struct CamcalDepthMetrics {
  double abs_rel;
  double delta1;
  double delta2;
  double delta3;
  double si_log;
  size_t pixels;
} CamcalDepthMetrics;

// `x ↦ scale · (R x + t)`, `rotation` row-major.
typedef struct CamcalSimilarity {
  double scale;
  double rotation[9];
  double translation[3];
  double rms_residual;
} CamcalSimilarity;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. The pointer stays
// valid until the next camcal call on the same thread.
const char *camcal_last_error(void);

// Library version as a static NUL-terminated string.
const char *camcal_version(void);

struct CamcalRansacConfig camcal_ransac_config_default(void);

// Encodes intrinsics as a camera image. `gray` (row-major, values in
// `[0, 1]`, `width * height` entries) is required for the grayscale variant
// and ignored otherwise; `constant` is the fill of the constant variant.
//
// # Safety
// Pointers must be valid for the sizes described; `out` must be writable.
enum CamcalStatus camcal_encode(const struct CamcalIntrinsics *k,
                                size_t width,
                                size_t height,
                                const double *gray,
                                enum CamcalVariant variant,
                                double constant,
                                struct CamcalCameraImage **out);

// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum CamcalStatus camcal_image_read(const char *path, struct CamcalCameraImage **out);

// # Safety
// `image` must be a live handle and `path` a NUL-terminated string.
enum CamcalStatus camcal_image_write(const struct CamcalCameraImage *image, const char *path);

// Width of a camera image, 0 for NULL.
//
// # Safety
// `image` must be NULL or a live handle.
size_t camcal_image_width(const struct CamcalCameraImage *image);

// Height of a camera image, 0 for NULL.
//
// # Safety
// `image` must be NULL or a live handle.
size_t camcal_image_height(const struct CamcalCameraImage *image);

// Copies channel 0 (azimuth), 1 (elevation) or 2 (third channel) into
// `out`, which must hold exactly `width * height` values.
//
// # Safety
// `image` must be a live handle and `out` valid for `len` writes.
enum CamcalStatus camcal_image_copy_channel(const struct CamcalCameraImage *image,
                                            size_t channel,
                                            double *out,
                                            size_t len);

// Releases a handle; NULL is ignored.
//
// # Safety
// `image` must be NULL or a handle not yet freed.
void camcal_image_free(struct CamcalCameraImage *image);

// Per-pixel mean of `count` camera images of equal size.
//
// # Safety
// `images` must point to `count` live handles; `out` must be writable.
enum CamcalStatus camcal_ensemble(const struct CamcalCameraImage *const *images,
                                  size_t count,
                                  struct CamcalCameraImage **out);

// Recovers intrinsics from a camera image. `config` may be NULL for the
// defaults and `stats` may be NULL.
//
// # Safety
// `image` must be a live handle; `out` writable; `config`/`stats` NULL or valid.
enum CamcalStatus camcal_recover(const struct CamcalCameraImage *image,
                                 const struct CamcalRansacConfig *config,
                                 struct CamcalIntrinsics *out,
                                 struct CamcalRecoveryStats *stats);

// Relative focal error `e_f` and principal-point error `e_b`.
//
// # Safety
// All pointers must be valid.
enum CamcalStatus camcal_calib_error(const struct CamcalIntrinsics *pred,
                                     const struct CamcalIntrinsics *gt,
                                     size_t width,
                                     size_t height,
                                     double *e_f,
                                     double *e_b);

// Field of view along one axis, in degrees.
//
// # Safety
// `k` and `out` must be valid.
enum CamcalStatus camcal_fov_degrees(const struct CamcalIntrinsics *k,
                                     size_t width,
                                     size_t height,
                                     enum CamcalAxis axis,
                                     double *out);

// Depth metrics over pixels where both maps hold finite positive depth.
//
// # Safety
// `pred` and `gt` must hold `width * height` values; `out` must be writable.
enum CamcalStatus camcal_depth_metrics(const double *pred,
                                       const double *gt,
                                       size_t width,
                                       size_t height,
                                       struct CamcalDepthMetrics *out);

// Similarity aligning `source` onto `target`; both are `count` packed
// `x, y, z` triples.
//
// # Safety
// `source` and `target` must hold `3 * count` values; `out` must be writable.
enum CamcalStatus camcal_procrustes(const double *source,
                                    const double *target,
                                    size_t count,
                                    struct CamcalSimilarity *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CAMCAL_H */
