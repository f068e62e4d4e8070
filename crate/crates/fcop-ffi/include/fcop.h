/* C interface for the fcop focal-length estimation library. */

#ifndef FCOP_H
#define FCOP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of a C API call.
 */
typedef enum FcopStatus {
  FCOP_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  FCOP_STATUS_NULL_POINTER = 1,
  /**
   * An argument was out of range or otherwise invalid.
   */
  FCOP_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The correspondences are degenerate (equal depths, collinear points,
   * or a numerically hopeless system).
   */
  FCOP_STATUS_DEGENERATE = 3,
  /**
   * Fewer data points than the operation requires.
   */
  FCOP_STATUS_INSUFFICIENT_DATA = 4,
  /**
   * Every sampled triplet was rejected.
   */
  FCOP_STATUS_NO_VALID_TRIPLET = 5,
  /**
   * Consensus search ended without a winning hypothesis.
   */
  FCOP_STATUS_NO_CONSENSUS = 6,
} FcopStatus;

/**
 * Opaque robust estimation result; free with [`fcop_focal_estimate_free`].
 */
typedef struct FcopFocalEstimate FcopFocalEstimate;

/**
 * One (centered image point, depth, canonical point) correspondence.
 */
typedef struct FcopCorrespondence {
  /**
   * Centered image x-coordinate in pixels.
   */
  double u;
  /**
   * Centered image y-coordinate in pixels.
   */
  double v;
  /**
   * Depth in meters, strictly positive.
   */
  double depth;
  /**
   * Canonical object coordinates.
   */
  double p[3];
} FcopCorrespondence;

/**
 * Focal length and object scale solved from one triplet.
 */
typedef struct FcopTripletSolution {
  /**
   * Focal length in pixels.
   */
  double focal;
  /**
   * Object scale.
   */
  double scale;
  /**
   * Least-squares residual of the triplet system.
   */
  double residual;
} FcopTripletSolution;

/**
 * Sampling and consensus parameters for the robust estimators.
 */
typedef struct FcopRobustConfig {
  /**
   * Triplet samples drawn per object.
   */
  size_t num_samples;
  /**
   * Half-width of each focal interval, in pixels.
   */
  double noise_bound_px;
  /**
   * Master seed for triplet sampling.
   */
  uint64_t seed;
} FcopRobustConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string; do not free.
 */
const char *fcop_version(void);

/**
 * Human-readable description of a status code; static, do not free.
 */
const char *fcop_status_message(enum FcopStatus status);

/**
 * Solve one triplet of correspondences for focal length and object scale.
 *
 * # Safety
 *
 * `corrs` must point to an array of exactly 3 correspondences and `out`
 * must point to writable memory for one solution.
 */
enum FcopStatus fcop_solve_triplet(const struct FcopCorrespondence *corrs,
                                   struct FcopTripletSolution *out);

/**
 * Find the point stabbing the most intervals `[focal − eps, focal + eps]`.
 *
 * # Safety
 *
 * `focals` must point to `len` readable doubles; `focal_out` and
 * `support_out` must be writable.
 */
enum FcopStatus fcop_interval_stab(const double *focals,
                                   size_t len,
                                   double eps,
                                   double *focal_out,
                                   size_t *support_out);

/**
 * Robust focal estimate from one object's correspondences.
 *
 * On success `*out` receives a handle owned by the caller; release it with
 * [`fcop_focal_estimate_free`].
 *
 * # Safety
 *
 * `corrs` must point to `len` readable correspondences, `cfg` to a valid
 * configuration, and `out` to a writable pointer slot.
 */
enum FcopStatus fcop_estimate_object_focal(const struct FcopCorrespondence *corrs,
                                           size_t len,
                                           const struct FcopRobustConfig *cfg,
                                           struct FcopFocalEstimate **out);

/**
 * One consistent focal estimate for a frame with several objects.
 *
 * `corrs` holds all objects back to back; `object_lens[i]` is the number of
 * correspondences of object `i`, and their sum must equal the total length
 * of `corrs`.
 *
 * # Safety
 *
 * `corrs` must point to `sum(object_lens)` readable correspondences,
 * `object_lens` to `num_objects` readable lengths, `cfg` to a valid
 * configuration, and `out` to a writable pointer slot.
 */
enum FcopStatus fcop_estimate_frame_focal(const struct FcopCorrespondence *corrs,
                                          const size_t *object_lens,
                                          size_t num_objects,
                                          const struct FcopRobustConfig *cfg,
                                          struct FcopFocalEstimate **out);

/**
 * Hypothesize-and-verify focal estimation with a metric inlier threshold.
 *
 * # Safety
 *
 * `corrs` must point to `len` readable correspondences and `out` to a
 * writable pointer slot.
 */
enum FcopStatus fcop_ransac_focal(const struct FcopCorrespondence *corrs,
                                  size_t len,
                                  double threshold_m,
                                  size_t iters,
                                  uint64_t seed,
                                  struct FcopFocalEstimate **out);

/**
 * Estimated focal length in pixels, or NaN for a null handle.
 *
 * # Safety
 *
 * `est` must be a live handle returned by an estimation call, or null.
 */
double fcop_focal_estimate_focal(const struct FcopFocalEstimate *est);

/**
 * Consensus support of the estimate, or 0 for a null handle.
 *
 * # Safety
 *
 * `est` must be a live handle returned by an estimation call, or null.
 */
size_t fcop_focal_estimate_support(const struct FcopFocalEstimate *est);

/**
 * Number of rejected (degenerate) triplet samples, or 0 for a null handle.
 *
 * # Safety
 *
 * `est` must be a live handle returned by an estimation call, or null.
 */
size_t fcop_focal_estimate_num_rejected(const struct FcopFocalEstimate *est);

/**
 * Number of stored candidate solutions, or 0 for a null handle.
 *
 * # Safety
 *
 * `est` must be a live handle returned by an estimation call, or null.
 */
size_t fcop_focal_estimate_num_candidates(const struct FcopFocalEstimate *est);

/**
 * Copy candidate `index` into `out`.
 *
 * # Safety
 *
 * `est` must be a live handle or null; `out` must be writable.
 */
enum FcopStatus fcop_focal_estimate_candidate(const struct FcopFocalEstimate *est,
                                              size_t index,
                                              struct FcopTripletSolution *out);

/**
 * Release a handle returned by an estimation call. Null is a no-op.
 *
 * # Safety
 *
 * `est` must be a handle returned by this library that has not been freed,
 * or null.
 */
void fcop_focal_estimate_free(struct FcopFocalEstimate *est);

/**
 * Least-squares similarity transform from `src` to `dst` point sets.
 *
 * Points are packed `x0,y0,z0,x1,y1,z1,…`; the rotation is written row-major.
 *
 * # Safety
 *
 * `src` and `dst` must each point to `3 * num_points` readable doubles;
 * `scale_out`, `rotation_out` (9 doubles) and `translation_out` (3 doubles)
 * must be writable.
 */
enum FcopStatus fcop_umeyama(const double *src,
                             const double *dst,
                             size_t num_points,
                             double *scale_out,
                             double *rotation_out,
                             double *translation_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FCOP_H */
