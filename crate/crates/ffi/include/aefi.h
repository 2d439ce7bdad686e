#ifndef AEFI_H
#define AEFI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AefiStatus {
  AEFI_STATUS_OK = 0,
  AEFI_STATUS_NULL_POINTER = 1,
  AEFI_STATUS_INVALID_UTF8 = 2,
  /**
   * Malformed input: bad JSON, unknown field, bad level, missing value.
   */
  AEFI_STATUS_INVALID = 3,
  AEFI_STATUS_UNSUPPORTED_VERSION = 4,
  AEFI_STATUS_DIMENSION_MISMATCH = 5,
  AEFI_STATUS_IO = 6,
  /**
   * Metric undefined for the input, e.g. AUC with one class present.
   */
  AEFI_STATUS_UNDEFINED = 7,
  AEFI_STATUS_INTERNAL = 8,
} AefiStatus;

/**
 * Opaque handle to a loaded model bundle.
 */
typedef struct AefiBundle AefiBundle;

/**
 * Confusion-matrix metrics. Undefined values (zero denominators) are NaN.
 */
typedef struct AefiMetrics {
  double accuracy;
  double precision;
  double recall;
  double specificity;
  double f1;
  double g_mean;
} AefiMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null. The pointer
 * stays valid until the next `aefi_*` call on the same thread.
 */
const char *aefi_last_error_message(void);

/**
 * Loads a bundle file. On success `*out` owns a handle to release with
 * [`aefi_bundle_free`].
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum AefiStatus aefi_bundle_load(const char *path, struct AefiBundle **out);

/**
 * Parses a bundle from its JSON text.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a writable pointer.
 */
enum AefiStatus aefi_bundle_from_json(const char *json, struct AefiBundle **out);

/**
 * # Safety
 * `bundle` must be null or a handle from this library not yet freed.
 */
void aefi_bundle_free(struct AefiBundle *bundle);

/**
 * Encoded feature dimension, or 0 for a null handle.
 *
 * # Safety
 * `bundle` must be null or a live handle.
 */
size_t aefi_bundle_dim(const struct AefiBundle *bundle);

/**
 * Decision threshold, or NaN for a null handle.
 *
 * # Safety
 * `bundle` must be null or a live handle.
 */
double aefi_bundle_threshold(const struct AefiBundle *bundle);

/**
 * Scores an already encoded row of `len` values.
 *
 * # Safety
 * `bundle` must be a live handle, `row` must point to `len` readable
 * doubles and `score` must be writable.
 */
enum AefiStatus aefi_bundle_predict_row(const struct AefiBundle *bundle,
                                        const double *row,
                                        size_t len,
                                        double *score);

/**
 * Validates, encodes and scores a raw record given as a JSON object of
 * feature name to string (or null). `label` receives 1 when the score
 * reaches the bundle threshold, else 0; it may be null.
 *
 * # Safety
 * `bundle` must be a live handle, `json` a NUL-terminated string, `score`
 * writable and `label` null or writable.
 */
enum AefiStatus aefi_bundle_predict_record_json(const struct AefiBundle *bundle,
                                                const char *json,
                                                double *score,
                                                int32_t *label);

/**
 * Rank AUC of `n` scores against 0/1 labels (1 is the positive class).
 *
 * # Safety
 * `scores` and `labels` must point to `n` readable values; `out` writable.
 */
enum AefiStatus aefi_auc(const double *scores, const uint8_t *labels, size_t n, double *out);

/**
 * Metrics for a confusion matrix with the positive class in the first row.
 *
 * # Safety
 * `out` must be writable.
 */
enum AefiStatus aefi_metrics(uint64_t tp,
                             uint64_t fn_,
                             uint64_t fp,
                             uint64_t tn,
                             struct AefiMetrics *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AEFI_H */
