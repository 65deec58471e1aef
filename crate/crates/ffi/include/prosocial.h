#ifndef PROSOCIAL_H
#define PROSOCIAL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Number of metrics in a panel; value and mask buffers have this length.
 */
#define PROSOCIAL_METRIC_COUNT 22

typedef enum {
  PROSOCIAL_CLASSIFIER_INFORMATION = 0,
  PROSOCIAL_CLASSIFIER_MENTORING = 1,
} ProsocialClassifier;

typedef enum {
  PROSOCIAL_STATUS_OK = 0,
  PROSOCIAL_STATUS_NULL_POINTER = 1,
  PROSOCIAL_STATUS_INVALID_UTF8 = 2,
  /**
   * Malformed record, bad argument or wrong size.
   */
  PROSOCIAL_STATUS_INVALID_INPUT = 3,
  PROSOCIAL_STATUS_IO = 4,
  PROSOCIAL_STATUS_CONFIG = 5,
  /**
   * Model and input disagree on the metric order.
   */
  PROSOCIAL_STATUS_MANIFEST = 6,
  /**
   * Fitting failed or a statistic is undefined.
   */
  PROSOCIAL_STATUS_NUMERIC = 7,
  PROSOCIAL_STATUS_TOXICITY = 8,
  PROSOCIAL_STATUS_PANIC = 9,
} ProsocialStatus;

/**
 * Scorers and lexicons for panel computation. Toxicity is always scored
 * offline with the bundled fallback lexicon.
 */
typedef struct ProsocialContext ProsocialContext;

typedef struct ProsocialTrajectory ProsocialTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer is
 * valid until the next call into this library on the same thread.
 */
const char *prosocial_last_error(void);

/**
 * Name of metric `index` as a static string, or NULL when out of range.
 */
const char *prosocial_metric_name(size_t index);

/**
 * Creates a context with the bundled resources and no classifiers.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
ProsocialStatus prosocial_context_new(ProsocialContext **out);

/**
 * Loads an n-gram classifier model file into the context.
 *
 * # Safety
 * `ctx` must come from [`prosocial_context_new`]; `path` must be a
 * NUL-terminated string.
 */
ProsocialStatus prosocial_context_set_classifier(ProsocialContext *ctx,
                                                 ProsocialClassifier kind,
                                                 const char *path);

/**
 * # Safety
 * `ctx` must come from [`prosocial_context_new`] and not be used after
 * this call. NULL is ignored.
 */
void prosocial_context_free(ProsocialContext *ctx);

/**
 * Computes the panel of one canonical conversation record (a single JSON
 * line as written by `prosocial ingest`). Writes
 * [`PROSOCIAL_METRIC_COUNT`] values and mask bytes; a mask byte of 0
 * marks an undefined metric.
 *
 * # Safety
 * `ctx` must be a live context, `conversation_json` a NUL-terminated
 * string, and both output buffers must hold `PROSOCIAL_METRIC_COUNT`
 * elements.
 */
ProsocialStatus prosocial_panel_compute(const ProsocialContext *ctx,
                                        const char *conversation_json,
                                        double *values_out,
                                        uint8_t *defined_out);

/**
 * Laughter matches in `text_in`.
 *
 * # Safety
 * `text_in` must be NUL-terminated and `out` writable.
 */
ProsocialStatus prosocial_count_laughter(const char *text_in, size_t *out);

/**
 * # Safety
 * `path` must be NUL-terminated and `out` writable.
 */
ProsocialStatus prosocial_trajectory_load(const char *path, ProsocialTrajectory **out);

/**
 * Fits the trajectory model on `rows` panels stored row-major in `values`
 * (`rows * PROSOCIAL_METRIC_COUNT` doubles).
 *
 * # Safety
 * `values` must hold `rows * PROSOCIAL_METRIC_COUNT` doubles and `out`
 * must be writable.
 */
ProsocialStatus prosocial_trajectory_fit(const double *values,
                                         size_t rows,
                                         ProsocialTrajectory **out);

/**
 * Trajectory (first-component score) of one panel.
 *
 * # Safety
 * `model` must be live, `values` must hold `PROSOCIAL_METRIC_COUNT`
 * doubles and `out` must be writable.
 */
ProsocialStatus prosocial_trajectory_score(const ProsocialTrajectory *model,
                                           const double *values,
                                           double *out);

/**
 * Variance explained by the first `k` components.
 *
 * # Safety
 * `model` must be live and `out` writable.
 */
ProsocialStatus prosocial_trajectory_explained_variance(const ProsocialTrajectory *model,
                                                        size_t k,
                                                        double *out);

/**
 * # Safety
 * `model` must be live and `path` NUL-terminated.
 */
ProsocialStatus prosocial_trajectory_save(const ProsocialTrajectory *model, const char *path);

/**
 * # Safety
 * `model` must come from this library and not be used after this call.
 * NULL is ignored.
 */
void prosocial_trajectory_free(ProsocialTrajectory *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PROSOCIAL_H */
