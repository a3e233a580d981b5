/* spaqa C ABI: spatial QA scene parsing, grid maps, and response scoring. */

#ifndef SPAQA_H
#define SPAQA_H

/* Generated with cbindgen:0.29.4 */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum SpaqaStatus {
  SPAQA_STATUS_OK = 0,
  /**
   * A required pointer was NULL or a scalar argument out of range.
   */
  SPAQA_STATUS_INVALID_ARGUMENT = 1,
  /**
   * Input text was not valid UTF-8.
   */
  SPAQA_STATUS_INVALID_UTF8 = 2,
  /**
   * Parsing or validation of a document failed.
   */
  SPAQA_STATUS_PARSE_ERROR = 3,
  /**
   * A domain operation failed (degenerate geometry, bad config, ...).
   */
  SPAQA_STATUS_DOMAIN_ERROR = 4,
} SpaqaStatus;

/**
 * Opaque: one QA record.
 */
typedef struct SpaqaQa SpaqaQa;

/**
 * Opaque: reward configuration.
 */
typedef struct SpaqaRewardConfig SpaqaRewardConfig;

/**
 * Opaque: one parsed scene.
 */
typedef struct SpaqaScene SpaqaScene;

/**
 * Per-component rewards for one scored response.
 */
typedef struct SpaqaRewardBreakdown {
  double r_format;
  double r_task;
  /**
   * Meaningful only when `has_map` is non-zero.
   */
  double r_map;
  uint8_t has_map;
  double r_length;
  double total;
} SpaqaRewardBreakdown;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Last error message for this thread, or NULL when the previous call
 * succeeded. Valid until the next failing call on the same thread.
 */
const char *spaqa_last_error_message(void);

/**
 * Library version as a static string; do not free.
 */
const char *spaqa_version(void);

/**
 * Parses a scene document into an opaque handle.
 *
 * # Safety
 * `text` must be a valid NUL-terminated string and `out` a valid
 * pointer; the returned handle must be freed with [`spaqa_scene_free`].
 */
enum SpaqaStatus spaqa_scene_parse(const char *text, struct SpaqaScene **out);

/**
 * # Safety
 * `scene` must come from [`spaqa_scene_parse`] (or be NULL).
 */
void spaqa_scene_free(struct SpaqaScene *scene);

/**
 * Builds the ground-truth M x M grid map of a scene and returns it as
 * a JSON string (`{"category": [[x, y], ...], ...}`).
 *
 * # Safety
 * `scene` must be a live handle; `out_json` a valid pointer. Free the
 * returned string with [`spaqa_string_free`].
 */
enum SpaqaStatus spaqa_scene_grid_map_json(const struct SpaqaScene *scene,
                                           uintptr_t map_size,
                                           char **out_json);

/**
 * # Safety
 * `s` must have been returned by this library (or be NULL).
 */
void spaqa_string_free(char *s);

/**
 * Parses one QA record (the JSONL line format) into an opaque handle.
 *
 * # Safety
 * `text` must be a valid NUL-terminated string and `out` a valid
 * pointer; free the handle with [`spaqa_qa_free`].
 */
enum SpaqaStatus spaqa_qa_from_json(const char *text, struct SpaqaQa **out);

/**
 * # Safety
 * `qa` must come from [`spaqa_qa_from_json`] (or be NULL).
 */
void spaqa_qa_free(struct SpaqaQa *qa);

/**
 * Default reward configuration. Free with
 * [`spaqa_reward_config_free`].
 */
struct SpaqaRewardConfig *spaqa_reward_config_default(void);

/**
 * Reward configuration from an application config JSON document (the
 * same format the CLI accepts via `--config`; the `reward` section
 * applies).
 *
 * # Safety
 * `text` must be a valid NUL-terminated string and `out` a valid
 * pointer; free the handle with [`spaqa_reward_config_free`].
 */
enum SpaqaStatus spaqa_reward_config_from_json(const char *text, struct SpaqaRewardConfig **out);

/**
 * # Safety
 * `cfg` must come from this library (or be NULL).
 */
void spaqa_reward_config_free(struct SpaqaRewardConfig *cfg);

/**
 * Scores one raw tagged response against a QA record.
 *
 * # Safety
 * All handles must be live; `response_text` NUL-terminated;
 * `out_breakdown` a valid pointer.
 */
enum SpaqaStatus spaqa_score_response(const struct SpaqaQa *qa,
                                      const char *response_text,
                                      const struct SpaqaRewardConfig *cfg,
                                      struct SpaqaRewardBreakdown *out_breakdown);

/**
 * Threshold-counted numeric reward for a prediction against a truth
 * value, under `cfg`'s confidence thresholds.
 *
 * # Safety
 * `cfg` must be a live handle and `out` a valid pointer.
 */
enum SpaqaStatus spaqa_reward_numerical(double predicted,
                                        double truth,
                                        const struct SpaqaRewardConfig *cfg,
                                        double *out);

/**
 * Map reward between two grid maps given as JSON cell dictionaries
 * over an `m` x `m` grid.
 *
 * # Safety
 * `predicted_json` and `truth_json` must be valid NUL-terminated
 * strings and `out` a valid pointer.
 */
enum SpaqaStatus spaqa_reward_map(const char *predicted_json,
                                  const char *truth_json,
                                  uintptr_t m,
                                  double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPAQA_H */
