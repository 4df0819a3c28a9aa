// Copyright 2026  The lprobe Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

/* C interface to the lprobe engine.
 *
 * Functions returning int return an lprobe_status.  On failure a message describing
 * the error is available from lprobe_last_error() on the calling thread.
 * Strings returned through char** out-parameters are owned by the caller and
 * must be released with lprobe_free_string().
 */
#ifndef LPROBE_LPROBE_H_
#define LPROBE_LPROBE_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define LPROBE_API __declspec(dllexport)
#elif defined(LPROBE_BUILDING_LIBRARY)
#define LPROBE_API __attribute__((visibility("default")))
#else
#define LPROBE_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lprobe_status {
  LPROBE_OK = 0,
  LPROBE_ERR_IO = 1,
  LPROBE_ERR_PARSE = 2,
  LPROBE_ERR_INTEGRITY = 3,
  LPROBE_ERR_VALIDATION = 4,
  LPROBE_ERR_FORMAT = 5,
  LPROBE_ERR_DUPLICATE = 6,
  LPROBE_ERR_LOOKUP = 7,
  LPROBE_ERR_RANGE = 8,
  LPROBE_ERR_ARGUMENT = 9,
  LPROBE_ERR_INSUFFICIENT_DATA = 10,
  LPROBE_ERR_DEGENERATE_DATA = 11,
  LPROBE_ERR_INPUT = 12,
  LPROBE_ERR_ALIGNMENT_MISSING = 13,
  LPROBE_ERR_FOLD = 14,
  LPROBE_ERR_GAP = 15,
  LPROBE_ERR_INTERNAL = 16
} lprobe_status;

typedef struct lprobe_store_writer lprobe_store_writer;
typedef struct lprobe_store lprobe_store;

LPROBE_API const char *lprobe_version(void);
LPROBE_API const char *lprobe_status_name(int status);
/* Message of the last failure on this thread; empty after a success. */
LPROBE_API const char *lprobe_last_error(void);
LPROBE_API void lprobe_free_string(char *text);

/* Embedding store, writing.  header_json uses the on-disk header schema. */
LPROBE_API int lprobe_store_writer_create(const char *path, const char *header_json,
                                          lprobe_store_writer **out);
/* Appends one utterance.  data[l] holds frames[l] x hidden_dim[l] floats in
 * row-major order for every layer l of the header. */
LPROBE_API int lprobe_store_writer_add(lprobe_store_writer *writer, const char *utterance_id,
                                       int num_layers, const int64_t *frames,
                                       const float *const *data);
LPROBE_API int lprobe_store_writer_finish(lprobe_store_writer *writer);
/* Finishes the file if needed and releases the writer. */
LPROBE_API void lprobe_store_writer_free(lprobe_store_writer *writer);

/* Embedding store, reading. */
LPROBE_API int lprobe_store_open(const char *path, lprobe_store **out);
LPROBE_API void lprobe_store_close(lprobe_store *store);
LPROBE_API int lprobe_store_header_json(const lprobe_store *store, char **out_json);
/* JSON array of utterance ids in sorted order. */
LPROBE_API int lprobe_store_utterance_ids(const lprobe_store *store, char **out_json);
LPROBE_API int lprobe_store_shape(const lprobe_store *store, const char *utterance_id, int layer,
                                  int64_t *frames, int64_t *dim);
/* Copies frames x dim floats into buffer; capacity is counted in floats. */
LPROBE_API int lprobe_store_read_layer(const lprobe_store *store, const char *utterance_id,
                                       int layer, float *buffer, size_t capacity);

LPROBE_API int lprobe_frame_index_for_time(int64_t t_ms, int64_t rate_num, int64_t rate_den,
                                           int64_t frames, int64_t *out);

/* Pools one utterance under a condition label ("mean", "pos:0.25", "t:-200").
 * onset_ms is used only by temporal labels; pass has_onset = 0 when unknown. */
LPROBE_API int lprobe_pool(const lprobe_store *store, const char *utterance_id, int layer,
                           const char *condition, int has_onset, int64_t onset_ms,
                           double *buffer, size_t capacity, size_t *dim);

/* Corpus validation.  alignments_path may be NULL.  The report is a JSON
 * object {"pairs":N,"phenomena":N,"violations":[{kind,subject,detail}]}. */
LPROBE_API int lprobe_validate(const char *manifest_path, const char *alignments_path,
                               int require_alignments, int expect_full_inventory,
                               char **out_report);

/* Campaign plumbing.  Configs and summaries are JSON objects. */
LPROBE_API int lprobe_run_campaign(const char *config_json, char **out_summary);
LPROBE_API int lprobe_score(const char *trained, const char *untrained, const char *output_dir,
                            char **out_summary);
/* dirs_json is a JSON array of campaign directories. */
LPROBE_API int lprobe_report(const char *dirs_json, const char *output_dir, char **out_summary);
LPROBE_API int lprobe_project(const char *config_json, char **out_summary);

/* Scores. */
LPROBE_API int lprobe_selection_score(double acc_trained, double acc_untrained, double *out);
/* probs holds n rows of (p0, p1).  *defined is 0 when no row is correct. */
LPROBE_API int lprobe_confidence_score(const double *probs, const int *truth, size_t n,
                                       double *out, int *defined);
LPROBE_API int lprobe_chance_band(size_t n_samples, int k_folds, int n_trials, uint64_t seed,
                                  double *lower, double *upper);

#ifdef __cplusplus
}
#endif

#endif /* LPROBE_LPROBE_H_ */
