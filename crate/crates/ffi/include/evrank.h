#ifndef EVRANK_H
#define EVRANK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum EvrStatus {
  EVR_STATUS_OK = 0,
  EVR_STATUS_NULL_ARGUMENT = 1,
  EVR_STATUS_INVALID_UTF8 = 2,
  EVR_STATUS_INVALID_ARGUMENT = 3,
  EVR_STATUS_IO = 4,
  EVR_STATUS_PARSE = 5,
  EVR_STATUS_CONFIG = 6,
  EVR_STATUS_PROTOCOL = 7,
  EVR_STATUS_STALE = 8,
  EVR_STATUS_OUT_OF_RANGE = 9,
  EVR_STATUS_PANIC = 10,
} EvrStatus;

/**
 * Parsed corpus.
 */
typedef struct EvrCorpus EvrCorpus;

/**
 * BM25 inverted index.
 */
typedef struct EvrIndex EvrIndex;

/**
 * Ranked documents for one query, best first.
 */
typedef struct EvrRankedList EvrRankedList;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL after a
 * successful call. Valid until the next call into this library.
 */
const char *evr_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *evr_version(void);

/**
 * Loads a JSONL corpus. `strict` non-zero aborts on malformed lines.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out_corpus` a valid pointer.
 */
enum EvrStatus evr_corpus_load(const char *path, int32_t strict, struct EvrCorpus **out_corpus);

/**
 * # Safety
 * `corpus` must be a live handle or NULL.
 */
size_t evr_corpus_len(const struct EvrCorpus *corpus);

/**
 * # Safety
 * `corpus` must come from `evr_corpus_load` and not be used afterwards.
 */
void evr_corpus_free(struct EvrCorpus *corpus);

/**
 * Builds an index over title and abstract with no stopwords.
 *
 * # Safety
 * `corpus` must be a live handle and `out_index` a valid pointer.
 */
enum EvrStatus evr_index_build(const struct EvrCorpus *corpus, struct EvrIndex **out_index);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `out_index` a valid pointer.
 */
enum EvrStatus evr_index_read(const char *path, struct EvrIndex **out_index);

/**
 * # Safety
 * `index` must be a live handle and `path` a NUL-terminated string.
 */
enum EvrStatus evr_index_write(const struct EvrIndex *index, const char *path);

/**
 * # Safety
 * `index` must be a live handle or NULL.
 */
size_t evr_index_num_docs(const struct EvrIndex *index);

/**
 * # Safety
 * `index` must come from this library and not be used afterwards.
 */
void evr_index_free(struct EvrIndex *index);

/**
 * BM25 top-`k` for free text with the given parameters. Only documents
 * with a positive score are returned.
 *
 * # Safety
 * `index` must be a live handle, `query` a NUL-terminated string and
 * `out_list` a valid pointer.
 */
enum EvrStatus evr_bm25_search(const struct EvrIndex *index,
                               const char *query,
                               size_t k,
                               double k1,
                               double b,
                               struct EvrRankedList **out_list);

/**
 * # Safety
 * `list` must be a live handle or NULL.
 */
size_t evr_ranked_list_len(const struct EvrRankedList *list);

/**
 * Entry at zero-based `position`.
 *
 * # Safety
 * `list` must be a live handle; out pointers must be valid.
 */
enum EvrStatus evr_ranked_list_get(const struct EvrRankedList *list,
                                   size_t position,
                                   uint64_t *out_doc_id,
                                   double *out_score);

/**
 * # Safety
 * `list` must come from this library and not be used afterwards.
 */
void evr_ranked_list_free(struct EvrRankedList *list);

/**
 * p_support + p_refute of a validated label distribution.
 *
 * # Safety
 * `out_value` must be a valid pointer.
 */
enum EvrStatus evr_verification_feedback(double p_support,
                                         double p_refute,
                                         double p_nei,
                                         double *out_value);

/**
 * Sigmoid of a relevance logit, kept inside (0, 1).
 *
 * # Safety
 * `out_value` must be a valid pointer.
 */
enum EvrStatus evr_normalize_relevance(double logit, double *out_value);

/**
 * alpha * s_v + (1 - alpha) * s_r with all inputs in [0, 1].
 *
 * # Safety
 * `out_value` must be a valid pointer.
 */
enum EvrStatus evr_combo_score(double s_v, double s_r, double alpha, double *out_value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EVRANK_H */
