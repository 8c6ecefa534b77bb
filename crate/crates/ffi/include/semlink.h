#ifndef SEMLINK_H
#define SEMLINK_H

/* Generated by cbindgen from crates/ffi. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SlStatus {
  SL_STATUS_OK = 0,
  SL_STATUS_NULL_POINTER = 1,
  SL_STATUS_INVALID_UTF8 = 2,
  SL_STATUS_IO = 3,
  SL_STATUS_PARSE = 4,
  SL_STATUS_INVALID_ARGUMENT = 5,
  SL_STATUS_UNKNOWN_LABEL = 6,
  SL_STATUS_SHAPE = 7,
  SL_STATUS_BUFFER_TOO_SMALL = 8,
  SL_STATUS_PANIC = 9,
} SlStatus;

typedef struct SlClassifier SlClassifier;

typedef struct SlKnowledgeBase SlKnowledgeBase;

typedef struct SlLinkModel SlLinkModel;

typedef struct SlWordVectors SlWordVectors;

/**
 * Detection box in corner form. `class_id` stands in for the class label:
 * boxes with equal ids are suppressed against each other.
 */
typedef struct SlBox {
  double x_min;
  double y_min;
  double x_max;
  double y_max;
  double score;
  uint32_t class_id;
} SlBox;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or "" after a success.
 * Valid until the next call into this library from the same thread.
 */
const char *sl_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *sl_version(void);

/**
 * Loads a tab-separated knowledge base.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out_kb` valid.
 */
enum SlStatus sl_kb_load(const char *path, struct SlKnowledgeBase **out_kb);

/**
 * # Safety
 * `kb` must be NULL or a handle from [`sl_kb_load`] not yet freed.
 */
void sl_kb_free(struct SlKnowledgeBase *kb);

/**
 * # Safety
 * `kb` must be a live handle; the out-pointers must be valid.
 */
enum SlStatus sl_kb_counts(const struct SlKnowledgeBase *kb,
                           size_t *entities,
                           size_t *relations,
                           size_t *triples);

/**
 * Closed-world membership of `(head, relation, tail)`.
 *
 * # Safety
 * `kb` must be a live handle, the labels NUL-terminated strings and
 * `out_contains` valid.
 */
enum SlStatus sl_kb_contains(const struct SlKnowledgeBase *kb,
                             const char *head,
                             const char *relation,
                             const char *tail,
                             bool *out_contains);

/**
 * Loads a whitespace-separated word vector file of dimension `dim`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out_vectors` valid.
 */
enum SlStatus sl_vectors_load(const char *path, size_t dim, struct SlWordVectors **out_vectors);

/**
 * # Safety
 * `vectors` must be NULL or a live handle.
 */
void sl_vectors_free(struct SlWordVectors *vectors);

/**
 * Averaged embedding of an entity label list, the zero vector when no label
 * embeds. `out` must hold exactly the table dimension.
 *
 * # Safety
 * `labels` must point to `n_labels` NUL-terminated strings and `out` to
 * `out_len` doubles.
 */
enum SlStatus sl_vectors_embed_entities(const struct SlWordVectors *vectors,
                                        const char *const *labels,
                                        size_t n_labels,
                                        double *out_embedding,
                                        size_t out_len);

/**
 * Loads a link model checkpoint.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out_model` valid.
 */
enum SlStatus sl_link_model_load(const char *path, struct SlLinkModel **out_model);

/**
 * # Safety
 * `model` must be NULL or a live handle.
 */
void sl_link_model_free(struct SlLinkModel *model);

/**
 * Raw tensor-layer score and its plausibility (the negated raw score).
 *
 * # Safety
 * `model` must be a live handle, the labels NUL-terminated strings and the
 * out-pointers valid.
 */
enum SlStatus sl_link_model_score(const struct SlLinkModel *model,
                                  const char *head,
                                  const char *relation,
                                  const char *tail,
                                  double *out_raw,
                                  double *out_plausibility);

/**
 * # Safety
 * `model` must be a live handle and `out_count` valid.
 */
enum SlStatus sl_link_model_num_entities(const struct SlLinkModel *model, size_t *out_count);

/**
 * Copies the label of entity `index` into `buf`.
 *
 * # Safety
 * `model` must be a live handle, `buf` must hold `buf_len` bytes and
 * `out_needed` must be NULL or valid.
 */
enum SlStatus sl_link_model_entity(const struct SlLinkModel *model,
                                   size_t index,
                                   char *buf,
                                   size_t buf_len,
                                   size_t *out_needed);

/**
 * Ranks every entity as tail of `(head, relation)`, most plausible first.
 * Writes up to `capacity` entity indices and plausibilities.
 *
 * # Safety
 * `model` must be a live handle, the labels NUL-terminated strings and the
 * output arrays must hold `capacity` elements.
 */
enum SlStatus sl_link_model_rank_tails(const struct SlLinkModel *model,
                                       const char *head,
                                       const char *relation,
                                       size_t *out_indices,
                                       double *out_plausibility,
                                       size_t capacity,
                                       size_t *out_written);

/**
 * Intersection over union of two boxes; 0 when both are degenerate.
 *
 * # Safety
 * All pointers must be valid.
 */
enum SlStatus sl_iou(const struct SlBox *a, const struct SlBox *b, double *out_iou);

/**
 * Greedy per-class non-max suppression. Writes the input indices of the
 * kept boxes, best score first; `capacity` must be at least
 * `min(n_boxes, max_keep)`.
 *
 * # Safety
 * `boxes` must point to `n_boxes` boxes and `out_indices` to `capacity`
 * elements.
 */
enum SlStatus sl_nms(const struct SlBox *boxes,
                     size_t n_boxes,
                     double iou_threshold,
                     size_t max_keep,
                     size_t *out_indices,
                     size_t capacity,
                     size_t *out_written);

/**
 * Loads a classifier checkpoint (either architecture).
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out_classifier` valid.
 */
enum SlStatus sl_classifier_load(const char *path, struct SlClassifier **out_classifier);

/**
 * # Safety
 * `classifier` must be NULL or a live handle.
 */
void sl_classifier_free(struct SlClassifier *classifier);

/**
 * Predicted class index and, if `out_probs` is not NULL, the class
 * distribution (`probs_len` must then equal the class count). The baseline
 * ignores `image`, which may be NULL with `image_len` 0.
 *
 * # Safety
 * `classifier` must be a live handle and every array must hold its stated
 * length.
 */
enum SlStatus sl_classifier_predict(const struct SlClassifier *classifier,
                                    const double *image,
                                    size_t image_len,
                                    const double *embedding,
                                    size_t embedding_len,
                                    size_t *out_class,
                                    double *out_probs,
                                    size_t probs_len);

/**
 * Copies the label of class `index` into `buf`.
 *
 * # Safety
 * `classifier` must be a live handle, `buf` must hold `buf_len` bytes and
 * `out_needed` must be NULL or valid.
 */
enum SlStatus sl_classifier_label(const struct SlClassifier *classifier,
                                  size_t index,
                                  char *buf,
                                  size_t buf_len,
                                  size_t *out_needed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SEMLINK_H */
