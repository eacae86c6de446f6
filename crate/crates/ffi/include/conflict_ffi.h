#ifndef CONFLICT_FFI_H
#define CONFLICT_FFI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CfStatus {
  CF_STATUS_OK = 0,
  CF_STATUS_NULL_POINTER = 1,
  CF_STATUS_INVALID_ARGUMENT = 2,
  CF_STATUS_IO = 3,
  CF_STATUS_FORMAT = 4,
  CF_STATUS_DOMAIN = 5,
  CF_STATUS_PANIC = 6,
} CfStatus;

typedef enum CfPermutationMode {
  CF_PERMUTATION_MODE_AUTO = 0,
  CF_PERMUTATION_MODE_EXACT = 1,
  CF_PERMUTATION_MODE_MONTE_CARLO = 2,
} CfPermutationMode;

/**
 * Loaded embedding matrix.
 */
typedef struct CfEmbeddings CfEmbeddings;

/**
 * Community assignment of a clustered graph.
 */
typedef struct CfPartition CfPartition;

/**
 * Linear verdict probe.
 */
typedef struct CfProbe CfProbe;

/**
 * Pairwise normalized-cosine similarities.
 */
typedef struct CfSimilarity CfSimilarity;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *cf_version(void);

/**
 * Message of the last failed call on this thread, or NULL. The pointer is
 * valid until the next call into the library from the same thread.
 */
const char *cf_last_error_message(void);

/**
 * Load an EMB1 file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out_embeddings` writable.
 */
enum CfStatus cf_embeddings_load(const char *path_utf8, struct CfEmbeddings **out_embeddings);

/**
 * Build an embedding matrix from `count` NUL-terminated ids and
 * `count × dim` row-major values.
 *
 * # Safety
 * `ids` must hold `count` valid strings and `values` `count × dim` floats.
 */
enum CfStatus cf_embeddings_new(const char *const *ids,
                                size_t count,
                                size_t dim,
                                const float *values,
                                struct CfEmbeddings **out_embeddings);

/**
 * # Safety
 * `embeddings` must be a live handle or NULL.
 */
size_t cf_embeddings_count(const struct CfEmbeddings *embeddings);

/**
 * # Safety
 * `embeddings` must be a live handle or NULL.
 */
size_t cf_embeddings_dim(const struct CfEmbeddings *embeddings);

/**
 * # Safety
 * `embeddings` must come from this library and not be used afterwards.
 */
void cf_embeddings_free(struct CfEmbeddings *embeddings);

/**
 * Normalized cosine `(cos + 1) / 2` of two `dim`-length vectors.
 *
 * # Safety
 * `u` and `v` must point to `dim` floats; `out_similarity` writable.
 */
enum CfStatus cf_normalized_cosine(const float *u,
                                   const float *v,
                                   size_t dim,
                                   double *out_similarity);

/**
 * All pairwise similarities of an embedding matrix.
 *
 * # Safety
 * `embeddings` must be a live handle; `out_similarity` writable.
 */
enum CfStatus cf_similarity_new(const struct CfEmbeddings *embeddings,
                                struct CfSimilarity **out_similarity);

/**
 * # Safety
 * `similarity` must be a live handle or NULL.
 */
size_t cf_similarity_len(const struct CfSimilarity *similarity);

/**
 * # Safety
 * `similarity` must be a live handle; `out_value` writable.
 */
enum CfStatus cf_similarity_get(const struct CfSimilarity *similarity,
                                size_t i,
                                size_t j,
                                double *out_value);

/**
 * # Safety
 * `similarity` must come from this library and not be used afterwards.
 */
void cf_similarity_free(struct CfSimilarity *similarity);

/**
 * Prune the lowest `cutoff_pct` percent of edges and run Louvain.
 *
 * # Safety
 * `similarity` must be a live handle; `out_partition` writable.
 */
enum CfStatus cf_louvain(const struct CfSimilarity *similarity,
                         uint32_t cutoff_pct,
                         uint64_t seed,
                         struct CfPartition **out_partition);

/**
 * # Safety
 * `partition` must be a live handle or NULL.
 */
size_t cf_partition_len(const struct CfPartition *partition);

/**
 * # Safety
 * `partition` must be a live handle or NULL.
 */
size_t cf_partition_community_count(const struct CfPartition *partition);

/**
 * Copy the community of each node, in embedding order, into `out_labels`.
 *
 * # Safety
 * `out_labels` must have room for `len` values.
 */
enum CfStatus cf_partition_labels(const struct CfPartition *partition,
                                  size_t *out_labels,
                                  size_t len);

/**
 * # Safety
 * `partition` must come from this library and not be used afterwards.
 */
void cf_partition_free(struct CfPartition *partition);

/**
 * Adjusted Rand index of two labelings of the same `n` elements.
 *
 * # Safety
 * `a` and `b` must point to `n` values; `out_ari` writable.
 */
enum CfStatus cf_adjusted_rand_index(const size_t *a, const size_t *b, size_t n, double *out_ari);

/**
 * Matthews correlation of two 0/1 vectors (any nonzero byte is 1).
 *
 * # Safety
 * `a` and `b` must point to `n` bytes; `out_mcc` writable.
 */
enum CfStatus cf_matthews_correlation(const uint8_t *a,
                                      const uint8_t *b,
                                      size_t n,
                                      double *out_mcc);

/**
 * Two-sided Fisher exact test of `[[a, b], [c, d]]`. `out_degenerate` may
 * be NULL.
 *
 * # Safety
 * `out_p` must be writable; `out_degenerate` writable or NULL.
 */
enum CfStatus cf_fisher_exact(uint64_t a,
                              uint64_t b,
                              uint64_t c,
                              uint64_t d,
                              double *out_p,
                              bool *out_degenerate);

/**
 * One-sided permutation test of `mean(a) > mean(b)` on 0/1 outcomes.
 *
 * # Safety
 * `a`/`b` must point to `n_a`/`n_b` bytes; `out_p` writable.
 */
enum CfStatus cf_permutation_test(const uint8_t *a,
                                  size_t n_a,
                                  const uint8_t *b,
                                  size_t n_b,
                                  uint64_t resamples,
                                  uint64_t seed,
                                  enum CfPermutationMode mode,
                                  double *out_p);

/**
 * Focal loss of the true-class probability and its derivative with respect
 * to the true-class score. Either output may be NULL.
 *
 * # Safety
 * Outputs must be writable or NULL.
 */
enum CfStatus cf_focal_loss(double p_true,
                            double alpha,
                            double gamma,
                            double *out_loss,
                            double *out_grad);

/**
 * Load a PRB1 probe model.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out_probe` writable.
 */
enum CfStatus cf_probe_load(const char *path_utf8, struct CfProbe **out_probe);

/**
 * Probe from `dim` weights and a bias.
 *
 * # Safety
 * `weights` must point to `dim` values; `out_probe` writable.
 */
enum CfStatus cf_probe_new(const double *weights,
                           size_t dim,
                           double bias,
                           struct CfProbe **out_probe);

/**
 * # Safety
 * `probe` must be a live handle or NULL.
 */
size_t cf_probe_dim(const struct CfProbe *probe);

/**
 * Probability of YTA for one embedding.
 *
 * # Safety
 * `embedding` must point to `dim` floats; `out_probability` writable.
 */
enum CfStatus cf_probe_predict(const struct CfProbe *probe,
                               const float *embedding,
                               size_t dim,
                               double *out_probability);

/**
 * # Safety
 * `probe` must come from this library and not be used afterwards.
 */
void cf_probe_free(struct CfProbe *probe);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CONFLICT_FFI_H */
