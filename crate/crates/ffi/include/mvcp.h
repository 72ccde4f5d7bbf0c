#ifndef MVCP_H
#define MVCP_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MvcpStatus {
  MVCP_STATUS_OK = 0,
  MVCP_STATUS_NULL_POINTER = 1,
  MVCP_STATUS_INVALID_ARGUMENT = 2,
  MVCP_STATUS_IO = 3,
  MVCP_STATUS_PARSE = 4,
  MVCP_STATUS_SHAPE = 5,
  MVCP_STATUS_NUMERICAL = 6,
  MVCP_STATUS_BUFFER_TOO_SMALL = 7,
  MVCP_STATUS_PANIC = 8,
} MvcpStatus;

typedef enum MvcpInit {
  MVCP_INIT_RANDOM_UNIFORM = 0,
  MVCP_INIT_RANDOM_NORMAL = 1,
} MvcpInit;

typedef enum MvcpSource {
  MVCP_SOURCE_A = 0,
  MVCP_SOURCE_B = 1,
  MVCP_SOURCE_A_CONCAT_B = 2,
} MvcpSource;

typedef struct MvcpEmbedding MvcpEmbedding;

typedef struct MvcpFeatures MvcpFeatures;

typedef struct MvcpGraph MvcpGraph;

typedef struct MvcpKnn MvcpKnn;

typedef struct MvcpLabels MvcpLabels;

typedef struct MvcpModel MvcpModel;

typedef struct MvcpTensor MvcpTensor;

typedef struct MvcpAlsConfig {
  size_t rank;
  size_t max_iters;
  double tol;
  uint64_t seed;
  enum MvcpInit init;
} MvcpAlsConfig;

typedef struct MvcpEvalSummary {
  double micro_f1_mean;
  double micro_f1_std;
  double macro_f1_mean;
  double macro_f1_std;
} MvcpEvalSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failing call on this thread, or NULL. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *mvcp_last_error_message(void);

/**
 * Static, NUL-terminated library version.
 */
const char *mvcp_version(void);

/**
 * Loads a whitespace edge list. `num_nodes == 0` infers the node count.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum MvcpStatus mvcp_graph_load(const char *path, size_t num_nodes, struct MvcpGraph **out);

/**
 * Builds a graph from `len` pairs `(us[i], vs[i])`.
 *
 * # Safety
 * `us` and `vs` must point to `len` readable elements (may be NULL when
 * `len == 0`).
 */
enum MvcpStatus mvcp_graph_from_pairs(size_t num_nodes,
                                      const size_t *us,
                                      const size_t *vs,
                                      size_t len,
                                      struct MvcpGraph **out);

/**
 * # Safety
 * `g` must be a live handle or NULL.
 */
size_t mvcp_graph_num_nodes(const struct MvcpGraph *g);

/**
 * Undirected edge count.
 *
 * # Safety
 * `g` must be a live handle or NULL.
 */
size_t mvcp_graph_num_edges(const struct MvcpGraph *g);

/**
 * # Safety
 * `g` must come from this library and not be used afterwards.
 */
void mvcp_graph_free(struct MvcpGraph *g);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum MvcpStatus mvcp_features_load(const char *path, struct MvcpFeatures **out);

/**
 * # Safety
 * `f` must be a live handle or NULL.
 */
size_t mvcp_features_num_nodes(const struct MvcpFeatures *f);

/**
 * # Safety
 * `f` must come from this library and not be used afterwards.
 */
void mvcp_features_free(struct MvcpFeatures *f);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum MvcpStatus mvcp_labels_load(const char *path, struct MvcpLabels **out);

/**
 * # Safety
 * `l` must come from this library and not be used afterwards.
 */
void mvcp_labels_free(struct MvcpLabels *l);

/**
 * # Safety
 * `f` must be a live handle and `out` a writable pointer.
 */
enum MvcpStatus mvcp_knn_build(const struct MvcpFeatures *f, size_t k, struct MvcpKnn **out);

/**
 * Directed edge count.
 *
 * # Safety
 * `z` must be a live handle or NULL.
 */
size_t mvcp_knn_num_edges(const struct MvcpKnn *z);

/**
 * # Safety
 * `z` must come from this library and not be used afterwards.
 */
void mvcp_knn_free(struct MvcpKnn *z);

/**
 * Stacks the adjacency and K-NN views. A NULL `knn` yields an adjacency-only
 * tensor with one view.
 *
 * # Safety
 * `g` must be a live handle, `knn` a live handle or NULL.
 */
enum MvcpStatus mvcp_tensor_stack(const struct MvcpGraph *g,
                                  const struct MvcpKnn *knn,
                                  struct MvcpTensor **out);

/**
 * # Safety
 * `x` must be a live handle or NULL.
 */
size_t mvcp_tensor_nnz(const struct MvcpTensor *x);

/**
 * # Safety
 * `x` must come from this library and not be used afterwards.
 */
void mvcp_tensor_free(struct MvcpTensor *x);

struct MvcpAlsConfig mvcp_als_config_default(void);

/**
 * # Safety
 * `x` must be a live handle, `config` readable and `out` writable.
 */
enum MvcpStatus mvcp_decompose(const struct MvcpTensor *x,
                               const struct MvcpAlsConfig *config,
                               struct MvcpModel **out);

/**
 * # Safety
 * `m` must be a live handle or NULL.
 */
size_t mvcp_model_rank(const struct MvcpModel *m);

/**
 * # Safety
 * `m` must be a live handle or NULL.
 */
size_t mvcp_model_iterations(const struct MvcpModel *m);

/**
 * # Safety
 * `m` must be a live handle or NULL.
 */
bool mvcp_model_converged(const struct MvcpModel *m);

/**
 * Copies the per-iteration fit values into `buf`. `*len` is the total
 * count on return; `MVCP_STATUS_BUFFER_TOO_SMALL` if `cap` is short, in which
 * case nothing is copied. `buf` may be NULL to query the length.
 *
 * # Safety
 * `m` must be a live handle, `buf` writable for `cap` doubles, `len` writable.
 */
enum MvcpStatus mvcp_model_fit_history(const struct MvcpModel *m,
                                       double *buf,
                                       size_t cap,
                                       size_t *len);

/**
 * Writes the model directory (factors, scales, manifest).
 *
 * # Safety
 * `m` must be a live handle and `dir` a NUL-terminated string.
 */
enum MvcpStatus mvcp_model_save(const struct MvcpModel *m, const char *dir);

/**
 * # Safety
 * `dir` must be a NUL-terminated string and `out` writable.
 */
enum MvcpStatus mvcp_model_load(const char *dir, struct MvcpModel **out);

/**
 * # Safety
 * `m` must come from this library and not be used afterwards.
 */
void mvcp_model_free(struct MvcpModel *m);

/**
 * # Safety
 * `m` must be a live handle and `out` writable.
 */
enum MvcpStatus mvcp_embedding_extract(const struct MvcpModel *m,
                                       enum MvcpSource source,
                                       struct MvcpEmbedding **out);

/**
 * # Safety
 * `e` must be a live handle; `rows` and `cols` writable.
 */
enum MvcpStatus mvcp_embedding_shape(const struct MvcpEmbedding *e, size_t *rows, size_t *cols);

/**
 * Copies the row-major embedding matrix into `buf` (see
 * [`mvcp_model_fit_history`] for the length protocol).
 *
 * # Safety
 * `e` must be a live handle, `buf` writable for `cap` doubles, `len` writable.
 */
enum MvcpStatus mvcp_embedding_copy(const struct MvcpEmbedding *e,
                                    double *buf,
                                    size_t cap,
                                    size_t *len);

/**
 * # Safety
 * `e` must be a live handle and `path` a NUL-terminated string.
 */
enum MvcpStatus mvcp_embedding_save(const struct MvcpEmbedding *e, const char *path);

/**
 * # Safety
 * `e` must come from this library and not be used afterwards.
 */
void mvcp_embedding_free(struct MvcpEmbedding *e);

/**
 * Repeated stratified one-vs-rest evaluation; scores are fractions in [0, 1].
 *
 * # Safety
 * `e` and `labels` must be live handles and `out` writable.
 */
enum MvcpStatus mvcp_evaluate(const struct MvcpEmbedding *e,
                              const struct MvcpLabels *labels,
                              double train_fraction,
                              size_t repeats,
                              uint64_t seed,
                              double inverse_l2,
                              struct MvcpEvalSummary *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MVCP_H */
