#ifndef COLLUSION_H
#define COLLUSION_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call. Values 2 to 4 match the CLI exit codes.
 */
typedef enum CollusionStatus {
  COLLUSION_STATUS_OK = 0,
  /**
   * A required pointer was null or a string was not UTF-8.
   */
  COLLUSION_STATUS_INVALID_ARGUMENT = 1,
  /**
   * Bad input data, parameters or configuration.
   */
  COLLUSION_STATUS_INPUT = 2,
  /**
   * Isolated vertex or disconnected graph.
   */
  COLLUSION_STATUS_DEGENERATE = 3,
  /**
   * Eigensolver or other numerical failure.
   */
  COLLUSION_STATUS_NUMERIC = 4,
  /**
   * A panic was caught at the boundary.
   */
  COLLUSION_STATUS_INTERNAL = 5,
} CollusionStatus;

/**
 * Cluster assignment handle.
 */
typedef struct CollusionClustering CollusionClustering;

/**
 * Trader graph handle.
 */
typedef struct CollusionGraph CollusionGraph;

/**
 * Planted-partition instance: a graph and its ground truth.
 */
typedef struct CollusionSimulation CollusionSimulation;

/**
 * Result of a sweep over cluster counts.
 */
typedef struct CollusionSweep CollusionSweep;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *collusion_last_error(void);

/**
 * Builds a graph over `n_vertices` vertices named by zero-padded index.
 * Edge `e` joins `src[e]` and `dst[e]` with weight `weight[e]`.
 */
enum CollusionStatus collusion_graph_from_edges(size_t n_vertices,
                                                const uint32_t *src,
                                                const uint32_t *dst,
                                                const double *weight,
                                                size_t n_edges,
                                                struct CollusionGraph **out);

/**
 * Reads an `i,j,weight` edge-list CSV.
 */
enum CollusionStatus collusion_graph_read_edge_list(const char *path, struct CollusionGraph **out);

/**
 * Builds the trader graph of one stock over `[start, start + days)` from a
 * trade CSV with the default column names. `terms` is a subset of "tvpc".
 */
enum CollusionStatus collusion_graph_from_trades(const char *path,
                                                 const char *stock,
                                                 int64_t start,
                                                 double days,
                                                 const char *terms,
                                                 struct CollusionGraph **out);

void collusion_graph_free(struct CollusionGraph *g);

/**
 * Vertex count, or 0 for a null handle.
 */
size_t collusion_graph_vertex_count(const struct CollusionGraph *g);

/**
 * Edge count, or 0 for a null handle.
 */
size_t collusion_graph_edge_count(const struct CollusionGraph *g);

/**
 * Name of vertex `i`, owned by the graph. Null when out of range.
 */
const char *collusion_graph_vertex_name(const struct CollusionGraph *g, size_t i);

/**
 * Weight between vertices `i` and `j`; 0 when absent or out of range.
 */
double collusion_graph_weight(const struct CollusionGraph *g, size_t i, size_t j);

/**
 * Generates a planted-partition instance.
 */
enum CollusionStatus collusion_simulate(size_t n,
                                        double p,
                                        size_t n1,
                                        size_t n2,
                                        double p1,
                                        double p2,
                                        double b,
                                        uint64_t seed,
                                        struct CollusionSimulation **out);

void collusion_simulation_free(struct CollusionSimulation *s);

/**
 * The simulated graph, owned by the simulation. Do not free it.
 */
const struct CollusionGraph *collusion_simulation_graph(const struct CollusionSimulation *s);

/**
 * Copies planted labels (0 = first group, 1 = second, 2 = background) into
 * `labels`, which must hold the graph's vertex count.
 */
enum CollusionStatus collusion_simulation_truth(const struct CollusionSimulation *s,
                                                uint32_t *labels,
                                                size_t len);

/**
 * Spectral clustering into `k` groups.
 */
enum CollusionStatus collusion_spectral_cluster(const struct CollusionGraph *g,
                                                size_t k,
                                                uint64_t seed,
                                                struct CollusionClustering **out);

void collusion_clustering_free(struct CollusionClustering *c);

/**
 * Number of clusters, or 0 for a null handle.
 */
size_t collusion_clustering_k(const struct CollusionClustering *c);

/**
 * Copies the per-vertex cluster labels into `labels` (length >= n).
 */
enum CollusionStatus collusion_clustering_labels(const struct CollusionClustering *c,
                                                 uint32_t *labels,
                                                 size_t len);

/**
 * Clusters for every k in `[k_min, k_max]` and keeps the modularity maximizer.
 */
enum CollusionStatus collusion_sweep_k(const struct CollusionGraph *g,
                                       size_t k_min,
                                       size_t k_max,
                                       uint64_t seed,
                                       struct CollusionSweep **out);

void collusion_sweep_free(struct CollusionSweep *s);

/**
 * Selected cluster count, or 0 for a null handle.
 */
size_t collusion_sweep_best_k(const struct CollusionSweep *s);

/**
 * Number of evaluated cluster counts.
 */
size_t collusion_sweep_len(const struct CollusionSweep *s);

/**
 * Scores of the `index`-th evaluated cluster count.
 */
enum CollusionStatus collusion_sweep_entry(const struct CollusionSweep *s,
                                           size_t index,
                                           size_t *k,
                                           double *q,
                                           double *minmaxcut);

/**
 * A copy of the clustering chosen by the sweep.
 */
enum CollusionStatus collusion_sweep_best(const struct CollusionSweep *s,
                                          struct CollusionClustering **out);

/**
 * Modularity of the partition given by `labels` (one per vertex, using
 * every label in `0..k`).
 */
enum CollusionStatus collusion_modularity(const struct CollusionGraph *g,
                                          const uint32_t *labels,
                                          size_t len,
                                          double *out);

/**
 * MinMaxCut of the partition given by `labels`; infinite when a cluster has
 * no internal weight.
 */
enum CollusionStatus collusion_minmaxcut(const struct CollusionGraph *g,
                                         const uint32_t *labels,
                                         size_t len,
                                         double *out);

/**
 * Best-match accuracy and adjusted Rand index of `predicted` against `truth`.
 */
enum CollusionStatus collusion_agreement(const uint32_t *predicted,
                                         const uint32_t *truth,
                                         size_t len,
                                         double *accuracy,
                                         double *ari);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COLLUSION_H */
