#ifndef SKIM_H
#define SKIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SkimStatus {
  SKIM_STATUS_OK = 0,
  SKIM_STATUS_NULL_POINTER = 1,
  SKIM_STATUS_INVALID_ARGUMENT = 2,
  SKIM_STATUS_PARSE = 3,
  SKIM_STATUS_FORMAT = 4,
  SKIM_STATUS_IO = 5,
  SKIM_STATUS_UNKNOWN_NODES = 6,
  SKIM_STATUS_PANIC = 7,
} SkimStatus;

/**
 * Propagation instances.
 */
typedef struct SkimGraph SkimGraph;

/**
 * Seed nodes in selection order with their marginal coverage.
 */
typedef struct SkimSeeds SkimSeeds;

/**
 * Combined reachability sketches for every node.
 */
typedef struct SkimSketches SkimSketches;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. The pointer
 * stays valid until the next call into this library on the same thread.
 */
const char *skim_last_error(void);

/**
 * Loads an edge list and samples `ell` instances. `p < 0` selects the
 * weighted cascade scheme, otherwise every arc is live with probability `p`.
 *
 * # Safety
 * `edge_list` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SkimStatus skim_graph_sample(const char *edge_list,
                                  bool directed,
                                  double p,
                                  uint32_t ell,
                                  uint64_t seed,
                                  struct SkimGraph **out_graph);

/**
 * Builds instances from flat arc arrays: instance `i` owns the next
 * `arc_counts[i]` entries of `tails` and `heads`.
 *
 * # Safety
 * `arc_counts` must hold `ell` entries and `tails`/`heads` their sum.
 */
enum SkimStatus skim_graph_from_arcs(uint32_t n,
                                     uint32_t ell,
                                     const size_t *arc_counts,
                                     const uint32_t *tails,
                                     const uint32_t *heads,
                                     struct SkimGraph **out_graph);

/**
 * # Safety
 * `file` must be a NUL-terminated string and `out_graph` a valid pointer.
 */
enum SkimStatus skim_graph_read(const char *file, struct SkimGraph **out_graph);

/**
 * # Safety
 * `graph` must come from this library; `file` must be NUL-terminated.
 */
enum SkimStatus skim_graph_write(const struct SkimGraph *graph, const char *file);

/**
 * Node count, or 0 for NULL.
 *
 * # Safety
 * `graph` must be NULL or come from this library.
 */
uint32_t skim_graph_node_count(const struct SkimGraph *graph);

/**
 * Instance count, or 0 for NULL.
 *
 * # Safety
 * `graph` must be NULL or come from this library.
 */
uint32_t skim_graph_instance_count(const struct SkimGraph *graph);

/**
 * # Safety
 * `graph` must be NULL or come from this library, and not be used afterwards.
 */
void skim_graph_free(struct SkimGraph *graph);

/**
 * Exact influence of `seeds` averaged over the instances.
 *
 * # Safety
 * `seeds` must hold `len` entries; `graph` must come from this library.
 */
enum SkimStatus skim_exact_influence(const struct SkimGraph *graph,
                                     const uint32_t *seeds,
                                     size_t len,
                                     double *out_value);

/**
 * # Safety
 * `graph` must come from this library; `out_sketches` must be valid.
 */
enum SkimStatus skim_sketches_build(const struct SkimGraph *graph,
                                    uint32_t k,
                                    uint64_t seed,
                                    struct SkimSketches **out_sketches);

/**
 * # Safety
 * `file` must be NUL-terminated and `out_sketches` valid.
 */
enum SkimStatus skim_sketches_read(const char *file, struct SkimSketches **out_sketches);

/**
 * # Safety
 * `sketches` must come from this library; `file` must be NUL-terminated.
 */
enum SkimStatus skim_sketches_write(const struct SkimSketches *sketches, const char *file);

/**
 * Estimated influence of `seeds` from their sketches.
 *
 * # Safety
 * `seeds` must hold `len` entries; `sketches` must come from this library.
 */
enum SkimStatus skim_sketches_query(const struct SkimSketches *sketches,
                                    const uint32_t *seeds,
                                    size_t len,
                                    double *out_value);

/**
 * # Safety
 * `sketches` must be NULL or come from this library, and not be used afterwards.
 */
void skim_sketches_free(struct SkimSketches *sketches);

/**
 * Sketch-based greedy selection of `s` seeds (`s == 0` selects all nodes).
 *
 * # Safety
 * `graph` must come from this library; `out_seeds` must be valid.
 */
enum SkimStatus skim_select(const struct SkimGraph *graph,
                            uint32_t k,
                            size_t s,
                            uint64_t seed,
                            struct SkimSeeds **out_seeds);

/**
 * Exact greedy selection of `s` seeds, lazy unless `naive` is set.
 *
 * # Safety
 * `graph` must come from this library; `out_seeds` must be valid.
 */
enum SkimStatus skim_greedy(const struct SkimGraph *graph,
                            size_t s,
                            bool naive,
                            struct SkimSeeds **out_seeds);

/**
 * Number of selected seeds, or 0 for NULL.
 *
 * # Safety
 * `seeds` must be NULL or come from this library.
 */
size_t skim_seeds_len(const struct SkimSeeds *seeds);

/**
 * Node and marginal coverage (in node-instance pairs) at `position`.
 *
 * # Safety
 * `seeds` must come from this library; output pointers must be valid.
 */
enum SkimStatus skim_seeds_get(const struct SkimSeeds *seeds,
                               size_t position,
                               uint32_t *out_node,
                               uint64_t *out_covered);

/**
 * # Safety
 * `seeds` must be NULL or come from this library, and not be used afterwards.
 */
void skim_seeds_free(struct SkimSeeds *seeds);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SKIM_H */
