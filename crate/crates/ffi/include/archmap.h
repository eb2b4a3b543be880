#ifndef ARCHMAP_H
#define ARCHMAP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum ArchmapStatus {
  ARCHMAP_STATUS_OK = 0,
  ARCHMAP_STATUS_NULL_POINTER = 1,
  ARCHMAP_STATUS_INVALID_ARGUMENT = 2,
  ARCHMAP_STATUS_PARSE = 3,
  ARCHMAP_STATUS_INVALID_MODEL = 4,
  ARCHMAP_STATUS_PRECONDITION = 5,
  ARCHMAP_STATUS_IO = 6,
  ARCHMAP_STATUS_NUMERIC = 7,
  ARCHMAP_STATUS_OUT_OF_RANGE = 8,
  ARCHMAP_STATUS_PANIC = 9,
} ArchmapStatus;

typedef enum ArchmapAf {
  ARCHMAP_AF_COUNT = 0,
  ARCHMAP_AF_IR = 1,
  ARCHMAP_AF_LSI = 2,
  ARCHMAP_AF_NB = 3,
} ArchmapAf;

typedef enum ArchmapOrigin {
  ARCHMAP_ORIGIN_UNMAPPED = 0,
  ARCHMAP_ORIGIN_INITIAL = 1,
  ARCHMAP_ORIGIN_AUTO = 2,
} ArchmapOrigin;

/**
 * The outcome of one mapping run.
 */
typedef struct ArchmapMapping ArchmapMapping;

/**
 * A loaded, validated system model.
 */
typedef struct ArchmapModel ArchmapModel;

/**
 * Parameters of one mapping run.
 */
typedef struct ArchmapMapOptions {
  enum ArchmapAf af;
  /**
   * Add dependency-derived terms; ignored by the counting function.
   */
  bool cda;
  double phi;
  double omega;
  /**
   * Classifier acceptance threshold.
   */
  double threshold;
  /**
   * Eleven dependency-type weights, or NULL for unit weights.
   */
  const double *weights;
  /**
   * Share of entities in the random ground-truth initial set.
   */
  double initial_fraction;
  uint64_t seed;
} ArchmapMapOptions;

typedef struct ArchmapAssignment {
  /**
   * Module index, or -1 when unmapped.
   */
  int64_t module;
  enum ArchmapOrigin origin;
  /**
   * Winning attraction of an automatic mapping; NaN otherwise.
   */
  double confidence;
} ArchmapAssignment;

typedef struct ArchmapMetrics {
  uint64_t orphans;
  uint64_t auto_mapped;
  uint64_t correct;
  double precision;
  double recall;
  double f1;
} ArchmapMetrics;

typedef struct ArchmapRankSum {
  uint64_t n1;
  uint64_t n2;
  double u;
  double z;
  double p;
  double r;
} ArchmapRankSum;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer
 * stays valid until the next call into this library on the same thread.
 */
const char *archmap_last_error(void);

/**
 * Loads a model file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum ArchmapStatus archmap_model_load(const char *path, struct ArchmapModel **out);

/**
 * Parses a model from JSON text.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a writable pointer.
 */
enum ArchmapStatus archmap_model_from_json(const char *json, struct ArchmapModel **out);

/**
 * # Safety
 * `model` must be NULL or a handle from this library not yet freed.
 */
void archmap_model_free(struct ArchmapModel *model);

/**
 * # Safety
 * `model` must be a live handle.
 */
size_t archmap_model_entity_count(const struct ArchmapModel *model);

/**
 * # Safety
 * `model` must be a live handle.
 */
size_t archmap_model_module_count(const struct ArchmapModel *model);

/**
 * Id of an entity, or NULL when out of range. Owned by the model.
 *
 * # Safety
 * `model` must be a live handle.
 */
const char *archmap_model_entity_id(const struct ArchmapModel *model, size_t entity);

/**
 * Name of a module, or NULL when out of range. Owned by the model.
 *
 * # Safety
 * `model` must be a live handle.
 */
const char *archmap_model_module_name(const struct ArchmapModel *model, size_t module);

/**
 * Options with the command-line defaults for `af`.
 */
struct ArchmapMapOptions archmap_map_options_default(enum ArchmapAf af);

/**
 * Maps the orphans left by a random ground-truth initial set.
 *
 * # Safety
 * `model` must be a live handle, `options` readable (with `weights` NULL
 * or pointing at eleven doubles) and `out` writable.
 */
enum ArchmapStatus archmap_map(const struct ArchmapModel *model,
                               const struct ArchmapMapOptions *options,
                               struct ArchmapMapping **out);

/**
 * # Safety
 * `mapping` must be NULL or a handle from this library not yet freed.
 */
void archmap_mapping_free(struct ArchmapMapping *mapping);

/**
 * # Safety
 * `mapping` must be a live handle and `out` writable.
 */
enum ArchmapStatus archmap_mapping_get(const struct ArchmapMapping *mapping,
                                       size_t entity,
                                       struct ArchmapAssignment *out);

/**
 * Precision, recall and F1 of the automatic mappings.
 *
 * # Safety
 * `mapping` must be a live handle and `out` writable.
 */
enum ArchmapStatus archmap_mapping_metrics(const struct ArchmapMapping *mapping,
                                           struct ArchmapMetrics *out);

/**
 * Engine iterations, the final empty one included.
 *
 * # Safety
 * `mapping` must be a live handle.
 */
size_t archmap_mapping_iterations(const struct ArchmapMapping *mapping);

/**
 * Size of the initial set.
 *
 * # Safety
 * `mapping` must be a live handle.
 */
size_t archmap_mapping_initial_size(const struct ArchmapMapping *mapping);

/**
 * Two-sided rank-sum test of `a` against `b`.
 *
 * # Safety
 * `a` and `b` must point at `na` and `nb` doubles; `out` must be writable.
 */
enum ArchmapStatus archmap_ranksum(const double *a,
                                   size_t na,
                                   const double *b,
                                   size_t nb,
                                   struct ArchmapRankSum *out);

/**
 * Runs `runs` repetitions of the listed functions and writes the results
 * CSV to `out_path`. `threads` of 0 uses the available parallelism.
 *
 * # Safety
 * `model` must be a live handle, `afs` must point at `n_afs` values and
 * `out_path` must be a NUL-terminated string.
 */
enum ArchmapStatus archmap_experiment(const struct ArchmapModel *model,
                                      const enum ArchmapAf *afs,
                                      size_t n_afs,
                                      uint64_t seed,
                                      uint64_t runs,
                                      size_t threads,
                                      const char *out_path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ARCHMAP_H */
