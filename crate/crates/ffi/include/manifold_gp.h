#ifndef MANIFOLD_GP_H
#define MANIFOLD_GP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible entry point.
 */
typedef enum {
  MGP_OK = 0,
  MGP_NULL_ARGUMENT = 1,
  MGP_INVALID_UTF8 = 2,
  MGP_IO_ERROR = 3,
  MGP_INVALID_ARGUMENT = 4,
  MGP_RUNTIME_ERROR = 5,
  MGP_PANIC = 6,
} MgpStatus;

/**
 * A loaded dataset, already scaled to the unit hypercube.
 */
typedef struct MgpDataset MgpDataset;

/**
 * One multi-tree mapping from input features to embedding dimensions.
 */
typedef struct MgpIndividual MgpIndividual;

/**
 * A completed evolutionary run: the archived front plus run metadata.
 */
typedef struct MgpRun MgpRun;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread, or null if the
 * last call succeeded. The pointer stays valid until the next failing call
 * on the same thread.
 */
const char *mgp_last_error_message(void);

/**
 * Load a CSV dataset and scale every feature to [0, 1]. `label` selects the
 * class column: "last", "none", or a column name from the header.
 *
 * # Safety
 * `path` and `label` must be valid NUL-terminated strings; `out` must be a
 * valid pointer.
 */
MgpStatus mgp_dataset_load(const char *path, const char *label, MgpDataset **out);

/**
 * Number of rows, or 0 for a null handle.
 */
size_t mgp_dataset_num_instances(const MgpDataset *dataset);

/**
 * Number of feature columns, or 0 for a null handle.
 */
size_t mgp_dataset_num_features(const MgpDataset *dataset);

/**
 * # Safety
 * `dataset` must come from `mgp_dataset_load` and not already be freed.
 */
void mgp_dataset_free(MgpDataset *dataset);

/**
 * Run the multi-objective search. `t_max` of 0 picks the default cap of
 * max(2, ceil(m/2)); the other parameters mirror the command-line flags.
 *
 * # Safety
 * `dataset` must be a live handle; `out` must be a valid pointer.
 */
MgpStatus mgp_evolve(const MgpDataset *dataset,
                     uint64_t seed,
                     size_t generations,
                     size_t population,
                     size_t neighbors_k,
                     size_t t_max,
                     MgpRun **out);

/**
 * Number of points on the archived front, or 0 for a null handle.
 */
size_t mgp_run_front_size(const MgpRun *run);

/**
 * Total offspring evaluations performed (population x generations).
 */
size_t mgp_run_offspring_evaluations(const MgpRun *run);

/**
 * Fetch the tree count and cost of front point `index` (sorted by
 * ascending tree count).
 *
 * # Safety
 * `run` must be a live handle; `out_trees` and `out_cost` must be valid
 * pointers.
 */
MgpStatus mgp_run_front_entry(const MgpRun *run, size_t index, size_t *out_trees, double *out_cost);

/**
 * Clone front point `index` into a standalone individual handle.
 *
 * # Safety
 * `run` must be a live handle; `out` must be a valid pointer.
 */
MgpStatus mgp_run_individual(const MgpRun *run, size_t index, MgpIndividual **out);

/**
 * # Safety
 * `run` must come from `mgp_evolve` and not already be freed.
 */
void mgp_run_free(MgpRun *run);

/**
 * Parse a serialized individual (one prefix-notation tree per line) that
 * reads at most `num_features` input features.
 *
 * # Safety
 * `text` must be a valid NUL-terminated string; `out` must be a valid
 * pointer.
 */
MgpStatus mgp_individual_parse(const char *text, size_t num_features, MgpIndividual **out);

/**
 * Number of trees (embedding dimensions), or 0 for a null handle.
 */
size_t mgp_individual_num_trees(const MgpIndividual *individual);

/**
 * Serialize the individual to its text form. The returned string is owned
 * by the caller and must be released with `mgp_string_free`. Returns null
 * for a null handle.
 *
 * # Safety
 * `individual` must be a live handle.
 */
char *mgp_individual_serialize(const MgpIndividual *individual);

/**
 * Map a dataset through the individual. On success `*out_values` holds a
 * freshly allocated row-major matrix of `num_instances x num_trees` values;
 * release it with `mgp_buffer_free(*out_values, *out_len)`.
 *
 * # Safety
 * `individual` and `dataset` must be live handles; the out pointers must be
 * valid.
 */
MgpStatus mgp_individual_apply(const MgpIndividual *individual,
                               const MgpDataset *dataset,
                               double **out_values,
                               size_t *out_len);

/**
 * # Safety
 * `individual` must come from `mgp_run_individual` or
 * `mgp_individual_parse` and not already be freed.
 */
void mgp_individual_free(MgpIndividual *individual);

/**
 * # Safety
 * `buffer` must come from `mgp_individual_apply` with the matching `len`.
 */
void mgp_buffer_free(double *buffer, size_t len);

/**
 * # Safety
 * `s` must come from `mgp_individual_serialize` and not already be freed.
 */
void mgp_string_free(char *s);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* MANIFOLD_GP_H */
