#ifndef PRUNEBENCH_H
#define PRUNEBENCH_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result code of every fallible call.
 */
typedef enum PbStatus {
  PB_STATUS_OK = 0,
  PB_STATUS_NULL_POINTER = 1,
  PB_STATUS_INVALID_ARGUMENT = 2,
  PB_STATUS_SHAPE = 3,
  PB_STATUS_IO = 4,
  PB_STATUS_FORMAT = 5,
  PB_STATUS_UNKNOWN_STRATEGY = 6,
  PB_STATUS_EMPTY_DATASET = 7,
  PB_STATUS_PANIC = 8,
} PbStatus;

/**
 * Class grouping of a dataset.
 */
typedef enum PbScheme {
  PB_SCHEME_FULL10 = 0,
  PB_SCHEME_GROUPED5 = 1,
} PbScheme;

/**
 * Opaque labelled dataset handle.
 */
typedef struct PbDataset PbDataset;

/**
 * Opaque network handle.
 */
typedef struct PbNet PbNet;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread; empty if none. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *pb_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *pb_version(void);

/**
 * Builds a preset model (`"big"` or `"small"`).
 *
 * # Safety
 * `preset` must be a NUL-terminated string and `out` a valid pointer.
 */
enum PbStatus pb_net_build(const char *preset, uint64_t seed, struct PbNet **out);

/**
 * Builds a net with explicit layer dims `[input, filters..., classes]`.
 *
 * # Safety
 * `dims` must point to `len` values and `out` must be valid.
 */
enum PbStatus pb_net_from_dims(const size_t *dims, size_t len, uint64_t seed, struct PbNet **out);

/**
 * Releases a net. Null is ignored.
 *
 * # Safety
 * `net` must come from this library and not be used afterwards.
 */
void pb_net_free(struct PbNet *net);

/**
 * Parameter count; `nonzero` skips masked filters and zero weights.
 *
 * # Safety
 * `net` and `out` must be valid.
 */
enum PbStatus pb_net_count_params(const struct PbNet *net, bool nonzero, size_t *out);

/**
 * Number of layers, including the classifier.
 *
 * # Safety
 * `net` and `out` must be valid.
 */
enum PbStatus pb_net_num_layers(const struct PbNet *net, size_t *out);

/**
 * Active filters per layer written into `out[..num_layers]`.
 *
 * # Safety
 * `out` must hold `cap` values.
 */
enum PbStatus pb_net_active_filters(const struct PbNet *net, size_t *out, size_t cap);

/**
 * # Safety
 * `net` must be valid and `path` NUL-terminated.
 */
enum PbStatus pb_net_save(const struct PbNet *net, const char *path);

/**
 * # Safety
 * `path` must be NUL-terminated and `out` valid.
 */
enum PbStatus pb_net_load(const char *path, struct PbNet **out);

/**
 * Logits for `rows` row-major inputs of width `cols`, written to
 * `out[..rows * classes]`.
 *
 * # Safety
 * `x` must hold `rows * cols` values and `out` `out_len` values.
 */
enum PbStatus pb_net_forward(const struct PbNet *net,
                             const float *x,
                             size_t rows,
                             size_t cols,
                             float *out,
                             size_t out_len);

/**
 * Synthetic packet dataset with `per_class` rows per class.
 *
 * # Safety
 * `out` must be valid and `scheme` one of the declared values.
 */
enum PbStatus pb_dataset_synth(size_t per_class,
                               enum PbScheme scheme,
                               uint64_t seed,
                               struct PbDataset **out);

/**
 * Loads a packet CSV and featurizes it.
 *
 * # Safety
 * `path` must be NUL-terminated, `out` valid and `scheme` one of the
 * declared values.
 */
enum PbStatus pb_dataset_load_csv(const char *path, enum PbScheme scheme, struct PbDataset **out);

/**
 * Dataset from row-major features and labels.
 *
 * # Safety
 * `features` must hold `rows * cols` values and `labels` `rows` values.
 */
enum PbStatus pb_dataset_from_arrays(const float *features,
                                     const size_t *labels,
                                     size_t rows,
                                     size_t cols,
                                     size_t classes,
                                     struct PbDataset **out);

/**
 * # Safety
 * `data`, `rows` and `cols` must be valid.
 */
enum PbStatus pb_dataset_shape(const struct PbDataset *data, size_t *rows, size_t *cols);

/**
 * Releases a dataset. Null is ignored.
 *
 * # Safety
 * `data` must come from this library and not be used afterwards.
 */
void pb_dataset_free(struct PbDataset *data);

/**
 * Trains `net` in place for `epochs` epochs. A zero `learning_rate` or
 * `batch_size` keeps the default schedule's value.
 *
 * # Safety
 * `net` and `data` must be valid.
 */
enum PbStatus pb_train(struct PbNet *net,
                       const struct PbDataset *data,
                       size_t epochs,
                       double learning_rate,
                       size_t batch_size,
                       uint64_t seed);

/**
 * Runs one strategy (by snake_case name) and returns a new pruned net.
 *
 * # Safety
 * `net`, `data` and `out` must be valid and `strategy` NUL-terminated.
 */
enum PbStatus pb_prune(const struct PbNet *net,
                       const struct PbDataset *data,
                       const char *strategy,
                       double percent,
                       size_t prune_epochs,
                       uint64_t seed,
                       struct PbNet **out);

/**
 * Macro-averaged F1 of `net` on `data`.
 *
 * # Safety
 * `net`, `data` and `out` must be valid.
 */
enum PbStatus pb_macro_f1(const struct PbNet *net, const struct PbDataset *data, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PRUNEBENCH_H */
