#ifndef STAP_FFI_H
#define STAP_FFI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum StapStatus {
  STAP_STATUS_OK = 0,
  STAP_STATUS_NULL_POINTER = 1,
  /**
   * Bad configuration or argument (CLI exit code 2).
   */
  STAP_STATUS_CONFIG = 2,
  /**
   * Malformed data, shape or I/O problem (CLI exit code 3).
   */
  STAP_STATUS_DATA = 3,
  /**
   * Numerical failure (CLI exit code 4).
   */
  STAP_STATUS_NUMERICAL = 4,
  STAP_STATUS_BUFFER_TOO_SMALL = 5,
  STAP_STATUS_PANIC = 6,
} StapStatus;

/**
 * Dataset loaded into memory.
 */
typedef struct StapDataset StapDataset;

/**
 * Trained network plus the normalization it was trained under.
 */
typedef struct StapModel StapModel;

/**
 * Scenario configuration.
 */
typedef struct StapScenario StapScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the last error message on this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length in bytes.
 */
size_t stap_last_error(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *stap_version(void);

/**
 * The built-in reference scenario.
 */
enum StapStatus stap_scenario_reference(struct StapScenario **out);

/**
 * Parse a scenario from JSON text.
 */
enum StapStatus stap_scenario_from_json(const char *json, struct StapScenario **out);

void stap_scenario_free(struct StapScenario *scenario);

/**
 * Tensor dimensions `(bins, theta, phi)` for this scenario.
 */
enum StapStatus stap_scenario_tensor_shape(const struct StapScenario *scenario, size_t *shape);

/**
 * Calibrate the amplitude scale to the scenario's SCNR target in place.
 */
enum StapStatus stap_scenario_calibrate(struct StapScenario *scenario, uint64_t master_seed);

/**
 * Simulate one example: linear-power tensor into `tensor` and the
 * Cartesian label into `label[3]`.
 */
enum StapStatus stap_simulate_example(const struct StapScenario *scenario,
                                      uint64_t master_seed,
                                      uint64_t id,
                                      double *tensor,
                                      size_t tensor_len_in,
                                      double *label);

/**
 * Peak-cell baseline prediction for a raw tensor laid out `(bin, theta, phi)`.
 */
enum StapStatus stap_baseline_predict(const struct StapScenario *scenario,
                                      const double *tensor,
                                      size_t len,
                                      double *position);

/**
 * Generate a dataset on disk.
 */
enum StapStatus stap_dataset_generate(const struct StapScenario *scenario,
                                      uint64_t master_seed,
                                      size_t n,
                                      const char *dir,
                                      size_t workers,
                                      bool overwrite);

/**
 * Open and verify a dataset directory.
 */
enum StapStatus stap_dataset_open(const char *dir, struct StapDataset **out);

void stap_dataset_free(struct StapDataset *dataset);

enum StapStatus stap_dataset_len(const struct StapDataset *dataset, size_t *len);

/**
 * Copy example `index` (linear power) and its label out of the dataset.
 */
enum StapStatus stap_dataset_example(const struct StapDataset *dataset,
                                     size_t index,
                                     double *tensor,
                                     size_t tensor_len_in,
                                     double *label);

/**
 * Train on the dataset's training split. `epochs` or `batch_size` of 0
 * select the defaults.
 */
enum StapStatus stap_model_train(const struct StapDataset *dataset,
                                 uint64_t seed,
                                 size_t epochs,
                                 size_t batch_size,
                                 struct StapModel **out);

enum StapStatus stap_model_load(const char *path, struct StapModel **out);

enum StapStatus stap_model_save(const struct StapModel *model, const char *path);

void stap_model_free(struct StapModel *model);

/**
 * Predict the target position in meters from a raw linear-power tensor of
 * shape `(5, 26, 21)`.
 */
enum StapStatus stap_model_predict(const struct StapModel *model,
                                   const double *tensor,
                                   size_t len,
                                   double *position);

/**
 * Mean test-split localization error in meters of the model and of the
 * peak-cell baseline.
 */
enum StapStatus stap_evaluate(const struct StapModel *model,
                              const struct StapDataset *dataset,
                              double *err_cnn_m,
                              double *err_mvdr_m);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STAP_FFI_H */
