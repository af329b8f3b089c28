/* C interface to the blockdual distributed dual ERM solver. */

#ifndef BLOCKDUAL_H
#define BLOCKDUAL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Loss families.
 */
typedef enum {
  BD_LOSS_L1_SVM = 0,
  BD_LOSS_L2_SVM = 1,
  BD_LOSS_LOGISTIC = 2,
  BD_LOSS_SVR = 3,
  BD_LOSS_L2_SVR = 4,
  BD_LOSS_LEAST_SQUARES = 5,
} BdLoss;

/**
 * Step-size regimes.
 */
typedef enum {
  BD_ALGO_BDA_EXACT_LS = 0,
  BD_ALGO_BDA_BACKTRACK = 1,
  BD_ALGO_DISDCA_PRACTICAL = 2,
  BD_ALGO_DSVM_AVE = 3,
  BD_ALGO_PROX_GRAD = 4,
} BdAlgo;

/**
 * Status codes returned by every fallible function.
 */
typedef enum {
  BD_STATUS_OK = 0,
  BD_STATUS_NULL_ARGUMENT = 1,
  BD_STATUS_INVALID_UTF8 = 2,
  BD_STATUS_IO_ERROR = 3,
  BD_STATUS_PARSE_ERROR = 4,
  BD_STATUS_INVALID_CONFIG = 5,
  BD_STATUS_UNSUPPORTED = 6,
  BD_STATUS_LINE_SEARCH_FAILED = 7,
  BD_STATUS_INTERNAL_ERROR = 8,
} BdStatus;

/**
 * Opaque dataset handle: a parsed LIBSVM file.
 */
typedef struct BdDataset BdDataset;

/**
 * Opaque result handle: pocket solution, trace, and counters.
 */
typedef struct BdResult BdResult;

/**
 * Solver configuration. Build one with `bd_config_default` and adjust
 * fields as needed; `a1`/`a2` left as NaN resolve to the algorithm's
 * defaults when the solve starts.
 */
typedef struct {
  BdLoss loss;
  /**
   * Loss weight, must be positive.
   */
  double c;
  /**
   * Insensitivity width for the SVR losses.
   */
  double eps;
  BdAlgo algo;
  /**
   * Number of simulated workers, at least 1.
   */
  uint32_t k;
  /**
   * Block-model scaling; NaN means "algorithm default".
   */
  double a1;
  /**
   * Damping term; NaN means "algorithm default".
   */
  double a2;
  /**
   * Armijo sufficient-decrease fraction, in (0, 1).
   */
  double tau;
  /**
   * Backtracking shrink factor, in (0, 1).
   */
  double beta;
  /**
   * RPCD passes per outer iteration.
   */
  uint64_t local_epochs;
  /**
   * Relative duality-gap stopping threshold.
   */
  double stop_eps;
  uint64_t max_iter;
  uint32_t max_backtracks;
  uint64_t seed;
} BdConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread, or null.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *bd_last_error_message(void);

/**
 * Library version as a static string.
 */
const char *bd_version(void);

/**
 * Default configuration for a loss/algorithm pair: `a1`/`a2` are NaN
 * (resolved to the algorithm defaults at solve time), `tau` = 0.01,
 * `beta` = 0.5, one local epoch, `stop_eps` = 1e-3, 1000 iterations.
 */
BdConfig bd_config_default(BdLoss loss, BdAlgo algo, uint32_t k, double c);

/**
 * Parses a LIBSVM file into a new dataset handle.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string; `out` must be a valid
 * pointer. On success `*out` owns the dataset and must be released with
 * `bd_dataset_free`.
 */
BdStatus bd_dataset_load_libsvm(const char *path, BdDataset **out);

/**
 * Parses LIBSVM-format text from memory into a new dataset handle.
 *
 * # Safety
 * `text` must be a valid NUL-terminated string; `out` must be a valid
 * pointer. See `bd_dataset_load_libsvm` for ownership.
 */
BdStatus bd_dataset_parse(const char *text, BdDataset **out);

/**
 * Releases a dataset handle. Null is a no-op.
 *
 * # Safety
 * `ds` must be a pointer returned by a dataset constructor, not yet freed.
 */
void bd_dataset_free(BdDataset *ds);

/**
 * Feature dimension of the dataset (0 for null).
 *
 * # Safety
 * `ds` must be null or a live dataset handle.
 */
size_t bd_dataset_num_features(const BdDataset *ds);

/**
 * Number of instances (dual coordinates) in the dataset (0 for null).
 *
 * # Safety
 * `ds` must be null or a live dataset handle.
 */
size_t bd_dataset_num_instances(const BdDataset *ds);

/**
 * Number of stored non-zero entries (0 for null).
 *
 * # Safety
 * `ds` must be null or a live dataset handle.
 */
size_t bd_dataset_nnz(const BdDataset *ds);

/**
 * Trains on the dataset with the given configuration and returns a result
 * handle.
 *
 * # Safety
 * `ds` must be a live dataset handle, `config` and `out` valid pointers.
 * On success `*out` owns the result and must be released with
 * `bd_result_free`.
 */
BdStatus bd_solve(const BdDataset *ds, const BdConfig *config, BdResult **out);

/**
 * Releases a result handle. Null is a no-op.
 *
 * # Safety
 * `res` must be a pointer returned by `bd_solve`, not yet freed.
 */
void bd_result_free(BdResult *res);

/**
 * Final dual objective value (NaN for null).
 *
 * # Safety
 * `res` must be null or a live result handle.
 */
double bd_result_final_dual(const BdResult *res);

/**
 * Primal objective of the pocket solution (NaN for null).
 *
 * # Safety
 * `res` must be null or a live result handle.
 */
double bd_result_pocket_primal(const BdResult *res);

/**
 * 1 when the stopping test was met, 0 otherwise.
 *
 * # Safety
 * `res` must be null or a live result handle.
 */
int32_t bd_result_converged(const BdResult *res);

/**
 * Outer iterations performed.
 *
 * # Safety
 * `res` must be null or a live result handle.
 */
uint64_t bd_result_iterations(const BdResult *res);

/**
 * Total reduction rounds (vector plus scalar).
 *
 * # Safety
 * `res` must be null or a live result handle.
 */
uint64_t bd_result_rounds(const BdResult *res);

/**
 * Total bytes exchanged by the simulated reductions.
 *
 * # Safety
 * `res` must be null or a live result handle.
 */
uint64_t bd_result_bytes(const BdResult *res);

/**
 * Borrows the pocket weight vector. The pointer is owned by the result
 * handle and stays valid until `bd_result_free`.
 *
 * # Safety
 * `res` must be a live result handle; `out_ptr` and `out_len` must be
 * valid pointers.
 */
BdStatus bd_result_weights(const BdResult *res, const double **out_ptr, size_t *out_len);

/**
 * Writes the per-iteration trace as CSV.
 *
 * # Safety
 * `res` must be a live result handle; `path` a valid NUL-terminated
 * string.
 */
BdStatus bd_result_write_trace_csv(const BdResult *res, const char *path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BLOCKDUAL_H */
