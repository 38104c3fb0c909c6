/*
 * C interface to the asbart library.
 *
 * Every function that can fail returns an asbart_status. On failure a
 * description is available from asbart_last_error() on the same thread until
 * the next failing call. Handles are opaque; each has a matching free
 * function that accepts NULL.
 */
#ifndef ASBART_ASBART_H
#define ASBART_ASBART_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(ASBART_BUILDING_LIBRARY)
#define ASBART_API __declspec(dllexport)
#else
#define ASBART_API __declspec(dllimport)
#endif
#else
#define ASBART_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum asbart_status {
  ASBART_OK = 0,
  ASBART_ERR_INVALID_ARGUMENT = 1,
  ASBART_ERR_STRUCTURE = 2,
  ASBART_ERR_NUMERICAL = 3,
  ASBART_ERR_IO = 4,
  ASBART_ERR_PARSE = 5,
  ASBART_ERR_SCHEMA = 6,
  ASBART_ERR_VERSION = 7,
  ASBART_ERR_INTERNAL = 99
} asbart_status;

typedef enum asbart_gate { ASBART_GATE_HARD = 0, ASBART_GATE_SIGMOID = 1, ASBART_GATE_LINEAR = 2 } asbart_gate;

typedef enum asbart_noise { ASBART_NOISE_HIGH = 0, ASBART_NOISE_LOW = 1 } asbart_noise;

typedef struct asbart_dataset asbart_dataset;
typedef struct asbart_model asbart_model;
typedef struct asbart_bench_report asbart_bench_report;

typedef struct asbart_fit_config {
  int num_trees;
  int sweeps;
  int burn_in;
  asbart_gate gate;
  double grid_max_percent; /* grid is 0, 1, ..., floor(grid_max_percent) */
  uint64_t seed;
  int max_depth;
  size_t min_node_size;
} asbart_fit_config;

typedef struct asbart_fit_summary {
  int sweeps;
  size_t retained;
  double final_sigma2;
  double seconds;
  size_t proposals;
  size_t accepted;
  double mean_tau; /* mean tree bandwidth after the last sweep */
  int hard_mode;   /* nonzero when the searched grid is {0} */
} asbart_fit_summary;

typedef struct asbart_bench_config {
  size_t n;
  int reps;
  asbart_noise noise;
  uint64_t seed;
  const char* methods; /* comma-separated labels; NULL for the default set */
  int num_trees;
  unsigned workers; /* 0: all hardware threads, capped by ASBART_WORKERS */
  int record_timing;
} asbart_bench_config;

/* Message for the most recent failure on this thread ("" if none). */
ASBART_API const char* asbart_last_error(void);
ASBART_API const char* asbart_status_name(asbart_status status);
ASBART_API const char* asbart_version(void);

/* Redirects library warnings. NULL restores printing to stderr. */
typedef void (*asbart_warning_fn)(const char* message, void* user);
ASBART_API void asbart_set_warning_handler(asbart_warning_fn fn, void* user);

/* ---- datasets ---------------------------------------------------------- */

/* schema_path may be NULL: every column except `target` is then ordinal.
 * `target` is ignored when a schema file is given. When require_target is
 * zero a missing target column is accepted (prediction inputs). */
ASBART_API asbart_status asbart_dataset_load_csv(const char* path, const char* schema_path, const char* target,
                                                 int require_target, asbart_dataset** out);
/* Friedman data with 20 features named x1..x20 and target y. */
ASBART_API asbart_status asbart_dataset_friedman(size_t n, asbart_noise noise, uint64_t seed, asbart_dataset** out);
ASBART_API asbart_status asbart_dataset_write_csv(const asbart_dataset* data, const char* path);
ASBART_API size_t asbart_dataset_rows(const asbart_dataset* data);
ASBART_API size_t asbart_dataset_cols(const asbart_dataset* data);
ASBART_API int asbart_dataset_has_target(const asbart_dataset* data);
/* Copies the noiseless function values of a Friedman dataset into `out`
 * (length rows). Fails for datasets read from files. */
ASBART_API asbart_status asbart_dataset_truth(const asbart_dataset* data, double* out, size_t len);
ASBART_API void asbart_dataset_free(asbart_dataset* data);

/* ---- fitting and prediction -------------------------------------------- */

ASBART_API void asbart_fit_config_init(asbart_fit_config* config);
ASBART_API asbart_status asbart_fit(const asbart_dataset* data, const asbart_fit_config* config, asbart_model** out);
ASBART_API asbart_status asbart_model_summary(const asbart_model* model, asbart_fit_summary* out);
/* Writes min(len, sweeps) trace values; returns the full length via *count. */
ASBART_API asbart_status asbart_model_sigma2_trace(const asbart_model* model, double* out, size_t len, size_t* count);
ASBART_API size_t asbart_model_num_features(const asbart_model* model);

ASBART_API asbart_status asbart_model_save(const asbart_model* model, const char* path);
ASBART_API asbart_status asbart_model_load(const char* path, asbart_model** out);
/* Reads a CSV keyed by the model's training column names. */
ASBART_API asbart_status asbart_model_load_data_csv(const asbart_model* model, const char* path, asbart_dataset** out);
/* Posterior-mean predictions, one per dataset row. */
ASBART_API asbart_status asbart_predict(const asbart_model* model, const asbart_dataset* data, double* out, size_t len);
/* Writes "row_index,prediction" rows (0-based index). */
ASBART_API asbart_status asbart_write_predictions_csv(const double* predictions, size_t len, const char* path);
ASBART_API void asbart_model_free(asbart_model* model);

/* ---- benchmark --------------------------------------------------------- */

ASBART_API void asbart_bench_config_init(asbart_bench_config* config);
ASBART_API asbart_status asbart_bench_run(const asbart_bench_config* config, asbart_bench_report** out);
/* Both strings are owned by the report. */
ASBART_API const char* asbart_bench_csv(const asbart_bench_report* report);
ASBART_API const char* asbart_bench_summary(const asbart_bench_report* report);
ASBART_API size_t asbart_bench_num_methods(const asbart_bench_report* report);
ASBART_API const char* asbart_bench_method(const asbart_bench_report* report, size_t index);
/* Per-replication RMSE and seconds of one method (length reps). */
ASBART_API asbart_status asbart_bench_method_results(const asbart_bench_report* report, const char* method,
                                                     double* rmse, double* seconds, size_t len);
ASBART_API void asbart_bench_report_free(asbart_bench_report* report);

/* Writes `contents` to `path` through a temporary sibling and a rename. */
ASBART_API asbart_status asbart_write_text_file(const char* path, const char* contents);

#ifdef __cplusplus
}
#endif

#endif
