#ifndef GLAD_GLAD_H_
#define GLAD_GLAD_H_

#include <stddef.h>
#include <stdint.h>

#if defined(GLAD_BUILDING_LIBRARY)
#define GLAD_API __attribute__((visibility("default")))
#else
#define GLAD_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum glad_status {
  GLAD_OK = 0,
  GLAD_ERR_USAGE = 1,          /* bad argument or configuration */
  GLAD_ERR_NOT_CONVERGED = 2,  /* reserved for callers; fits report via glad_fit_converged */
  GLAD_ERR_NUMERIC = 3,        /* non-finite objective or sampler state */
  GLAD_ERR_IO = 4,             /* file cannot be opened, read or written */
  GLAD_ERR_FORMAT = 5,         /* file content does not match the expected format */
  GLAD_ERR_INTERNAL = 6
} glad_status;

typedef struct glad_config glad_config;
typedef struct glad_truth glad_truth;
typedef struct glad_fit glad_fit;
typedef struct glad_report glad_report;

typedef enum glad_dataset_kind {
  GLAD_DATASET_STATIC = 0,
  GLAD_DATASET_ACTIVITY = 1,
  GLAD_DATASET_DYNAMIC = 2
} glad_dataset_kind;

typedef struct glad_metrics {
  double accuracy;
  double precision;
  double recall;
  double f1;
} glad_metrics;

/* Message of the last failed call on this thread ("" when none). */
GLAD_API const char* glad_last_error(void);
GLAD_API const char* glad_status_name(glad_status status);

/* ---- configuration: key=value with registered defaults ---- */
GLAD_API glad_status glad_config_new(glad_config** out);
GLAD_API glad_status glad_config_parse(const char* text, glad_config** out);
GLAD_API glad_status glad_config_load(const char* path, glad_config** out);
GLAD_API glad_status glad_config_set(glad_config* config, const char* key, const char* value);
/* Effective value; the string lives until the next call on this handle. */
GLAD_API glad_status glad_config_get(glad_config* config, const char* key, const char** value);
/* Every key with its effective value, sorted, one "key=value" per line. */
GLAD_API glad_status glad_config_resolved(glad_config* config, const char** text);
GLAD_API void glad_config_free(glad_config* config);

/* ---- datasets ---- */
/* Writes the dataset selected by "mode", truth.json and config.resolved.txt. */
GLAD_API glad_status glad_generate(const glad_config* config, const char* out_dir);
GLAD_API glad_status glad_dataset_detect(const char* dir, glad_dataset_kind* kind);

GLAD_API glad_status glad_truth_read(const char* path, glad_truth** out);
GLAD_API size_t glad_truth_num_anomalous(const glad_truth* truth);
GLAD_API glad_status glad_truth_anomalous(const glad_truth* truth, int* groups, size_t capacity);
GLAD_API void glad_truth_free(glad_truth* truth);

/* ---- fitting ---- */
/* model: "glad", "glad0" or "dglad". Non-convergence is not an error. */
GLAD_API glad_status glad_fit_run(const char* model, const char* data_dir,
                                  const glad_config* config, glad_fit** out);
GLAD_API glad_status glad_fit_write(const glad_fit* fit, const char* out_dir);
GLAD_API glad_status glad_fit_read(const char* fit_dir, glad_fit** out);
GLAD_API const char* glad_fit_model(const glad_fit* fit);
GLAD_API int glad_fit_converged(const glad_fit* fit);
GLAD_API size_t glad_fit_num_nodes(const glad_fit* fit);
GLAD_API size_t glad_fit_num_groups(const glad_fit* fit);
GLAD_API size_t glad_fit_trace_length(const glad_fit* fit);
/* Copy min(capacity, length) values. */
GLAD_API glad_status glad_fit_trace(const glad_fit* fit, double* values, size_t capacity);
GLAD_API glad_status glad_fit_grouping(const glad_fit* fit, int* groups, size_t capacity);
GLAD_API size_t glad_fit_num_warnings(const glad_fit* fit);
GLAD_API const char* glad_fit_warning(const glad_fit* fit, size_t index);
GLAD_API void glad_fit_free(glad_fit* fit);

/* ---- scoring ---- */
/* truth may be NULL. */
GLAD_API glad_status glad_score(const glad_fit* fit, const glad_config* config,
                                const glad_truth* truth, glad_report** out);
GLAD_API glad_status glad_report_write(const glad_report* report, const char* out_dir,
                                       const char* method);
/* JSON text; lives until the handle is freed. */
GLAD_API glad_status glad_report_json(glad_report* report, const char** json);
GLAD_API glad_status glad_report_from_json(const char* json, glad_report** out);
GLAD_API int glad_report_equal(const glad_report* a, const glad_report* b);
GLAD_API size_t glad_report_num_groups(const glad_report* report);
GLAD_API glad_status glad_report_scores(const glad_report* report, double* scores, size_t capacity);
GLAD_API size_t glad_report_num_flagged(const glad_report* report);
GLAD_API glad_status glad_report_flagged(const glad_report* report, int* groups, size_t capacity);
GLAD_API size_t glad_report_num_alarms(const glad_report* report);
GLAD_API size_t glad_report_fpr_length(const glad_report* report);
/* GLAD_ERR_USAGE when the report has no metrics (no truth). */
GLAD_API glad_status glad_report_metrics(const glad_report* report, glad_metrics* metrics);
GLAD_API void glad_report_free(glad_report* report);

/* ---- benchmark ---- */
/* threads <= 0 means one worker. failed_cells may be NULL. */
GLAD_API glad_status glad_benchmark(const glad_config* config, const char* out_dir, int threads,
                                    int* failed_cells);

#ifdef __cplusplus
}
#endif

#endif /* GLAD_GLAD_H_ */
