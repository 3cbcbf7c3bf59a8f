#ifndef TVODE_TVODE_H
#define TVODE_TVODE_H

#include <stddef.h>

#if defined(_WIN32)
#  if defined(TVODE_BUILDING_LIBRARY)
#    define TVODE_API __declspec(dllexport)
#  else
#    define TVODE_API __declspec(dllimport)
#  endif
#else
#  define TVODE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. Every function returning tvode_status leaves a message
   retrievable with tvode_last_error() on the calling thread when it fails. */
typedef enum tvode_status {
  TVODE_OK = 0,
  TVODE_INVALID_ARGUMENT = 1,
  TVODE_IO_ERROR,
  TVODE_MALFORMED_HEADER,
  TVODE_UNSUPPORTED_FORMAT,
  TVODE_TRUNCATED_DATA,
  TVODE_RAGGED_ROWS,
  TVODE_NON_NUMERIC_CELL,
  TVODE_INVALID_RECORD,
  TVODE_NETWORK_ERROR,
  TVODE_CHECKSUM_MISMATCH,
  TVODE_GRID_COVERAGE,
  TVODE_NON_FINITE,
  TVODE_INSUFFICIENT_SUPPORT,
  TVODE_SINGULAR_DESIGN,
  TVODE_TOO_FEW_KNOTS,
  TVODE_INSUFFICIENT_WINDOW,
  TVODE_EMPTY_AFTER_TRIM,
  TVODE_MISSING_LEAD,
  TVODE_SINGLE_CLASS,
  TVODE_DEGENERATE_FEATURES,
  TVODE_DIMENSION_MISMATCH,
  TVODE_EMPTY_PAIR,
  TVODE_EMPTY_CLASS,
  TVODE_TOO_FEW_ROWS,
  TVODE_UNKNOWN_LEAD_SET,
  TVODE_INVALID_CONFIG,
  TVODE_SAMPLE_OVERFLOW,
  TVODE_MODEL_FORMAT,
  TVODE_EMPTY_OUTPUT,
  TVODE_INTERNAL = 99
} tvode_status;

TVODE_API const char* tvode_version(void);
TVODE_API const char* tvode_status_name(tvode_status status);
/* Message of the last failure on this thread; "" after success. */
TVODE_API const char* tvode_last_error(void);

/* ---- configuration ---- */

typedef struct tvode_config tvode_config;

TVODE_API tvode_status tvode_config_new(tvode_config** out);
TVODE_API tvode_status tvode_config_load(const char* path, tvode_config** out);
TVODE_API tvode_status tvode_config_set(tvode_config* cfg, const char* key, const char* value);
/* Writes the effective "key=value" lines. *needed receives the length
   including the terminator; buf may be NULL to query it. */
TVODE_API tvode_status tvode_config_text(const tvode_config* cfg, char* buf, size_t cap, size_t* needed);
TVODE_API void tvode_config_free(tvode_config* cfg);

/* ---- records ---- */

typedef struct tvode_record tvode_record;

/* WFDB record ("<base>" or "<base>.hea") or a ".csv" file sampled at csv_fs. */
TVODE_API tvode_status tvode_record_load(const char* path, const char* label, double csv_fs, tvode_record** out);
TVODE_API double tvode_record_fs(const tvode_record* rec);
TVODE_API size_t tvode_record_lead_count(const tvode_record* rec);
TVODE_API size_t tvode_record_sample_count(const tvode_record* rec);
TVODE_API const char* tvode_record_lead_name(const tvode_record* rec, size_t lead);
/* Borrowed pointer to the lead's samples in mV, valid until the record is freed. */
TVODE_API const double* tvode_record_lead_samples(const tvode_record* rec, size_t lead);
TVODE_API void tvode_record_free(tvode_record* rec);

/* ---- classifier ---- */

typedef struct tvode_model tvode_model;

/* Row-major n_rows x n_features matrix; labels holds n_rows strings.
   Uses the first svm.C and svm.gamma values of cfg (defaults when NULL). */
TVODE_API tvode_status tvode_model_train(const double* rows, size_t n_rows, size_t n_features,
                                         const char* const* labels, const tvode_config* cfg, tvode_model** out);
/* The predicted label is copied into label (truncated to cap); decision
   may be NULL. */
TVODE_API tvode_status tvode_model_predict(const tvode_model* model, const double* row, size_t n_features,
                                           char* label, size_t cap, double* decision);
TVODE_API size_t tvode_model_feature_count(const tvode_model* model);
TVODE_API tvode_status tvode_model_save(const tvode_model* model, const char* path);
TVODE_API tvode_status tvode_model_load(const char* path, tvode_model** out);
TVODE_API void tvode_model_free(tvode_model* model);

/* ---- workflow commands ---- */

/* data_dir may be NULL (the manifest's directory). */
TVODE_API tvode_status tvode_featurize(const char* manifest, const tvode_config* cfg, const char* out_dir,
                                       const char* data_dir);
/* task: "binary", "multiclass" or NULL (by label count). lead_sets: NULL
   uses the configuration. groups: optional record_id,subject CSV. */
TVODE_API tvode_status tvode_evaluate(const char* features, const tvode_config* cfg, const char* task,
                                      const char* lead_sets, const char* out_dir, const char* groups);
TVODE_API tvode_status tvode_synth(const char* spec, const char* out_dir);
/* rmse_ode and rmse_spline may be NULL. */
TVODE_API tvode_status tvode_compare_spline(const char* record, const char* lead, const tvode_config* cfg,
                                            const char* out_dir, double* rmse_ode, double* rmse_spline);
/* sha256 may be NULL to skip verification. */
TVODE_API tvode_status tvode_fetch(const char* url, const char* sha256, const char* out_path);

#ifdef __cplusplus
}
#endif

#endif
