#ifndef CDMPSL_CDMPSL_H
#define CDMPSL_CDMPSL_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(CDMPSL_BUILDING_LIBRARY)
#    define CDMPSL_API __declspec(dllexport)
#  else
#    define CDMPSL_API __declspec(dllimport)
#  endif
#else
#  define CDMPSL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cdmpsl_status {
  CDMPSL_OK = 0,
  CDMPSL_INVALID_ARGUMENT = 1,
  CDMPSL_UNSUPPORTED_PROBLEM = 2,
  CDMPSL_INVALID_DIMENSION = 3,
  CDMPSL_BOUNDS_VIOLATION = 4,
  CDMPSL_INVALID_DATA = 5,
  CDMPSL_ILL_CONDITIONED = 6,
  CDMPSL_INVALID_STATE = 7,
  CDMPSL_UNSUPPORTED_DIMENSION = 8,
  CDMPSL_PARSE_ERROR = 9,
  CDMPSL_IO_ERROR = 10,
  CDMPSL_ALIGNMENT_ERROR = 11,
  CDMPSL_RUN_FAILED = 12,
  CDMPSL_INTERNAL_ERROR = 99
} cdmpsl_status;

typedef struct cdmpsl_problem cdmpsl_problem;
typedef struct cdmpsl_run_config cdmpsl_run_config;
typedef struct cdmpsl_run_result cdmpsl_run_result;
typedef struct cdmpsl_experiment cdmpsl_experiment;
typedef struct cdmpsl_summary cdmpsl_summary;

/* Message of the last failed call on the calling thread; empty after success. */
CDMPSL_API const char* cdmpsl_last_error(void);
CDMPSL_API const char* cdmpsl_status_string(cdmpsl_status status);
CDMPSL_API const char* cdmpsl_version(void);

/* ---- problems ---- */

CDMPSL_API size_t cdmpsl_problem_count(void);
/* Name of the i-th registered problem, valid until the next registration. */
CDMPSL_API const char* cdmpsl_problem_name(size_t index);

CDMPSL_API cdmpsl_status cdmpsl_problem_create(const char* name, size_t dim, cdmpsl_problem** out);
CDMPSL_API void cdmpsl_problem_destroy(cdmpsl_problem* problem);
CDMPSL_API size_t cdmpsl_problem_dim(const cdmpsl_problem* problem);
CDMPSL_API size_t cdmpsl_problem_objectives(const cdmpsl_problem* problem);
/* x has dim entries, f receives objectives entries. */
CDMPSL_API cdmpsl_status cdmpsl_problem_evaluate(const cdmpsl_problem* problem, const double* x, double* f);

/* Evaluates x (dim entries) into f (objectives entries); nonzero return signals failure. */
typedef int (*cdmpsl_objective_fn)(const double* x, size_t dim, double* f, size_t objectives, void* user);

/* Registers a box-constrained problem of fixed dimension under `name`. lower/upper are
   copied; `user` must outlive every run that uses the problem. */
CDMPSL_API cdmpsl_status cdmpsl_problem_register(const char* name, size_t dim, size_t objectives,
                                                 const double* lower, const double* upper, cdmpsl_objective_fn fn,
                                                 void* user);

/* ---- indicators ---- */

/* rows x objectives, row-major. Exact for objectives in {2, 3}. */
CDMPSL_API cdmpsl_status cdmpsl_hypervolume(const double* points, size_t rows, size_t objectives,
                                            const double* ref, double* out);

/* ---- single runs ---- */

CDMPSL_API cdmpsl_status cdmpsl_run_config_create(cdmpsl_run_config** out);
CDMPSL_API void cdmpsl_run_config_destroy(cdmpsl_run_config* cfg);
/* Keys as in the configuration file (`section.key`), plus `seed` and `variant`. */
CDMPSL_API cdmpsl_status cdmpsl_run_config_set(cdmpsl_run_config* cfg, const char* key, const char* value);

CDMPSL_API cdmpsl_status cdmpsl_run(const cdmpsl_problem* problem, const cdmpsl_run_config* cfg,
                                    cdmpsl_run_result** out);
CDMPSL_API void cdmpsl_run_result_destroy(cdmpsl_run_result* result);

/* Number of hv_curve entries (iterations + 1). */
CDMPSL_API size_t cdmpsl_run_result_length(const cdmpsl_run_result* result);
CDMPSL_API double cdmpsl_run_result_hv(const cdmpsl_run_result* result, size_t index);
CDMPSL_API size_t cdmpsl_run_result_cumulative_fe(const cdmpsl_run_result* result, size_t index);
CDMPSL_API int cdmpsl_run_result_f_cdm(const cdmpsl_run_result* result, size_t index);
CDMPSL_API size_t cdmpsl_run_result_evaluations(const cdmpsl_run_result* result);
CDMPSL_API size_t cdmpsl_run_result_front_size(const cdmpsl_run_result* result);
/* Copies front objective rows (front_size x objectives, row-major). */
CDMPSL_API cdmpsl_status cdmpsl_run_result_front(const cdmpsl_run_result* result, double* out, size_t capacity);

typedef struct cdmpsl_timings {
  double gp_fit;
  double training;
  double conditional;
  double unconditional;
  double genetic;
  double selection;
  double evaluation;
  double total;
} cdmpsl_timings;

CDMPSL_API cdmpsl_timings cdmpsl_run_result_timings(const cdmpsl_run_result* result);

/* Writes history.csv and front.csv into `directory`, creating it if needed. */
CDMPSL_API cdmpsl_status cdmpsl_run_result_write(const cdmpsl_run_result* result, const char* directory,
                                                 int record_wall_time);

/* ---- experiments ---- */

CDMPSL_API cdmpsl_status cdmpsl_experiment_parse(const char* text, cdmpsl_experiment** out);
CDMPSL_API cdmpsl_status cdmpsl_experiment_load(const char* path, cdmpsl_experiment** out);
/* Empty experiment with defaults; problems and seeds must be set before execution. */
CDMPSL_API cdmpsl_status cdmpsl_experiment_create(cdmpsl_experiment** out);
CDMPSL_API void cdmpsl_experiment_destroy(cdmpsl_experiment* exp);
CDMPSL_API cdmpsl_status cdmpsl_experiment_set(cdmpsl_experiment* exp, const char* key, const char* value);
CDMPSL_API cdmpsl_status cdmpsl_experiment_validate(const cdmpsl_experiment* exp);
/* Canonical configuration text. Returns the length; copies up to capacity - 1 bytes. */
CDMPSL_API size_t cdmpsl_experiment_format(const cdmpsl_experiment* exp, char* buffer, size_t capacity);

CDMPSL_API cdmpsl_status cdmpsl_experiment_execute(const cdmpsl_experiment* exp, cdmpsl_summary** out);
CDMPSL_API void cdmpsl_summary_destroy(cdmpsl_summary* summary);

CDMPSL_API size_t cdmpsl_summary_cell_count(const cdmpsl_summary* summary);
CDMPSL_API size_t cdmpsl_summary_failures(const cdmpsl_summary* summary);

typedef struct cdmpsl_cell_info {
  const char* problem;
  size_t dim;
  const char* variant;
  uint64_t seed;
  int ok;
  double final_hv;
  double total_seconds;
  double training_seconds;
  const char* directory;
  const char* error; /* empty when ok */
} cdmpsl_cell_info;

/* Pointers stay valid for the lifetime of the summary. */
CDMPSL_API cdmpsl_status cdmpsl_summary_cell(const cdmpsl_summary* summary, size_t index, cdmpsl_cell_info* out);

typedef struct cdmpsl_median_info {
  const char* problem;
  size_t dim;
  const char* variant;
  double median_final_hv;
  size_t runs;
} cdmpsl_median_info;

CDMPSL_API size_t cdmpsl_summary_median_count(const cdmpsl_summary* summary);
CDMPSL_API cdmpsl_status cdmpsl_summary_median(const cdmpsl_summary* summary, size_t index,
                                               cdmpsl_median_info* out);

/* ---- plotting ---- */

/* Writes an SVG chart to out_path and the aggregated series next to it (.csv). */
CDMPSL_API cdmpsl_status cdmpsl_plot(const char* const* history_paths, size_t count, const char* out_path);

#ifdef __cplusplus
}
#endif

#endif
