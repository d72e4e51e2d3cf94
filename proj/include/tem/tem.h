/* C interface to the tracking effort toolkit. Every function returns a
 * tem_status; on failure tem_last_error() describes what went wrong on the
 * calling thread. Objects handed out through pointers are owned by the
 * caller and released with the matching *_free function. */
#ifndef TEM_TEM_H
#define TEM_TEM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define TEM_API __declspec(dllexport)
#else
#define TEM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tem_status {
  TEM_OK = 0,
  TEM_ERR_INVALID_ARGUMENT = 1,
  TEM_ERR_IO = 2,
  TEM_ERR_PARSE = 3,
  TEM_ERR_UNDEFINED = 4,
  TEM_ERR_RUN_FAILED = 5,
  TEM_ERR_INTERNAL = 6
} tem_status;

typedef struct tem_bundle tem_bundle;
typedef struct tem_result tem_result;

/* Receives non-fatal notes (clamped values, single-frame sequences, ...). */
typedef void (*tem_warning_fn)(const char* message, void* user);

TEM_API const char* tem_version(void);
TEM_API const char* tem_status_name(tem_status status);
/* Message of the last failure on this thread; "" after a success. */
TEM_API const char* tem_last_error(void);
/* Process-wide; pass NULL to drop warnings. */
TEM_API void tem_set_warning_handler(tem_warning_fn fn, void* user);
TEM_API void tem_string_free(char* text);

/* Ground-truth filter. gt_classes == NULL keeps the default (class 1);
 * all_classes != 0 accepts every class. */
typedef struct tem_gt_filter {
  const int* gt_classes;
  size_t gt_class_count;
  int all_classes;
  double min_visibility;
  int require_flag;
} tem_gt_filter;

typedef struct tem_eval_options {
  double alpha;
  double iou_threshold;
  tem_gt_filter filter;
  int intersect_ids; /* 0: union of identity sets, 1: intersection */
} tem_eval_options;

TEM_API void tem_gt_filter_init(tem_gt_filter* filter);
TEM_API void tem_eval_options_init(tem_eval_options* options);

/* seqinfo_path supplies the frame count and image size. */
TEM_API tem_status tem_bundle_load(const char* gt_path, const char* det_path, const char* track_path,
                                   const char* seqinfo_path, tem_bundle** out);
TEM_API int tem_bundle_frame_count(const tem_bundle* bundle);
TEM_API void tem_bundle_free(tem_bundle* bundle);

typedef struct tem_scores {
  double e_intra;
  double e_inter;
  double alpha;
  double tem;
  double ap50;
  double precision;
  double recall;
  uint64_t tp;
  uint64_t fp;
  uint64_t fn;
  int has_mota; /* 0 when the ground truth is empty */
  double mota;
  double motp;
  double idf1;
  double ata;
  uint64_t idsw;
} tem_scores;

typedef struct tem_frame_scores {
  int frame;
  double detector_quality;
  double tracker_quality;
  double e_intra;
  int has_inter; /* 0 on the first frame */
  double association_gain;
  double cardinality_weight;
  double idsw_score;
  double e_inter;
} tem_frame_scores;

TEM_API tem_status tem_evaluate(const tem_bundle* bundle, const tem_eval_options* options, tem_result** out);
TEM_API tem_status tem_result_scores(const tem_result* result, tem_scores* out);
TEM_API size_t tem_result_frame_count(const tem_result* result);
TEM_API tem_status tem_result_frame(const tem_result* result, size_t index, tem_frame_scores* out);
/* Per-frame component table as CSV; free with tem_string_free. */
TEM_API tem_status tem_result_frame_csv(const tem_result* result, char** out);
TEM_API void tem_result_free(tem_result* result);

/* Command-line values that take precedence over the manifest. */
typedef struct tem_manifest_overrides {
  int has_alpha;
  double alpha;
  int has_iou_threshold;
  double iou_threshold;
  int has_gt_classes;
  const int* gt_classes;
  size_t gt_class_count; /* 0 with has_gt_classes: every class */
  int has_min_visibility;
  double min_visibility;
  int has_require_flag;
  int require_flag;
  int has_intersect_ids;
  int intersect_ids;
  int has_jobs;
  int jobs;
  int has_continue_on_error;
  int continue_on_error;
  int has_mean_rows;
  int mean_rows;
  const char* output_dir; /* NULL: from the manifest */
} tem_manifest_overrides;

TEM_API void tem_manifest_overrides_init(tem_manifest_overrides* overrides);

typedef struct tem_run_summary {
  size_t runs_ok;
  size_t runs_failed;
} tem_run_summary;

/* Evaluates every run in a manifest and writes scores.csv and frames/.
 * Returns TEM_ERR_RUN_FAILED when any run failed. summary may be NULL. */
TEM_API tem_status tem_run_manifest(const char* manifest_path, const tem_manifest_overrides* overrides,
                                    tem_run_summary* summary);

/* profile: a built-in name (P1..P5), or a name looked up in profile_file
 * under [profile.<name>]. has_seed overrides the profile's seed. */
TEM_API tem_status tem_perturb_file(const char* gt_path, const char* seqinfo_path, const char* profile,
                                    const char* profile_file, int has_seed, uint64_t seed,
                                    const tem_gt_filter* filter, const char* out_path);

/* config: a preset name (sort, interp, permissive), or a name looked up in
 * config_file under [tracker.<name>]. */
TEM_API tem_status tem_track_file(const char* det_path, const char* seqinfo_path, const char* config,
                                  const char* config_file, const char* out_path);

/* Writes correlation.csv and correlation.svg into out_dir. */
TEM_API tem_status tem_correlate_file(const char* scores_csv, const char* out_dir);

/* Renders a score table as text; free with tem_string_free. */
TEM_API tem_status tem_report_file(const char* scores_csv, char** out);

typedef struct tem_simulation {
  int sequences;
  int frames;
  int objects;
  uint64_t seed;
} tem_simulation;

TEM_API void tem_simulation_init(tem_simulation* spec);
/* Writes a synthetic dataset with all built-in profiles and the sort and
 * interp trackers. *manifest_path receives the manifest location; free it
 * with tem_string_free. manifest_path may be NULL. */
TEM_API tem_status tem_simulate_dataset(const char* out_dir, const tem_simulation* spec, char** manifest_path);

#ifdef __cplusplus
}
#endif

#endif /* TEM_TEM_H */
