#include "tem/tem.h"

#include <cstdlib>
#include <cstring>
#include <mutex>
#include <new>
#include <string>

#include "tem/error.hpp"
#include "tem/kvconfig.hpp"
#include "tem/pipeline.hpp"

struct tem_bundle {
  tem::EvaluationBundle bundle;
};

struct tem_result {
  tem::RunResult run;
};

namespace {

thread_local std::string last_error;

std::mutex warning_mutex;
tem_warning_fn warning_fn = nullptr;
void* warning_user = nullptr;

void emit_warning(const std::string& message) {
  std::lock_guard lock(warning_mutex);
  if (warning_fn) warning_fn(message.c_str(), warning_user);
}

tem_status fail(tem_status status, std::string message) {
  last_error = std::move(message);
  return status;
}

tem_status status_of(tem::ErrorCode code) {
  switch (code) {
    case tem::ErrorCode::kInvalidArgument: return TEM_ERR_INVALID_ARGUMENT;
    case tem::ErrorCode::kIo: return TEM_ERR_IO;
    case tem::ErrorCode::kParse: return TEM_ERR_PARSE;
    case tem::ErrorCode::kUndefined: return TEM_ERR_UNDEFINED;
    case tem::ErrorCode::kRunFailed: return TEM_ERR_RUN_FAILED;
  }
  return TEM_ERR_INTERNAL;
}

template <typename F>
tem_status guarded(F&& body) {
  try {
    last_error.clear();
    return body();
  } catch (const tem::Error& e) {
    return fail(status_of(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(TEM_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(TEM_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(TEM_ERR_INTERNAL, "unknown error");
  }
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

bool blank(const char* s) { return s == nullptr || *s == '\0'; }

tem::GroundTruthFilter to_filter(const tem_gt_filter* f) {
  tem::GroundTruthFilter out;
  if (!f) return out;
  if (f->all_classes) {
    out.allowed_classes.clear();
  } else if (f->gt_classes) {
    out.allowed_classes = std::set<int>(f->gt_classes, f->gt_classes + f->gt_class_count);
  }
  out.min_visibility = f->min_visibility;
  out.require_flag = f->require_flag != 0;
  return out;
}

std::optional<std::filesystem::path> optional_path(const char* s) {
  if (blank(s)) return std::nullopt;
  return std::filesystem::path(s);
}

}  // namespace

extern "C" {

const char* tem_version(void) { return "1.0.0"; }

const char* tem_status_name(tem_status status) {
  switch (status) {
    case TEM_OK: return "ok";
    case TEM_ERR_INVALID_ARGUMENT: return "invalid argument";
    case TEM_ERR_IO: return "i/o error";
    case TEM_ERR_PARSE: return "parse error";
    case TEM_ERR_UNDEFINED: return "undefined";
    case TEM_ERR_RUN_FAILED: return "run failed";
    case TEM_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* tem_last_error(void) { return last_error.c_str(); }

void tem_set_warning_handler(tem_warning_fn fn, void* user) {
  std::lock_guard lock(warning_mutex);
  warning_fn = fn;
  warning_user = user;
}

void tem_string_free(char* text) { std::free(text); }

void tem_gt_filter_init(tem_gt_filter* filter) {
  if (!filter) return;
  const tem::GroundTruthFilter d;
  *filter = tem_gt_filter{nullptr, 0, 0, d.min_visibility, d.require_flag ? 1 : 0};
}

void tem_eval_options_init(tem_eval_options* options) {
  if (!options) return;
  const tem::EvaluationOptions d;
  options->alpha = d.alpha;
  options->iou_threshold = d.iou_threshold;
  tem_gt_filter_init(&options->filter);
  options->intersect_ids = 0;
}

tem_status tem_bundle_load(const char* gt_path, const char* det_path, const char* track_path,
                           const char* seqinfo_path, tem_bundle** out) {
  return guarded([&] {
    if (!out) return fail(TEM_ERR_INVALID_ARGUMENT, "output handle is null");
    *out = nullptr;
    if (blank(gt_path) || blank(det_path) || blank(track_path) || blank(seqinfo_path)) {
      return fail(TEM_ERR_INVALID_ARGUMENT, "ground-truth, detection, track and seqinfo paths are all required");
    }
    auto handle = std::make_unique<tem_bundle>();
    handle->bundle = tem::load_bundle(gt_path, det_path, track_path, std::filesystem::path(seqinfo_path));
    *out = handle.release();
    return TEM_OK;
  });
}

int tem_bundle_frame_count(const tem_bundle* bundle) { return bundle ? bundle->bundle.meta.frame_count : 0; }

void tem_bundle_free(tem_bundle* bundle) { delete bundle; }

tem_status tem_evaluate(const tem_bundle* bundle, const tem_eval_options* options, tem_result** out) {
  return guarded([&] {
    if (!bundle || !out) return fail(TEM_ERR_INVALID_ARGUMENT, "bundle and output handle are required");
    *out = nullptr;
    tem::EvaluationOptions opts;
    if (options) {
      opts.alpha = options->alpha;
      opts.iou_threshold = options->iou_threshold;
      opts.gt_filter = to_filter(&options->filter);
      opts.id_mode = options->intersect_ids ? tem::IdSetMode::kIntersection : tem::IdSetMode::kUnion;
    }
    auto handle = std::make_unique<tem_result>();
    handle->run = tem::evaluate_bundle(bundle->bundle, opts, tem::RunKey{bundle->bundle.meta.name, "", ""});
    for (const auto& w : bundle->bundle.warnings) emit_warning(w);
    for (const auto& w : handle->run.tem.warnings) emit_warning(w);
    *out = handle.release();
    return TEM_OK;
  });
}

tem_status tem_result_scores(const tem_result* result, tem_scores* out) {
  if (!result || !out) return fail(TEM_ERR_INVALID_ARGUMENT, "result and output are required");
  const auto& t = result->run.tem;
  const auto& b = result->run.baselines;
  *out = tem_scores{};
  out->e_intra = t.e_intra;
  out->e_inter = t.e_inter;
  out->alpha = t.alpha;
  out->tem = t.tem;
  out->ap50 = b.ap50;
  out->precision = b.precision;
  out->recall = b.recall;
  out->tp = b.counts.tp;
  out->fp = b.counts.fp;
  out->fn = b.counts.fn;
  out->has_mota = b.mota.has_value() ? 1 : 0;
  out->mota = b.mota.value_or(0.0);
  out->motp = b.motp.value_or(0.0);
  out->idf1 = b.idf1;
  out->ata = b.ata;
  out->idsw = b.idsw_total;
  last_error.clear();
  return TEM_OK;
}

size_t tem_result_frame_count(const tem_result* result) {
  return result ? result->run.tem.per_frame_intra.size() : 0;
}

tem_status tem_result_frame(const tem_result* result, size_t index, tem_frame_scores* out) {
  if (!result || !out) return fail(TEM_ERR_INVALID_ARGUMENT, "result and output are required");
  const auto& t = result->run.tem;
  if (index >= t.per_frame_intra.size()) {
    return fail(TEM_ERR_INVALID_ARGUMENT, "frame index " + std::to_string(index) + " out of range");
  }
  const auto& intra = t.per_frame_intra[index];
  *out = tem_frame_scores{};
  out->frame = intra.frame;
  out->detector_quality = intra.detector.quality;
  out->tracker_quality = intra.tracker.quality;
  out->e_intra = intra.effort;
  if (index >= 1 && index - 1 < t.per_frame_inter.size()) {
    const auto& inter = t.per_frame_inter[index - 1];
    out->has_inter = 1;
    out->association_gain = inter.association_gain;
    out->cardinality_weight = inter.cardinality_weight;
    out->idsw_score = inter.idsw_score;
    out->e_inter = inter.effort;
  }
  last_error.clear();
  return TEM_OK;
}

tem_status tem_result_frame_csv(const tem_result* result, char** out) {
  return guarded([&] {
    if (!result || !out) return fail(TEM_ERR_INVALID_ARGUMENT, "result and output are required");
    *out = copy_string(tem::format_frame_csv(result->run.tem));
    return TEM_OK;
  });
}

void tem_result_free(tem_result* result) { delete result; }

void tem_manifest_overrides_init(tem_manifest_overrides* overrides) {
  if (overrides) *overrides = tem_manifest_overrides{};
}

tem_status tem_run_manifest(const char* manifest_path, const tem_manifest_overrides* overrides,
                            tem_run_summary* summary) {
  return guarded([&] {
    if (blank(manifest_path)) return fail(TEM_ERR_INVALID_ARGUMENT, "manifest path is required");
    if (summary) *summary = tem_run_summary{};
    tem::OptionOverrides ov;
    if (const auto* o = overrides) {
      if (o->has_alpha) ov.alpha = o->alpha;
      if (o->has_iou_threshold) ov.iou_threshold = o->iou_threshold;
      if (o->has_gt_classes) {
        ov.gt_classes = o->gt_classes ? std::set<int>(o->gt_classes, o->gt_classes + o->gt_class_count)
                                      : std::set<int>{};
      }
      if (o->has_min_visibility) ov.min_visibility = o->min_visibility;
      if (o->has_require_flag) ov.require_flag = o->require_flag != 0;
      if (o->has_intersect_ids) {
        ov.id_mode = o->intersect_ids ? tem::IdSetMode::kIntersection : tem::IdSetMode::kUnion;
      }
      if (o->has_jobs) ov.jobs = o->jobs;
      if (o->has_continue_on_error) ov.continue_on_error = o->continue_on_error != 0;
      if (o->has_mean_rows) ov.mean_rows = o->mean_rows != 0;
      if (!blank(o->output_dir)) ov.output_dir = std::filesystem::path(o->output_dir);
    }
    const tem::RunManifest manifest = tem::load_manifest(manifest_path, ov);
    const tem::EvaluationReport report = tem::run_evaluation(manifest, emit_warning);
    if (summary) {
      summary->runs_ok = report.results.size();
      summary->runs_failed = report.failures.size();
    }
    if (report.failures.empty()) return TEM_OK;
    std::string message = std::to_string(report.failures.size()) + " run(s) failed";
    const auto& first = report.failures.front();
    message += "; first: " + first.key.sequence + "/" + first.key.detector + "/" + first.key.tracker + ": " +
               first.message;
    if (!manifest.options.continue_on_error) {
      message += " (nothing written; use --continue-on-error to keep successful runs)";
    } else {
      message += " (see " + (manifest.output_dir / "errors.txt").string() + ")";
    }
    return fail(TEM_ERR_RUN_FAILED, message);
  });
}

tem_status tem_perturb_file(const char* gt_path, const char* seqinfo_path, const char* profile,
                            const char* profile_file, int has_seed, uint64_t seed, const tem_gt_filter* filter,
                            const char* out_path) {
  return guarded([&] {
    if (blank(gt_path) || blank(profile) || blank(out_path)) {
      return fail(TEM_ERR_INVALID_ARGUMENT, "ground-truth path, profile and output path are required");
    }
    tem::PerturbationProfile p = blank(profile_file) ? tem::builtin_profile(profile)
                                                     : tem::load_profile(tem::KvConfig::load(profile_file), profile);
    if (has_seed) p.seed = seed;
    tem::perturb_file(gt_path, optional_path(seqinfo_path), p, to_filter(filter), out_path);
    return TEM_OK;
  });
}

tem_status tem_track_file(const char* det_path, const char* seqinfo_path, const char* config,
                          const char* config_file, const char* out_path) {
  return guarded([&] {
    if (blank(det_path) || blank(config) || blank(out_path)) {
      return fail(TEM_ERR_INVALID_ARGUMENT, "detection path, tracker config and output path are required");
    }
    const tem::TrackerConfig c = blank(config_file)
                                     ? tem::builtin_tracker_config(config)
                                     : tem::load_tracker_config(tem::KvConfig::load(config_file), config);
    tem::track_file(det_path, optional_path(seqinfo_path), c, out_path, emit_warning);
    return TEM_OK;
  });
}

tem_status tem_correlate_file(const char* scores_csv, const char* out_dir) {
  return guarded([&] {
    if (blank(scores_csv) || blank(out_dir)) {
      return fail(TEM_ERR_INVALID_ARGUMENT, "scores file and output directory are required");
    }
    tem::correlate_file(scores_csv, out_dir);
    return TEM_OK;
  });
}

tem_status tem_report_file(const char* scores_csv, char** out) {
  return guarded([&] {
    if (blank(scores_csv) || !out) return fail(TEM_ERR_INVALID_ARGUMENT, "scores file and output are required");
    *out = copy_string(tem::report_text(tem::read_score_csv(scores_csv)));
    return TEM_OK;
  });
}

void tem_simulation_init(tem_simulation* spec) {
  if (!spec) return;
  const tem::SimulationSpec d;
  *spec = tem_simulation{d.sequences, d.frames, d.objects, d.seed};
}

tem_status tem_simulate_dataset(const char* out_dir, const tem_simulation* spec, char** manifest_path) {
  return guarded([&] {
    if (blank(out_dir)) return fail(TEM_ERR_INVALID_ARGUMENT, "output directory is required");
    tem::SimulationSpec s;
    if (spec) {
      s.sequences = spec->sequences;
      s.frames = spec->frames;
      s.objects = spec->objects;
      s.seed = spec->seed;
    }
    const auto path = tem::simulate_dataset(out_dir, s);
    if (manifest_path) *manifest_path = copy_string(path.string());
    return TEM_OK;
  });
}

}  // extern "C"
