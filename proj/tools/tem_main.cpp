// tem: command-line front end over the C interface.
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tem/tem.h"

namespace {

void print_warning(const char* message, void*) { std::printf("warning: %s\n", message); }

int report_failure(tem_status status) {
  std::fprintf(stderr, "tem: %s: %s\n", tem_status_name(status), tem_last_error());
  return status == TEM_ERR_INVALID_ARGUMENT ? 2 : 1;
}

struct FilterArgs {
  std::string classes;  // "", "all" or "1,2,7"
  std::optional<double> min_visibility;
  std::optional<bool> require_flag;
  std::vector<int> parsed;

  void add_to(CLI::App* app) {
    app->add_option("--gt-classes", classes, "ground-truth classes to keep: comma list or 'all' (default 1)");
    app->add_option("--min-visibility", min_visibility, "drop ground truth below this visibility (default 0)")
        ->check(CLI::Range(0.0, 1.0));
    app->add_option("--require-flag", require_flag, "keep only ground truth with flag 1 (default true)");
  }

  // Returns false with a message on stderr when the class list is malformed.
  bool parse() {
    parsed.clear();
    if (classes.empty() || classes == "all") return true;
    std::size_t start = 0;
    while (start <= classes.size()) {
      const std::size_t comma = classes.find(',', start);
      const std::string item = classes.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      try {
        std::size_t used = 0;
        parsed.push_back(std::stoi(item, &used));
        if (used != item.size()) throw std::invalid_argument(item);
      } catch (const std::exception&) {
        std::fprintf(stderr, "tem: --gt-classes expects integers like '1,2' or 'all', got '%s'\n", classes.c_str());
        return false;
      }
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    return true;
  }

  tem_gt_filter filter() const {
    tem_gt_filter f;
    tem_gt_filter_init(&f);
    if (classes == "all") {
      f.all_classes = 1;
    } else if (!classes.empty()) {
      f.gt_classes = parsed.data();
      f.gt_class_count = parsed.size();
    }
    if (min_visibility) f.min_visibility = *min_visibility;
    if (require_flag) f.require_flag = *require_flag ? 1 : 0;
    return f;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tracking effort evaluation toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(tem_version()));

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "score every (sequence, detector, tracker) run in a manifest");
  std::string manifest;
  std::string eval_out;
  std::optional<double> alpha, iou_threshold;
  std::optional<int> jobs;
  bool union_ids = false, intersect_ids = false, continue_on_error = false, mean_rows = false;
  FilterArgs eval_filter;
  evaluate->add_option("manifest", manifest, "run manifest (TOML)")->required();
  evaluate->add_option("-o,--out", eval_out, "output directory (overrides [output] dir)");
  evaluate->add_option("--alpha", alpha, "weight of intra-frame effort (default 0.5)")->check(CLI::Range(0.0, 1.0));
  evaluate->add_option("--iou-threshold", iou_threshold, "IOU threshold for baseline measures (default 0.5)")
      ->check(CLI::Range(0.0, 1.0));
  eval_filter.add_to(evaluate);
  auto* union_flag = evaluate->add_flag("--union-ids", union_ids, "identity set of a frame pair is the union (default)");
  evaluate->add_flag("--intersect-ids", intersect_ids, "identity set of a frame pair is the intersection")
      ->excludes(union_flag);
  evaluate->add_option("-j,--jobs", jobs, "parallel runs")->check(CLI::PositiveNumber);
  evaluate->add_flag("--continue-on-error", continue_on_error, "write successful runs even if some fail");
  evaluate->add_flag("--mean-rows", mean_rows, "append a mean row per (detector, tracker)");

  // perturb
  auto* perturb = app.add_subcommand("perturb", "derive a synthetic detection file from ground truth");
  std::string gt_path, profile, profile_file, perturb_seqinfo, perturb_out;
  std::optional<std::uint64_t> seed;
  FilterArgs perturb_filter;
  perturb->add_option("gt", gt_path, "ground-truth file")->required()->check(CLI::ExistingFile);
  perturb->add_option("-p,--profile", profile, "profile name (P1..P5 or a [profile.NAME] in --profile-file)")
      ->required();
  perturb->add_option("--profile-file", profile_file, "TOML file with [profile.NAME] sections")
      ->check(CLI::ExistingFile);
  perturb->add_option("--seqinfo", perturb_seqinfo, "seqinfo.ini for frame count and image size")
      ->check(CLI::ExistingFile);
  perturb->add_option("--seed", seed, "override the profile seed");
  perturb_filter.add_to(perturb);
  perturb->add_option("-o,--out", perturb_out, "detection file to write")->required();

  // track
  auto* track = app.add_subcommand("track", "run the reference IOU tracker on a detection file");
  std::string det_path, config = "sort", config_file, track_seqinfo, track_out;
  track->add_option("detections", det_path, "detection file")->required()->check(CLI::ExistingFile);
  track->add_option("-c,--config", config, "tracker config (sort, interp, permissive or [tracker.NAME])");
  track->add_option("--config-file", config_file, "TOML file with [tracker.NAME] sections")->check(CLI::ExistingFile);
  track->add_option("--seqinfo", track_seqinfo, "seqinfo.ini for the frame count")->check(CLI::ExistingFile);
  track->add_option("-o,--out", track_out, "track file to write")->required();

  // correlate
  auto* correlate = app.add_subcommand("correlate", "Pearson matrix and heatmap of a scores.csv");
  std::string corr_scores, corr_out;
  correlate->add_option("scores", corr_scores, "scores.csv")->required()->check(CLI::ExistingFile);
  correlate->add_option("-o,--out", corr_out, "output directory (default: next to scores.csv)");

  // report
  auto* report = app.add_subcommand("report", "print a score table");
  std::string report_scores;
  report->add_option("scores", report_scores, "scores.csv")->required()->check(CLI::ExistingFile);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "write a synthetic dataset with detections, tracks and a manifest");
  std::string sim_out;
  tem_simulation sim;
  tem_simulation_init(&sim);
  simulate->add_option("out", sim_out, "output directory")->required();
  simulate->add_option("--sequences", sim.sequences, "number of sequences")->check(CLI::PositiveNumber);
  simulate->add_option("--frames", sim.frames, "frames per sequence")->check(CLI::PositiveNumber);
  simulate->add_option("--objects", sim.objects, "objects per sequence")->check(CLI::PositiveNumber);
  simulate->add_option("--seed", sim.seed, "master seed");

  CLI11_PARSE(app, argc, argv);
  tem_set_warning_handler(print_warning, nullptr);

  if (evaluate->parsed()) {
    if (!eval_filter.parse()) return 2;
    tem_manifest_overrides ov;
    tem_manifest_overrides_init(&ov);
    if (alpha) {
      ov.has_alpha = 1;
      ov.alpha = *alpha;
    }
    if (iou_threshold) {
      ov.has_iou_threshold = 1;
      ov.iou_threshold = *iou_threshold;
    }
    if (!eval_filter.classes.empty()) {
      ov.has_gt_classes = 1;
      if (eval_filter.classes != "all") {
        ov.gt_classes = eval_filter.parsed.data();
        ov.gt_class_count = eval_filter.parsed.size();
      }
    }
    if (eval_filter.min_visibility) {
      ov.has_min_visibility = 1;
      ov.min_visibility = *eval_filter.min_visibility;
    }
    if (eval_filter.require_flag) {
      ov.has_require_flag = 1;
      ov.require_flag = *eval_filter.require_flag ? 1 : 0;
    }
    if (union_ids || intersect_ids) {
      ov.has_intersect_ids = 1;
      ov.intersect_ids = intersect_ids ? 1 : 0;
    }
    if (jobs) {
      ov.has_jobs = 1;
      ov.jobs = *jobs;
    }
    if (continue_on_error) {
      ov.has_continue_on_error = 1;
      ov.continue_on_error = 1;
    }
    if (mean_rows) {
      ov.has_mean_rows = 1;
      ov.mean_rows = 1;
    }
    if (!eval_out.empty()) ov.output_dir = eval_out.c_str();
    tem_run_summary summary;
    const tem_status st = tem_run_manifest(manifest.c_str(), &ov, &summary);
    if (st != TEM_OK) return report_failure(st);
    return 0;
  }

  if (perturb->parsed()) {
    if (!perturb_filter.parse()) return 2;
    const tem_gt_filter f = perturb_filter.filter();
    const tem_status st =
        tem_perturb_file(gt_path.c_str(), perturb_seqinfo.c_str(), profile.c_str(), profile_file.c_str(),
                         seed ? 1 : 0, seed.value_or(0), &f, perturb_out.c_str());
    return st == TEM_OK ? 0 : report_failure(st);
  }

  if (track->parsed()) {
    const tem_status st = tem_track_file(det_path.c_str(), track_seqinfo.c_str(), config.c_str(),
                                         config_file.c_str(), track_out.c_str());
    return st == TEM_OK ? 0 : report_failure(st);
  }

  if (correlate->parsed()) {
    if (corr_out.empty()) {
      const auto parent = std::filesystem::path(corr_scores).parent_path();
      corr_out = parent.empty() ? "." : parent.string();
    }
    const tem_status st = tem_correlate_file(corr_scores.c_str(), corr_out.c_str());
    return st == TEM_OK ? 0 : report_failure(st);
  }

  if (report->parsed()) {
    char* text = nullptr;
    const tem_status st = tem_report_file(report_scores.c_str(), &text);
    if (st != TEM_OK) return report_failure(st);
    std::fputs(text, stdout);
    tem_string_free(text);
    return 0;
  }

  if (simulate->parsed()) {
    char* path = nullptr;
    const tem_status st = tem_simulate_dataset(sim_out.c_str(), &sim, &path);
    if (st != TEM_OK) return report_failure(st);
    std::printf("%s\n", path);
    tem_string_free(path);
    return 0;
  }
  return 0;
}
