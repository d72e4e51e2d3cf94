#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tem/analysis.hpp"
#include "tem/effort.hpp"
#include "tem/kvconfig.hpp"
#include "tem/mot_io.hpp"
#include "tem/synth.hpp"

namespace tem {

using WarningSink = std::function<void(const std::string&)>;

struct EvaluationOptions {
  double alpha = 0.5;
  double iou_threshold = 0.5;  // baselines only
  GroundTruthFilter gt_filter;
  IdSetMode id_mode = IdSetMode::kUnion;
  int jobs = 1;
  bool continue_on_error = false;
  bool mean_rows = false;
};

/// Values given on the command line; each one beats the manifest.
struct OptionOverrides {
  std::optional<double> alpha;
  std::optional<double> iou_threshold;
  std::optional<std::set<int>> gt_classes;
  std::optional<double> min_visibility;
  std::optional<bool> require_flag;
  std::optional<IdSetMode> id_mode;
  std::optional<int> jobs;
  std::optional<bool> continue_on_error;
  std::optional<bool> mean_rows;
  std::optional<std::filesystem::path> output_dir;
};

void validate(const EvaluationOptions& options);

// Manifest layout (paths relative to the manifest's directory):
//
//   [dataset]
//   root = "data"
//   sequences = ["seq-a", "seq-b"]
//   gt = "{root}/{seq}/gt/gt.txt"              # default shown
//   seqinfo = "{root}/{seq}/seqinfo.ini"       # default shown
//   [detectors]
//   P1 = "{root}/{seq}/det/P1.txt"
//   [trackers]
//   sort = "{root}/{seq}/trk/{detector}/sort.txt"
//   [output]
//   dir = "results"
//   [options]
//   alpha = 0.5
//   iou_threshold = 0.5
//   gt_classes = [1]
//   min_visibility = 0.0
//   require_flag = true
//   id_set = "union"                           # or "intersection"
//   jobs = 1
//   continue_on_error = false
//   mean_rows = false
struct RunManifest {
  std::filesystem::path dataset_root;
  std::vector<std::string> sequences;
  std::string gt_template = "{root}/{seq}/gt/gt.txt";
  std::string seqinfo_template = "{root}/{seq}/seqinfo.ini";
  std::map<std::string, std::string> detectors;
  std::map<std::string, std::string> trackers;
  std::filesystem::path output_dir;
  EvaluationOptions options;
};

RunManifest load_manifest(const std::filesystem::path& path, const OptionOverrides& overrides = {});
RunManifest parse_manifest(const KvConfig& config, const std::filesystem::path& base_dir,
                           const OptionOverrides& overrides = {});

/// Expands {root}, {seq}, {detector} and {tracker}.
std::filesystem::path expand_template(const std::string& pattern, const RunManifest& manifest, const RunKey& key);

/// Filters the ground truth, then computes TEM and the baseline measures.
RunResult evaluate_bundle(const EvaluationBundle& bundle, const EvaluationOptions& options, RunKey key = {});

/// `frame,Q_d,Q_t,E_intra,Y,C,IDSW_score,E_inter`; frame 1 has no inter-frame values.
std::string format_frame_csv(const TemScores& scores);

struct RunFailure {
  RunKey key;
  std::string message;
};

struct EvaluationReport {
  std::vector<RunResult> results;  // sorted by key
  std::vector<RunFailure> failures;
  ScoreTable table;
};

/// Evaluates every (sequence, detector, tracker) run and writes
/// `<out>/scores.csv` and `<out>/frames/<seq>__<det>__<trk>.csv`. Runs are
/// spread over `jobs` workers; outputs are written in sorted run order.
/// Without continue_on_error the first failure stops the batch and nothing
/// is written; with it, successful runs are written and failures listed in
/// `<out>/errors.txt`.
EvaluationReport run_evaluation(const RunManifest& manifest, const WarningSink& warn = {});

/// Writes a synthetic detection file derived from a ground-truth file. K is
/// taken from `seqinfo` when given, else from the last frame present.
void perturb_file(const std::filesystem::path& gt_path, const std::optional<std::filesystem::path>& seqinfo,
                  const PerturbationProfile& profile, const GroundTruthFilter& filter,
                  const std::filesystem::path& out_path);

void track_file(const std::filesystem::path& det_path, const std::optional<std::filesystem::path>& seqinfo,
                const TrackerConfig& config, const std::filesystem::path& out_path, const WarningSink& warn = {});

/// Reads a score table and writes `<out>/correlation.csv` and `<out>/correlation.svg`.
CorrelationMatrix correlate_file(const std::filesystem::path& scores_csv, const std::filesystem::path& out_dir);

/// Plain-text table: sequence, detector, tracker, mAP, Recall, Precision,
/// HOTA (when the table has such a column), ATA, TEM.
std::string report_text(const ScoreTable& table);

struct SimulationSpec {
  int sequences = 3;
  int frames = 150;
  int objects = 14;
  std::vector<PerturbationProfile> profiles = builtin_profiles();
  std::vector<TrackerConfig> trackers = {builtin_tracker_config("sort"), builtin_tracker_config("interp")};
  std::uint64_t seed = 7;
};

/// Writes a complete synthetic dataset (ground truth, detections per profile,
/// reference-tracker output per profile and config) plus `manifest.toml`.
/// Returns the manifest path.
std::filesystem::path simulate_dataset(const std::filesystem::path& out_dir, const SimulationSpec& spec);

}  // namespace tem
