#include "tem/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <fstream>
#include <mutex>
#include <thread>

#include <fmt/format.h>

#include "numfmt.hpp"
#include "tem/baselines.hpp"
#include "tem/error.hpp"
#include "tem/kvconfig.hpp"
#include "tem/rng.hpp"

namespace tem {
namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::filesystem::path& p) {
  return p.is_absolute() ? p : base / p;
}

IdSetMode parse_id_mode(const std::string& text) {
  if (text == "union") return IdSetMode::kUnion;
  if (text == "intersection") return IdSetMode::kIntersection;
  throw Error(ErrorCode::kParse, "id_set must be 'union' or 'intersection', got '" + text + "'");
}

std::string run_file_stem(const RunKey& key) { return key.sequence + "__" + key.detector + "__" + key.tracker; }

int last_frame(const std::vector<Observation>& rows) {
  int k = 1;
  for (const auto& o : rows) k = std::max(k, o.frame);
  return k;
}

std::string toml_string(const std::string& s) { return "\"" + s + "\""; }

}  // namespace

void validate(const EvaluationOptions& o) {
  if (!(o.alpha >= 0.0 && o.alpha <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "alpha must lie in [0, 1]");
  if (!(o.iou_threshold > 0.0 && o.iou_threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "iou threshold must lie in (0, 1]");
  }
  if (!(o.gt_filter.min_visibility >= 0.0 && o.gt_filter.min_visibility <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "min visibility must lie in [0, 1]");
  }
  if (o.jobs < 1) throw Error(ErrorCode::kInvalidArgument, "jobs must be >= 1");
}

RunManifest parse_manifest(const KvConfig& cfg, const std::filesystem::path& base_dir,
                           const OptionOverrides& ov) {
  RunManifest m;
  m.dataset_root = std::filesystem::absolute(resolve(base_dir, cfg.get_string("dataset", "root").value_or("."))).lexically_normal();
  m.sequences = cfg.get_string_list("dataset", "sequences").value_or(std::vector<std::string>{});
  if (m.sequences.empty()) throw Error(ErrorCode::kInvalidArgument, "manifest lists no sequences ([dataset] sequences)");
  if (auto v = cfg.get_string("dataset", "gt")) m.gt_template = *v;
  if (auto v = cfg.get_string("dataset", "seqinfo")) m.seqinfo_template = *v;

  auto read_map = [&cfg](const char* section) {
    std::map<std::string, std::string> out;
    if (const auto* s = cfg.section(section)) {
      for (const auto& [label, _] : *s) out[label] = *cfg.get_string(section, label);
    }
    return out;
  };
  m.detectors = read_map("detectors");
  m.trackers = read_map("trackers");
  if (m.detectors.empty()) throw Error(ErrorCode::kInvalidArgument, "manifest lists no detector sets ([detectors])");
  if (m.trackers.empty()) throw Error(ErrorCode::kInvalidArgument, "manifest lists no trackers ([trackers])");

  m.output_dir = resolve(base_dir, cfg.get_string("output", "dir").value_or("results"));

  EvaluationOptions& o = m.options;
  if (auto v = cfg.get_double("options", "alpha")) o.alpha = *v;
  if (auto v = cfg.get_double("options", "iou_threshold")) o.iou_threshold = *v;
  if (auto v = cfg.get_int_list("options", "gt_classes")) o.gt_filter.allowed_classes = std::set<int>(v->begin(), v->end());
  if (auto v = cfg.get_double("options", "min_visibility")) o.gt_filter.min_visibility = *v;
  if (auto v = cfg.get_bool("options", "require_flag")) o.gt_filter.require_flag = *v;
  if (auto v = cfg.get_string("options", "id_set")) o.id_mode = parse_id_mode(*v);
  if (auto v = cfg.get_int("options", "jobs")) o.jobs = static_cast<int>(*v);
  if (auto v = cfg.get_bool("options", "continue_on_error")) o.continue_on_error = *v;
  if (auto v = cfg.get_bool("options", "mean_rows")) o.mean_rows = *v;

  if (ov.alpha) o.alpha = *ov.alpha;
  if (ov.iou_threshold) o.iou_threshold = *ov.iou_threshold;
  if (ov.gt_classes) o.gt_filter.allowed_classes = *ov.gt_classes;
  if (ov.min_visibility) o.gt_filter.min_visibility = *ov.min_visibility;
  if (ov.require_flag) o.gt_filter.require_flag = *ov.require_flag;
  if (ov.id_mode) o.id_mode = *ov.id_mode;
  if (ov.jobs) o.jobs = *ov.jobs;
  if (ov.continue_on_error) o.continue_on_error = *ov.continue_on_error;
  if (ov.mean_rows) o.mean_rows = *ov.mean_rows;
  if (ov.output_dir) m.output_dir = *ov.output_dir;
  validate(o);

  if (!std::filesystem::is_directory(m.dataset_root)) {
    throw Error(ErrorCode::kIo, "dataset root does not exist: " + m.dataset_root.string());
  }
  return m;
}

RunManifest load_manifest(const std::filesystem::path& path, const OptionOverrides& overrides) {
  const KvConfig cfg = KvConfig::load(path);
  return parse_manifest(cfg, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path(), overrides);
}

std::filesystem::path expand_template(const std::string& pattern, const RunManifest& manifest, const RunKey& key) {
  std::string out;
  for (std::size_t i = 0; i < pattern.size();) {
    if (pattern[i] == '{') {
      const std::size_t close = pattern.find('}', i);
      if (close == std::string::npos) throw Error(ErrorCode::kParse, "unterminated placeholder in '" + pattern + "'");
      const std::string name = pattern.substr(i + 1, close - i - 1);
      if (name == "root") {
        out += manifest.dataset_root.string();
      } else if (name == "seq") {
        out += key.sequence;
      } else if (name == "detector") {
        out += key.detector;
      } else if (name == "tracker") {
        out += key.tracker;
      } else {
        throw Error(ErrorCode::kParse, "unknown placeholder {" + name + "} in '" + pattern + "'");
      }
      i = close + 1;
    } else {
      out += pattern[i++];
    }
  }
  // Relative results of a template are taken relative to the dataset root.
  return resolve(manifest.dataset_root, out);
}

RunResult evaluate_bundle(const EvaluationBundle& raw, const EvaluationOptions& options, RunKey key) {
  validate(options);
  const EvaluationBundle bundle = filter_ground_truth(raw, options.gt_filter);
  RunResult r;
  r.key = std::move(key);
  r.tem = evaluate_tem(bundle, TemOptions{options.alpha, options.id_mode});
  r.baselines = compute_baselines(bundle, options.iou_threshold);
  return r;
}

std::string format_frame_csv(const TemScores& s) {
  using detail::format_number;
  std::string out = "frame,Q_d,Q_t,E_intra,Y,C,IDSW_score,E_inter\n";
  for (const auto& intra : s.per_frame_intra) {
    out += std::to_string(intra.frame) + "," + format_number(intra.detector.quality) + "," +
           format_number(intra.tracker.quality) + "," + format_number(intra.effort);
    if (intra.frame >= 2 && static_cast<std::size_t>(intra.frame - 2) < s.per_frame_inter.size()) {
      const auto& inter = s.per_frame_inter[static_cast<std::size_t>(intra.frame - 2)];
      out += "," + format_number(inter.association_gain) + "," + format_number(inter.cardinality_weight) + "," +
             format_number(inter.idsw_score) + "," + format_number(inter.effort);
    } else {
      out += ",,,,";
    }
    out += '\n';
  }
  return out;
}

EvaluationReport run_evaluation(const RunManifest& manifest, const WarningSink& warn) {
  validate(manifest.options);
  if (manifest.sequences.empty()) throw Error(ErrorCode::kInvalidArgument, "no sequences to evaluate");

  std::vector<RunKey> keys;
  for (const auto& seq : manifest.sequences) {
    for (const auto& [det, _] : manifest.detectors) {
      for (const auto& [trk, __] : manifest.trackers) keys.push_back(RunKey{seq, det, trk});
    }
  }
  std::sort(keys.begin(), keys.end());
  if (std::adjacent_find(keys.begin(), keys.end()) != keys.end()) {
    throw Error(ErrorCode::kInvalidArgument, "manifest lists a sequence twice");
  }

  std::vector<std::optional<RunResult>> results(keys.size());
  std::vector<std::optional<std::string>> errors(keys.size());
  std::vector<std::vector<std::string>> warnings(keys.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};

  auto worker = [&] {
    while (!stop.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= keys.size()) return;
      const RunKey& key = keys[i];
      try {
        const auto gt = expand_template(manifest.gt_template, manifest, key);
        const auto seqinfo = expand_template(manifest.seqinfo_template, manifest, key);
        const auto det = expand_template(manifest.detectors.at(key.detector), manifest, key);
        const auto trk = expand_template(manifest.trackers.at(key.tracker), manifest, key);
        EvaluationBundle bundle = load_bundle(gt, det, trk, seqinfo);
        if (bundle.meta.name.empty()) bundle.meta.name = key.sequence;
        RunResult r = evaluate_bundle(bundle, manifest.options, key);
        warnings[i] = bundle.warnings;
        warnings[i].insert(warnings[i].end(), r.tem.warnings.begin(), r.tem.warnings.end());
        results[i] = std::move(r);
      } catch (const std::exception& e) {
        errors[i] = e.what();
        if (!manifest.options.continue_on_error) stop.store(true);
      }
    }
  };

  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(manifest.options.jobs), keys.size());
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  EvaluationReport report;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (warn) {
      for (const auto& w : warnings[i]) warn(run_file_stem(keys[i]) + ": " + w);
    }
    if (errors[i]) report.failures.push_back({keys[i], *errors[i]});
    if (results[i]) report.results.push_back(std::move(*results[i]));
  }
  if (!report.failures.empty() && !manifest.options.continue_on_error) return report;

  report.table = aggregate(report.results, manifest.options.mean_rows ? Grouping::kDetectorTracker : Grouping::kNone);
  write_score_csv(report.table, manifest.output_dir / "scores.csv");
  for (const auto& r : report.results) {
    write_text(manifest.output_dir / "frames" / (run_file_stem(r.key) + ".csv"), format_frame_csv(r.tem));
  }
  const auto errors_path = manifest.output_dir / "errors.txt";
  if (!report.failures.empty()) {
    std::string text;
    for (const auto& f : report.failures) text += run_file_stem(f.key) + ": " + f.message + "\n";
    write_text(errors_path, text);
  } else {
    std::error_code ec;
    std::filesystem::remove(errors_path, ec);
  }
  return report;
}

void perturb_file(const std::filesystem::path& gt_path, const std::optional<std::filesystem::path>& seqinfo,
                  const PerturbationProfile& profile, const GroundTruthFilter& filter,
                  const std::filesystem::path& out_path) {
  const auto rows = read_mot_file(gt_path, SourceKind::kGroundTruth);
  SequenceMeta meta;
  if (seqinfo) {
    meta = read_seqinfo(*seqinfo);
  } else {
    meta.frame_count = last_frame(rows);
  }
  const FrameSeries gt = filter_ground_truth(group_by_frame(rows, meta.frame_count), filter);
  write_mot_file(perturb(gt, meta, profile), out_path, SourceKind::kDetection);
}

void track_file(const std::filesystem::path& det_path, const std::optional<std::filesystem::path>& seqinfo,
                const TrackerConfig& config, const std::filesystem::path& out_path, const WarningSink& warn) {
  std::vector<std::string> warnings;
  const auto rows = read_mot_file(det_path, SourceKind::kDetection, &warnings);
  if (warn) {
    for (const auto& w : warnings) warn(w);
  }
  const int K = seqinfo ? read_seqinfo(*seqinfo).frame_count : last_frame(rows);
  write_mot_file(reference_track(group_by_frame(rows, K), config), out_path, SourceKind::kTrack);
}

CorrelationMatrix correlate_file(const std::filesystem::path& scores_csv, const std::filesystem::path& out_dir) {
  const ScoreTable table = read_score_csv(scores_csv).without_mean_rows();
  const CorrelationMatrix m = correlation_matrix(table);
  write_correlation_csv(m, out_dir / "correlation.csv");
  render_heatmap(m, out_dir / "correlation.svg");
  return m;
}

std::string report_text(const ScoreTable& table) {
  struct Col {
    std::string title;
    std::optional<std::size_t> index;
  };
  auto find = [&table](std::string_view name) { return table.column_index(name); };
  std::optional<std::size_t> hota;
  for (std::size_t i = 0; i < table.columns().size(); ++i) {
    std::string lower = table.columns()[i];
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower.rfind("hota", 0) == 0) {
      hota = i;
      break;
    }
  }
  std::vector<Col> cols = {{"mAP", find("ap50")}, {"Recall", find("recall")}, {"Precision", find("precision")}};
  if (hota) cols.push_back({table.columns()[*hota], hota});
  cols.push_back({"ATA", find("ata")});
  cols.push_back({"TEM", find("tem")});

  std::size_t w_seq = 8, w_det = 8, w_trk = 7;
  for (const auto& r : table.rows()) {
    w_seq = std::max(w_seq, r.key.sequence.size());
    w_det = std::max(w_det, r.key.detector.size());
    w_trk = std::max(w_trk, r.key.tracker.size());
  }
  std::string out = fmt::format("{:<{}}  {:<{}}  {:<{}}", "Sequence", w_seq, "Detector", w_det, "Tracker", w_trk);
  for (const auto& c : cols) out += fmt::format("  {:>9}", c.title);
  out += '\n';
  std::string last_seq;
  for (const auto& r : table.rows()) {
    if (!last_seq.empty() && r.key.sequence != last_seq) out += '\n';
    last_seq = r.key.sequence;
    out += fmt::format("{:<{}}  {:<{}}  {:<{}}", r.key.sequence, w_seq, r.key.detector, w_det, r.key.tracker, w_trk);
    for (const auto& c : cols) {
      const std::optional<double> v = c.index ? r.values[*c.index] : std::nullopt;
      out += v ? fmt::format("  {:>9.2f}", *v) : fmt::format("  {:>9}", "-");
    }
    out += '\n';
  }
  return out;
}

std::filesystem::path simulate_dataset(const std::filesystem::path& out_dir, const SimulationSpec& spec) {
  if (spec.sequences < 1) throw Error(ErrorCode::kInvalidArgument, "need at least one sequence");
  if (spec.profiles.empty() || spec.trackers.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "need at least one profile and one tracker config");
  }
  const std::filesystem::path data = out_dir / "data";
  std::vector<std::string> names;
  for (int s = 0; s < spec.sequences; ++s) {
    const std::string name = fmt::format("syn-{:02d}", s + 1);
    names.push_back(name);
    SceneSpec scene;
    scene.name = name;
    scene.frames = spec.frames;
    scene.objects = spec.objects;
    scene.seed = derive_seed(spec.seed, static_cast<std::uint64_t>(s));
    const SyntheticSequence seq = generate_scene(scene);
    const auto dir = data / name;
    write_text(dir / "seqinfo.ini",
               fmt::format("[Sequence]\nname={}\nimDir=img1\nframeRate={}\nseqLength={}\nimWidth={}\nimHeight={}\n"
                           "imExt=.jpg\n",
                           name, detail::format_number(seq.meta.frame_rate), seq.meta.frame_count,
                           detail::format_number(seq.meta.image_width), detail::format_number(seq.meta.image_height)));
    write_mot_file(seq.ground_truth, dir / "gt" / "gt.txt", SourceKind::kGroundTruth);
    for (std::size_t p = 0; p < spec.profiles.size(); ++p) {
      PerturbationProfile profile = spec.profiles[p];
      profile.seed = derive_seed(derive_seed(spec.seed ^ profile.seed, static_cast<std::uint64_t>(s)), p);
      const FrameSeries det = perturb(seq.ground_truth, seq.meta, profile);
      write_mot_file(det, dir / "det" / (profile.name + ".txt"), SourceKind::kDetection);
      for (const auto& tracker : spec.trackers) {
        write_mot_file(reference_track(det, tracker), dir / "trk" / profile.name / (tracker.name + ".txt"),
                       SourceKind::kTrack);
      }
    }
  }

  std::string manifest = "# Generated by `tem simulate`.\n[dataset]\nroot = \"data\"\nsequences = [";
  for (std::size_t i = 0; i < names.size(); ++i) manifest += (i ? ", " : "") + toml_string(names[i]);
  manifest += "]\n\n[detectors]\n";
  for (const auto& p : spec.profiles) manifest += p.name + " = " + toml_string("{root}/{seq}/det/" + p.name + ".txt") + "\n";
  manifest += "\n[trackers]\n";
  for (const auto& t : spec.trackers) {
    manifest += t.name + " = " + toml_string("{root}/{seq}/trk/{detector}/" + t.name + ".txt") + "\n";
  }
  manifest += "\n[output]\ndir = \"results\"\n\n[options]\nalpha = 0.5\niou_threshold = 0.5\n";
  const auto path = out_dir / "manifest.toml";
  write_text(path, manifest);
  return path;
}

}  // namespace tem
