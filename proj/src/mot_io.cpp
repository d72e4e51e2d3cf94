#include "tem/mot_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <tuple>

#include "numfmt.hpp"
#include "tem/error.hpp"
#include "tem/kvconfig.hpp"

namespace tem {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

int integral_field(double v, std::size_t line, const char* name) {
  if (v != std::floor(v) || std::abs(v) > 2147483647.0) {
    throw ParseError(line, std::string(name) + " must be an integer");
  }
  return static_cast<int>(v);
}

double clamp_unit(double v, std::size_t line, const char* name, std::vector<std::string>* warnings) {
  if (v >= 0.0 && v <= 1.0) return v;
  if (warnings) {
    warnings->push_back("line " + std::to_string(line) + ": " + name + " " + detail::format_number(v) +
                        " clamped to [0,1]");
  }
  return std::clamp(v, 0.0, 1.0);
}

const char* kind_name(SourceKind kind) {
  switch (kind) {
    case SourceKind::kGroundTruth: return "ground truth";
    case SourceKind::kDetection: return "detection";
    case SourceKind::kTrack: return "track";
  }
  return "?";
}

}  // namespace

bool is_valid(const Box& b) noexcept {
  return std::isfinite(b.left) && std::isfinite(b.top) && std::isfinite(b.width) && std::isfinite(b.height) &&
         b.width > 0.0 && b.height > 0.0;
}

bool canonical_less(const Observation& a, const Observation& b) noexcept {
  auto key = [](const Observation& o) {
    return std::make_tuple(o.identity.value_or(-1), o.box.left, o.box.top, o.box.width, o.box.height,
                           o.confidence, o.class_id, o.visibility);
  };
  return key(a) < key(b);
}

std::size_t FrameSeries::total() const noexcept {
  std::size_t n = 0;
  for (const auto& f : frames_) n += f.size();
  return n;
}

std::vector<Observation> FrameSeries::flatten() const {
  std::vector<Observation> out;
  out.reserve(total());
  for (const auto& f : frames_) out.insert(out.end(), f.begin(), f.end());
  return out;
}

void FrameSeries::canonicalize() {
  for (auto& f : frames_) std::sort(f.begin(), f.end(), canonical_less);
}

FrameSeries group_by_frame(const std::vector<Observation>& observations, int frame_count) {
  if (frame_count < 1) throw Error(ErrorCode::kInvalidArgument, "frame count must be >= 1");
  FrameSeries series(frame_count);
  for (const auto& obs : observations) {
    if (obs.frame < 1 || obs.frame > frame_count) {
      throw Error(ErrorCode::kInvalidArgument, "frame " + std::to_string(obs.frame) + " outside [1, " +
                                                   std::to_string(frame_count) + "]");
    }
    series.at(obs.frame).push_back(obs);
  }
  series.canonicalize();
  return series;
}

std::vector<Box> boxes_of(const std::vector<Observation>& frame) {
  std::vector<Box> out;
  out.reserve(frame.size());
  for (const auto& o : frame) out.push_back(o.box);
  return out;
}

Observation parse_mot_line(std::string_view line, SourceKind kind, std::size_t line_number,
                           std::vector<std::string>* warnings) {
  std::vector<double> fields;
  std::size_t pos = 0;
  while (true) {
    std::size_t comma = line.find(',', pos);
    std::string_view token = trim(line.substr(pos, comma == std::string_view::npos ? line.npos : comma - pos));
    try {
      fields.push_back(parse_double(token, "field " + std::to_string(fields.size() + 1)));
    } catch (const Error& e) {
      throw ParseError(line_number, e.what());
    }
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  if (fields.size() < 6 || fields.size() > 10) {
    throw ParseError(line_number, "expected 6 to 10 fields, got " + std::to_string(fields.size()));
  }

  Observation obs;
  obs.frame = integral_field(fields[0], line_number, "frame");
  if (obs.frame < 1) throw ParseError(line_number, "frame must be >= 1");
  int id = integral_field(fields[1], line_number, "id");
  if (id < -1) throw ParseError(line_number, "id must be >= 0 or -1");
  if (id != -1) obs.identity = id;
  obs.box = Box{fields[2], fields[3], fields[4], fields[5]};
  if (!(obs.box.width > 0.0) || !(obs.box.height > 0.0)) {
    throw ParseError(line_number, "non-positive width/height");
  }

  if (kind == SourceKind::kGroundTruth) {
    if (fields.size() > 6) obs.confidence = clamp_unit(fields[6], line_number, "flag", warnings);
    if (fields.size() > 7) obs.class_id = integral_field(fields[7], line_number, "class");
    if (fields.size() > 8) obs.visibility = clamp_unit(fields[8], line_number, "visibility", warnings);
  } else if (fields.size() > 6) {
    obs.confidence = clamp_unit(fields[6], line_number, "confidence", warnings);
  }
  return obs;
}

std::string format_mot_line(const Observation& obs, SourceKind kind) {
  using detail::format_number;
  std::string s = std::to_string(obs.frame) + "," + std::to_string(obs.identity.value_or(-1)) + "," +
                  format_number(obs.box.left) + "," + format_number(obs.box.top) + "," +
                  format_number(obs.box.width) + "," + format_number(obs.box.height) + "," +
                  format_number(obs.confidence);
  if (kind == SourceKind::kGroundTruth) {
    s += "," + std::to_string(obs.class_id) + "," + format_number(obs.visibility);
  } else {
    s += ",-1,-1,-1";
  }
  return s;
}

std::vector<Observation> read_mot_file(const std::filesystem::path& path, SourceKind kind,
                                       std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, std::string("cannot open ") + kind_name(kind) + " file: " + path.string());
  std::vector<Observation> out;
  std::vector<std::string> line_warnings;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    try {
      out.push_back(parse_mot_line(view, kind, line_no, &line_warnings));
    } catch (const ParseError& e) {
      throw ParseError(e.line(), path.string() + ": " + std::string(e.what()));
    }
  }
  if (warnings && !line_warnings.empty()) {
    warnings->push_back(path.string() + ": " + std::to_string(line_warnings.size()) +
                        " value(s) clamped to [0,1], first at " + line_warnings.front());
  }
  return out;
}

void write_mot_file(const std::vector<Observation>& observations, const std::filesystem::path& path,
                    SourceKind kind) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  for (const auto& obs : observations) out << format_mot_line(obs, kind) << '\n';
  out.flush();
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

void write_mot_file(const FrameSeries& series, const std::filesystem::path& path, SourceKind kind) {
  write_mot_file(series.flatten(), path, kind);
}

SequenceMeta read_seqinfo(const std::filesystem::path& path) {
  KvConfig cfg = KvConfig::load(path);
  std::string section = cfg.has_section("Sequence") ? "Sequence" : "";
  SequenceMeta meta;
  auto length = cfg.get_int(section, "seqLength");
  if (!length) throw Error(ErrorCode::kParse, path.string() + ": missing seqLength");
  if (*length < 1) throw Error(ErrorCode::kParse, path.string() + ": seqLength must be >= 1");
  meta.frame_count = static_cast<int>(*length);
  meta.name = cfg.get_string(section, "name").value_or(path.parent_path().filename().string());
  meta.image_width = cfg.get_double(section, "imWidth").value_or(0.0);
  meta.image_height = cfg.get_double(section, "imHeight").value_or(0.0);
  meta.frame_rate = cfg.get_double(section, "frameRate").value_or(0.0);
  return meta;
}

void validate_bundle(const EvaluationBundle& bundle) {
  const int K = bundle.meta.frame_count;
  if (K < 1) throw Error(ErrorCode::kInvalidArgument, "sequence must have at least one frame");
  auto check = [K](const FrameSeries& series, const char* what, bool needs_identity) {
    if (series.frame_count() != K) {
      throw Error(ErrorCode::kInvalidArgument, std::string(what) + " frame count does not match sequence length");
    }
    for (int k = 1; k <= K; ++k) {
      std::vector<int> ids;
      for (const auto& obs : series.at(k)) {
        if (obs.frame != k) throw Error(ErrorCode::kInvalidArgument, std::string(what) + ": misplaced observation");
        if (!is_valid(obs.box)) throw Error(ErrorCode::kInvalidArgument, std::string(what) + ": invalid box");
        if (!needs_identity) continue;
        if (!obs.identity) {
          throw Error(ErrorCode::kInvalidArgument,
                      std::string(what) + ": frame " + std::to_string(k) + " has a row without identity");
        }
        ids.push_back(*obs.identity);
      }
      std::sort(ids.begin(), ids.end());
      auto dup = std::adjacent_find(ids.begin(), ids.end());
      if (dup != ids.end()) {
        throw Error(ErrorCode::kInvalidArgument, std::string(what) + ": duplicate identity " + std::to_string(*dup) +
                                                     " in frame " + std::to_string(k));
      }
    }
  };
  check(bundle.ground_truth, "ground truth", true);
  check(bundle.detections, "detections", false);
  check(bundle.tracks, "tracks", true);
}

EvaluationBundle load_bundle(const std::filesystem::path& gt_path, const std::filesystem::path& det_path,
                             const std::filesystem::path& track_path, const SequenceMeta& meta) {
  EvaluationBundle bundle;
  bundle.meta = meta;
  auto load = [&](const std::filesystem::path& path, SourceKind kind) {
    auto rows = read_mot_file(path, kind, &bundle.warnings);
    try {
      return group_by_frame(rows, meta.frame_count);
    } catch (const Error& e) {
      throw Error(ErrorCode::kInvalidArgument, path.string() + ": " + e.what());
    }
  };
  bundle.ground_truth = load(gt_path, SourceKind::kGroundTruth);
  bundle.detections = load(det_path, SourceKind::kDetection);
  bundle.tracks = load(track_path, SourceKind::kTrack);
  validate_bundle(bundle);
  return bundle;
}

EvaluationBundle load_bundle(const std::filesystem::path& gt_path, const std::filesystem::path& det_path,
                             const std::filesystem::path& track_path,
                             const std::filesystem::path& seqinfo_path) {
  return load_bundle(gt_path, det_path, track_path, read_seqinfo(seqinfo_path));
}

FrameSeries filter_ground_truth(const FrameSeries& ground_truth, const GroundTruthFilter& filter) {
  FrameSeries out(ground_truth.frame_count());
  for (int k = 1; k <= ground_truth.frame_count(); ++k) {
    for (const auto& obs : ground_truth.at(k)) {
      if (!filter.allowed_classes.empty() && filter.allowed_classes.count(obs.class_id) == 0) continue;
      if (obs.visibility < filter.min_visibility) continue;
      if (filter.require_flag && obs.confidence <= 0.0) continue;
      out.at(k).push_back(obs);
    }
  }
  return out;
}

EvaluationBundle filter_ground_truth(const EvaluationBundle& bundle, const GroundTruthFilter& filter) {
  EvaluationBundle out = bundle;
  out.ground_truth = filter_ground_truth(bundle.ground_truth, filter);
  return out;
}

}  // namespace tem
