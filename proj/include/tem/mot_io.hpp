#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace tem {

/// Axis-aligned box in pixel coordinates (top-left corner plus size).
struct Box {
  double left = 0.0;
  double top = 0.0;
  double width = 0.0;
  double height = 0.0;

  double right() const noexcept { return left + width; }
  double bottom() const noexcept { return top + height; }
  double area() const noexcept { return width * height; }

  bool operator==(const Box&) const = default;
};

/// True for finite coordinates and strictly positive size.
bool is_valid(const Box& b) noexcept;

enum class SourceKind { kGroundTruth, kDetection, kTrack };

/// One row of a MOTChallenge file.
///
/// For ground truth the `confidence` field carries the "consider" flag column,
/// `class_id` and `visibility` are only meaningful for ground truth.
struct Observation {
  int frame = 1;
  std::optional<int> identity;
  Box box;
  double confidence = 1.0;
  int class_id = 1;
  double visibility = 1.0;

  bool operator==(const Observation&) const = default;
};

/// Strict weak ordering used to canonicalise frame contents.
bool canonical_less(const Observation& a, const Observation& b) noexcept;

struct SequenceMeta {
  std::string name;
  int frame_count = 1;
  double image_width = 0.0;
  double image_height = 0.0;
  double frame_rate = 0.0;
};

/// Observations grouped by frame; `frames[k - 1]` holds frame k.
class FrameSeries {
 public:
  FrameSeries() = default;
  explicit FrameSeries(int frame_count) : frames_(static_cast<std::size_t>(frame_count)) {}

  int frame_count() const noexcept { return static_cast<int>(frames_.size()); }
  const std::vector<Observation>& at(int frame) const { return frames_.at(static_cast<std::size_t>(frame - 1)); }
  std::vector<Observation>& at(int frame) { return frames_.at(static_cast<std::size_t>(frame - 1)); }

  std::size_t total() const noexcept;
  /// All observations in frame order.
  std::vector<Observation> flatten() const;
  /// Sorts each frame with canonical_less.
  void canonicalize();

  bool operator==(const FrameSeries&) const = default;

 private:
  std::vector<std::vector<Observation>> frames_;
};

/// Builds a series of `frame_count` frames. Throws if any frame falls outside.
FrameSeries group_by_frame(const std::vector<Observation>& observations, int frame_count);

/// Boxes of one frame, in order.
std::vector<Box> boxes_of(const std::vector<Observation>& frame);

struct EvaluationBundle {
  SequenceMeta meta;
  FrameSeries ground_truth;
  FrameSeries detections;
  FrameSeries tracks;
  /// Non-fatal notes gathered while loading (e.g. clamped confidences).
  std::vector<std::string> warnings;
};

/// Parses one comma-separated MOTChallenge row. Appends to `warnings` when a
/// confidence had to be clamped. Throws ParseError carrying `line_number`.
Observation parse_mot_line(std::string_view line, SourceKind kind, std::size_t line_number = 0,
                           std::vector<std::string>* warnings = nullptr);

/// Formats one row; the inverse of parse_mot_line to 6 decimals.
std::string format_mot_line(const Observation& obs, SourceKind kind);

/// Reads every non-empty, non-comment row of a MOT file.
std::vector<Observation> read_mot_file(const std::filesystem::path& path, SourceKind kind,
                                       std::vector<std::string>* warnings = nullptr);

void write_mot_file(const std::vector<Observation>& observations, const std::filesystem::path& path,
                    SourceKind kind);
void write_mot_file(const FrameSeries& series, const std::filesystem::path& path, SourceKind kind);

/// Reads a seqinfo.ini style key-value file (`seqLength`, `imWidth`, ...).
SequenceMeta read_seqinfo(const std::filesystem::path& path);

/// Loads and validates a bundle. K always comes from `meta`.
EvaluationBundle load_bundle(const std::filesystem::path& gt_path, const std::filesystem::path& det_path,
                             const std::filesystem::path& track_path, const SequenceMeta& meta);
EvaluationBundle load_bundle(const std::filesystem::path& gt_path, const std::filesystem::path& det_path,
                             const std::filesystem::path& track_path,
                             const std::filesystem::path& seqinfo_path);

/// Validates the bundle invariants (frame ranges, identities, uniqueness).
void validate_bundle(const EvaluationBundle& bundle);

struct GroundTruthFilter {
  std::set<int> allowed_classes{1};
  double min_visibility = 0.0;
  bool require_flag = true;
};

/// Drops ground-truth rows that fail the filter. Detections and tracks are untouched.
EvaluationBundle filter_ground_truth(const EvaluationBundle& bundle, const GroundTruthFilter& filter);
FrameSeries filter_ground_truth(const FrameSeries& ground_truth, const GroundTruthFilter& filter);

}  // namespace tem
