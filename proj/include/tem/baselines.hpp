#pragma once

#include <cstddef>
#include <optional>

#include "tem/mot_io.hpp"

namespace tem {

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

/// Per-frame maximal matching restricted to pairs with IOU >= threshold.
ConfusionCounts confusion_counts(const FrameSeries& estimated, const FrameSeries& truth, double iou_threshold = 0.5);

struct PrecisionRecall {
  double precision = 1.0;
  double recall = 1.0;
};

/// Each ratio is 1 when its denominator is 0.
PrecisionRecall precision_recall(const ConfusionCounts& c);

/// AP at one IOU threshold with all-point interpolation. Detections are
/// ranked by confidence and greedily matched to unused ground truth in their
/// frame. Returns 0 without ground truth unless there are also no detections.
double average_precision(const FrameSeries& detections, const FrameSeries& truth, double iou_threshold = 0.5);

struct ClearMot {
  double mota = 0.0;
  double motp = 0.0;  // mean IOU of matched pairs, 0 without matches
  std::size_t id_switches = 0;
  std::size_t matches = 0;
  std::size_t false_positives = 0;
  std::size_t misses = 0;
  std::size_t truth_total = 0;
};

/// CLEAR-MOT with match persistence. Throws Error(kUndefined) when the
/// ground truth is empty.
ClearMot clear_mot(const FrameSeries& tracks, const FrameSeries& truth, double iou_threshold = 0.5);

/// Identity F1 under the best one-to-one trajectory assignment.
double idf1(const FrameSeries& tracks, const FrameSeries& truth, double iou_threshold = 0.5);

/// Average tracking accuracy (STDA over the mean trajectory count).
double ata(const FrameSeries& tracks, const FrameSeries& truth, double iou_threshold = 0.5);

/// Exhaustive-assignment variants of idf1/ata for cross-checking (at most
/// 7 trajectories on each side).
double idf1_brute_force(const FrameSeries& tracks, const FrameSeries& truth, double iou_threshold = 0.5);
double ata_brute_force(const FrameSeries& tracks, const FrameSeries& truth, double iou_threshold = 0.5);

struct BaselineScores {
  // Detector measures, computed on the detection set.
  double ap50 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  ConfusionCounts counts;
  // Tracker measures, computed on the tracker output.
  std::optional<double> mota;  // unset when the ground truth is empty
  std::optional<double> motp;
  double idf1 = 0.0;
  double ata = 0.0;
  std::size_t idsw_total = 0;
};

BaselineScores compute_baselines(const EvaluationBundle& bundle, double iou_threshold = 0.5);

}  // namespace tem
