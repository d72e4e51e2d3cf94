#pragma once

#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "tem/mot_io.hpp"

namespace tem {

/// Per-frame quality of an estimated box set against ground truth.
struct FrameQuality {
  double similarity = 0.0;   // 1 - (matched cost / matched pairs)
  double cardinality = 0.0;  // 1 - |#truth - #estimated| / max(#truth, #estimated)
  double quality = 0.0;      // similarity * cardinality
};

struct FrameIntraResult {
  int frame = 0;
  FrameQuality detector;
  FrameQuality tracker;
  double effort = 0.0;  // tracker.quality - detector.quality, in [-1, 1]
};

struct FrameInterResult {
  int frame = 0;  // k >= 2, compares k-1 with k
  double detector_association = 0.0;
  double tracker_association = 0.0;
  double association_gain = 0.0;  // tracker - detector association, in [-1, 1]
  std::size_t tracker_pairs = 0;  // boxes linked between k-1 and k in the tracker output
  std::size_t truth_ids = 0;      // size of the ground-truth identity set used for the weight
  double cardinality_weight = 0.0;
  std::size_t id_switches = 0;
  double idsw_score = 0.0;
  double effort = 0.0;  // gain + weight * idsw_score, in [-1, 2]
};

enum class IdSetMode { kUnion, kIntersection };

struct TemOptions {
  double alpha = 0.5;
  IdSetMode id_mode = IdSetMode::kUnion;
};

struct TemScores {
  double e_intra = 0.0;
  double e_inter = 0.0;
  double alpha = 0.5;
  double tem = 0.0;
  std::vector<FrameIntraResult> per_frame_intra;
  std::vector<FrameInterResult> per_frame_inter;
  std::vector<std::string> warnings;
};

// Empty-set conventions, used consistently below:
//   no boxes on either side        -> similarity 1, cardinality 1
//   boxes exist but nothing links  -> similarity 0
//   association with no links      -> 0, or 1 when both frames are empty
//   no tracker links for IDSW      -> idsw score 1
//   no identities and no links     -> cardinality weight 1

FrameQuality frame_quality(std::span<const Box> estimated, std::span<const Box> truth);

FrameIntraResult intra_frame_effort(std::span<const Box> detections, std::span<const Box> tracks,
                                    std::span<const Box> truth, int frame = 0);

struct SequenceIntra {
  double mean = 0.0;
  std::vector<FrameIntraResult> frames;
};

/// Averages the per-frame intra effort over all K frames.
SequenceIntra sequence_intra(const EvaluationBundle& bundle);

struct AssociationQuality {
  double value = 0.0;
  double total_cost = 0.0;
  std::size_t pairs = 0;
};

/// How well boxes link between consecutive frames: 1 - cost / pairs.
AssociationQuality association_quality(std::span<const Box> previous, std::span<const Box> current);

double association_improvement(std::span<const Box> det_prev, std::span<const Box> det_cur,
                               std::span<const Box> trk_prev, std::span<const Box> trk_cur);

/// Ground-truth objects matched to a tracker box in both frames whose
/// tracker identity differs between k-1 and k.
std::size_t count_id_switches(const std::vector<Observation>& truth_prev, const std::vector<Observation>& truth_cur,
                              const std::vector<Observation>& tracks_prev,
                              const std::vector<Observation>& tracks_cur);

/// 1 - switches / pairs, clamped to [0, 1]; 1 when there are no pairs.
double idsw_score(std::size_t switches, std::size_t tracker_pairs);

/// Size of the identity set for the weight: union (default) or intersection.
std::size_t truth_id_count(const std::set<int>& ids_prev, const std::set<int>& ids_cur, IdSetMode mode);

double cardinality_weight(const std::set<int>& ids_prev, const std::set<int>& ids_cur, std::size_t tracker_pairs,
                          IdSetMode mode = IdSetMode::kUnion);

FrameInterResult inter_frame_effort(const EvaluationBundle& bundle, int frame, IdSetMode mode = IdSetMode::kUnion);

struct SequenceInter {
  double mean = 0.0;
  std::vector<FrameInterResult> frames;
  bool single_frame = false;  // K == 1: no frame pairs, mean reported as 0
};

SequenceInter sequence_inter(const EvaluationBundle& bundle, IdSetMode mode = IdSetMode::kUnion);

/// alpha * e_intra + (1 - alpha) * e_inter. Throws for alpha outside [0, 1].
double tem_score(double e_intra, double e_inter, double alpha = 0.5);

TemScores evaluate_tem(const EvaluationBundle& bundle, const TemOptions& options = {});

}  // namespace tem
