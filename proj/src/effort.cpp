#include "tem/effort.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "tem/assignment.hpp"
#include "tem/error.hpp"

namespace tem {
namespace {

double count_agreement(std::size_t reference, std::size_t estimate) {
  const std::size_t hi = std::max(reference, estimate);
  if (hi == 0) return 1.0;
  const std::size_t diff = reference > estimate ? reference - estimate : estimate - reference;
  return 1.0 - static_cast<double>(diff) / static_cast<double>(hi);
}

bool box_less(const Box& a, const Box& b) {
  return std::tie(a.left, a.top, a.width, a.height) < std::tie(b.left, b.top, b.width, b.height);
}

// Matching runs on geometry-sorted copies so results do not depend on the
// order (or identity labels) of the input rows.
std::vector<Box> sorted(std::span<const Box> boxes) {
  std::vector<Box> out(boxes.begin(), boxes.end());
  std::sort(out.begin(), out.end(), box_less);
  return out;
}

std::vector<Observation> sorted_by_box(const std::vector<Observation>& frame) {
  std::vector<Observation> out = frame;
  std::stable_sort(out.begin(), out.end(),
                   [](const Observation& a, const Observation& b) { return box_less(a.box, b.box); });
  return out;
}

std::set<int> identities(const std::vector<Observation>& frame) {
  std::set<int> ids;
  for (const auto& o : frame) {
    if (o.identity) ids.insert(*o.identity);
  }
  return ids;
}

// truth identity -> tracker identity for one frame.
std::map<int, int> truth_to_track(const std::vector<Observation>& truth_rows,
                                  const std::vector<Observation>& track_rows) {
  const auto truth = sorted_by_box(truth_rows);
  const auto tracks = sorted_by_box(track_rows);
  const auto tb = boxes_of(truth);
  const auto kb = boxes_of(tracks);
  const Assignment a = match_boxes(tb, kb);
  std::map<int, int> out;
  for (const auto& p : a.pairs) {
    const auto& g = truth[p.row];
    const auto& t = tracks[p.col];
    if (g.identity && t.identity) out[*g.identity] = *t.identity;
  }
  return out;
}

}  // namespace

FrameQuality frame_quality(std::span<const Box> estimated, std::span<const Box> truth) {
  FrameQuality q;
  if (estimated.empty() && truth.empty()) {
    q.similarity = 1.0;
  } else {
    const Assignment a = match_boxes(sorted(estimated), sorted(truth));
    q.similarity = a.pair_count() == 0 ? 0.0 : 1.0 - a.total_cost / static_cast<double>(a.pair_count());
  }
  q.cardinality = count_agreement(truth.size(), estimated.size());
  q.quality = q.similarity * q.cardinality;
  return q;
}

FrameIntraResult intra_frame_effort(std::span<const Box> detections, std::span<const Box> tracks,
                                    std::span<const Box> truth, int frame) {
  FrameIntraResult r;
  r.frame = frame;
  r.detector = frame_quality(detections, truth);
  r.tracker = frame_quality(tracks, truth);
  r.effort = r.tracker.quality - r.detector.quality;
  return r;
}

SequenceIntra sequence_intra(const EvaluationBundle& bundle) {
  const int K = bundle.meta.frame_count;
  SequenceIntra out;
  out.frames.reserve(static_cast<std::size_t>(K));
  double sum = 0.0;
  for (int k = 1; k <= K; ++k) {
    const auto det = boxes_of(bundle.detections.at(k));
    const auto trk = boxes_of(bundle.tracks.at(k));
    const auto gt = boxes_of(bundle.ground_truth.at(k));
    out.frames.push_back(intra_frame_effort(det, trk, gt, k));
    sum += out.frames.back().effort;
  }
  out.mean = sum / static_cast<double>(K);
  return out;
}

AssociationQuality association_quality(std::span<const Box> previous, std::span<const Box> current) {
  AssociationQuality q;
  if (previous.empty() && current.empty()) {
    q.value = 1.0;
    return q;
  }
  const Assignment a = match_boxes(sorted(previous), sorted(current));
  q.total_cost = a.total_cost;
  q.pairs = a.pair_count();
  q.value = q.pairs == 0 ? 0.0 : 1.0 - q.total_cost / static_cast<double>(q.pairs);
  return q;
}

double association_improvement(std::span<const Box> det_prev, std::span<const Box> det_cur,
                               std::span<const Box> trk_prev, std::span<const Box> trk_cur) {
  return association_quality(trk_prev, trk_cur).value - association_quality(det_prev, det_cur).value;
}

std::size_t count_id_switches(const std::vector<Observation>& truth_prev, const std::vector<Observation>& truth_cur,
                              const std::vector<Observation>& tracks_prev,
                              const std::vector<Observation>& tracks_cur) {
  const auto before = truth_to_track(truth_prev, tracks_prev);
  const auto after = truth_to_track(truth_cur, tracks_cur);
  std::size_t switches = 0;
  for (const auto& [gt_id, trk_id] : after) {
    auto it = before.find(gt_id);
    if (it != before.end() && it->second != trk_id) ++switches;
  }
  return switches;
}

double idsw_score(std::size_t switches, std::size_t tracker_pairs) {
  if (tracker_pairs == 0) return 1.0;
  return std::clamp(1.0 - static_cast<double>(switches) / static_cast<double>(tracker_pairs), 0.0, 1.0);
}

std::size_t truth_id_count(const std::set<int>& ids_prev, const std::set<int>& ids_cur, IdSetMode mode) {
  std::vector<int> merged;
  if (mode == IdSetMode::kUnion) {
    std::set_union(ids_prev.begin(), ids_prev.end(), ids_cur.begin(), ids_cur.end(), std::back_inserter(merged));
  } else {
    std::set_intersection(ids_prev.begin(), ids_prev.end(), ids_cur.begin(), ids_cur.end(),
                          std::back_inserter(merged));
  }
  return merged.size();
}

double cardinality_weight(const std::set<int>& ids_prev, const std::set<int>& ids_cur, std::size_t tracker_pairs,
                          IdSetMode mode) {
  return count_agreement(truth_id_count(ids_prev, ids_cur, mode), tracker_pairs);
}

FrameInterResult inter_frame_effort(const EvaluationBundle& bundle, int frame, IdSetMode mode) {
  if (frame < 2 || frame > bundle.meta.frame_count) {
    throw Error(ErrorCode::kInvalidArgument, "inter-frame effort needs 2 <= k <= K");
  }
  const auto& gt_prev = bundle.ground_truth.at(frame - 1);
  const auto& gt_cur = bundle.ground_truth.at(frame);
  const auto& trk_prev = bundle.tracks.at(frame - 1);
  const auto& trk_cur = bundle.tracks.at(frame);

  FrameInterResult r;
  r.frame = frame;
  const AssociationQuality det =
      association_quality(boxes_of(bundle.detections.at(frame - 1)), boxes_of(bundle.detections.at(frame)));
  const AssociationQuality trk = association_quality(boxes_of(trk_prev), boxes_of(trk_cur));
  r.detector_association = det.value;
  r.tracker_association = trk.value;
  r.association_gain = trk.value - det.value;
  r.tracker_pairs = trk.pairs;

  const auto ids_prev = identities(gt_prev);
  const auto ids_cur = identities(gt_cur);
  r.truth_ids = truth_id_count(ids_prev, ids_cur, mode);
  r.cardinality_weight = count_agreement(r.truth_ids, r.tracker_pairs);
  r.id_switches = count_id_switches(gt_prev, gt_cur, trk_prev, trk_cur);
  r.idsw_score = idsw_score(r.id_switches, r.tracker_pairs);
  r.effort = r.association_gain + r.cardinality_weight * r.idsw_score;
  return r;
}

SequenceInter sequence_inter(const EvaluationBundle& bundle, IdSetMode mode) {
  const int K = bundle.meta.frame_count;
  SequenceInter out;
  if (K < 2) {
    out.single_frame = true;
    return out;
  }
  out.frames.reserve(static_cast<std::size_t>(K - 1));
  double sum = 0.0;
  for (int k = 2; k <= K; ++k) {
    out.frames.push_back(inter_frame_effort(bundle, k, mode));
    sum += out.frames.back().effort;
  }
  out.mean = sum / static_cast<double>(K - 1);
  return out;
}

double tem_score(double e_intra, double e_inter, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "alpha must lie in [0, 1]");
  return alpha * e_intra + (1.0 - alpha) * e_inter;
}

TemScores evaluate_tem(const EvaluationBundle& bundle, const TemOptions& options) {
  TemScores s;
  s.alpha = options.alpha;
  SequenceIntra intra = sequence_intra(bundle);
  SequenceInter inter = sequence_inter(bundle, options.id_mode);
  s.e_intra = intra.mean;
  s.e_inter = inter.mean;
  s.tem = tem_score(s.e_intra, s.e_inter, options.alpha);
  s.per_frame_intra = std::move(intra.frames);
  s.per_frame_inter = std::move(inter.frames);
  if (inter.single_frame) {
    s.warnings.push_back(bundle.meta.name + ": single-frame sequence, inter-frame effort set to 0");
  }
  return s;
}

}  // namespace tem
