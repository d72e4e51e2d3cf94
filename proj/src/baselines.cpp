#include "tem/baselines.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "tem/assignment.hpp"
#include "tem/error.hpp"

namespace tem {
namespace {

void check_threshold(double t) {
  if (!(t > 0.0 && t <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "IOU threshold must lie in (0, 1]");
}

void check_lengths(const FrameSeries& a, const FrameSeries& b) {
  if (a.frame_count() != b.frame_count()) {
    throw Error(ErrorCode::kInvalidArgument, "estimated and ground-truth series differ in frame count");
  }
}

// Overlap statistics between every ground-truth and every tracker trajectory.
struct TrajectoryOverlap {
  std::vector<int> truth_ids;
  std::vector<int> track_ids;
  std::vector<std::size_t> truth_len;
  std::vector<std::size_t> track_len;
  std::vector<std::size_t> hits;      // frames both exist with IOU >= threshold, truth-major
  std::vector<std::size_t> together;  // frames both exist

  std::size_t index(std::size_t g, std::size_t t) const { return g * track_ids.size() + t; }
};

std::vector<int> sorted_ids(const FrameSeries& s) {
  std::vector<int> ids;
  for (int k = 1; k <= s.frame_count(); ++k) {
    for (const auto& o : s.at(k)) ids.push_back(o.identity.value_or(-1));
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

TrajectoryOverlap trajectory_overlap(const FrameSeries& tracks, const FrameSeries& truth, double thr) {
  TrajectoryOverlap ov;
  ov.truth_ids = sorted_ids(truth);
  ov.track_ids = sorted_ids(tracks);
  ov.truth_len.assign(ov.truth_ids.size(), 0);
  ov.track_len.assign(ov.track_ids.size(), 0);
  ov.hits.assign(ov.truth_ids.size() * ov.track_ids.size(), 0);
  ov.together.assign(ov.hits.size(), 0);
  auto pos = [](const std::vector<int>& ids, const Observation& o) {
    return static_cast<std::size_t>(std::lower_bound(ids.begin(), ids.end(), o.identity.value_or(-1)) - ids.begin());
  };
  for (int k = 1; k <= truth.frame_count(); ++k) {
    for (const auto& g : truth.at(k)) ++ov.truth_len[pos(ov.truth_ids, g)];
    for (const auto& t : tracks.at(k)) ++ov.track_len[pos(ov.track_ids, t)];
    for (const auto& g : truth.at(k)) {
      const std::size_t gi = pos(ov.truth_ids, g);
      for (const auto& t : tracks.at(k)) {
        const std::size_t ti = pos(ov.track_ids, t);
        ++ov.together[ov.index(gi, ti)];
        if (iou(g.box, t.box) >= thr) ++ov.hits[ov.index(gi, ti)];
      }
    }
  }
  return ov;
}

// Pairs with zero gain are infeasible; cost = 1 - gain / max_gain.
template <typename Gain>
CostMatrix gain_matrix(const TrajectoryOverlap& ov, Gain gain) {
  CostMatrix m(ov.truth_ids.size(), ov.track_ids.size());
  double top = 0.0;
  for (std::size_t g = 0; g < m.rows(); ++g) {
    for (std::size_t t = 0; t < m.cols(); ++t) top = std::max(top, gain(g, t));
  }
  for (std::size_t g = 0; g < m.rows(); ++g) {
    for (std::size_t t = 0; t < m.cols(); ++t) {
      const double v = gain(g, t);
      m.set(g, t, top > 0.0 ? 1.0 - v / top : 1.0, v > 0.0);
    }
  }
  return m;
}

template <typename Solver>
double idf1_with(const FrameSeries& tracks, const FrameSeries& truth, double thr, Solver solve) {
  check_threshold(thr);
  check_lengths(tracks, truth);
  const TrajectoryOverlap ov = trajectory_overlap(tracks, truth, thr);
  const std::size_t n_truth = truth.total();
  const std::size_t n_track = tracks.total();
  if (n_truth + n_track == 0) return 1.0;
  auto gain = [&](std::size_t g, std::size_t t) { return static_cast<double>(ov.hits[ov.index(g, t)]); };
  const Assignment a = solve(gain_matrix(ov, gain));
  std::size_t idtp = 0;
  for (const auto& p : a.pairs) idtp += ov.hits[ov.index(p.row, p.col)];
  return 2.0 * static_cast<double>(idtp) / static_cast<double>(n_truth + n_track);
}

template <typename Solver>
double ata_with(const FrameSeries& tracks, const FrameSeries& truth, double thr, Solver solve) {
  check_threshold(thr);
  check_lengths(tracks, truth);
  const TrajectoryOverlap ov = trajectory_overlap(tracks, truth, thr);
  const std::size_t count = ov.truth_ids.size() + ov.track_ids.size();
  if (count == 0) return 1.0;
  auto score = [&](std::size_t g, std::size_t t) {
    const std::size_t i = ov.index(g, t);
    const std::size_t either = ov.truth_len[g] + ov.track_len[t] - ov.together[i];
    return either == 0 ? 0.0 : static_cast<double>(ov.hits[i]) / static_cast<double>(either);
  };
  const Assignment a = solve(gain_matrix(ov, score));
  double stda = 0.0;
  for (const auto& p : a.pairs) stda += score(p.row, p.col);
  return stda / (static_cast<double>(count) / 2.0);
}

Assignment solve_hungarian(const CostMatrix& m) { return hungarian_solve(m, AssignmentPolicy::kMaxSimilarity); }
Assignment solve_brute(const CostMatrix& m) { return brute_force_assign(m, AssignmentPolicy::kMaxSimilarity); }

}  // namespace

ConfusionCounts confusion_counts(const FrameSeries& estimated, const FrameSeries& truth, double iou_threshold) {
  check_threshold(iou_threshold);
  check_lengths(estimated, truth);
  ConfusionCounts c;
  for (int k = 1; k <= truth.frame_count(); ++k) {
    const auto est = boxes_of(estimated.at(k));
    const auto gt = boxes_of(truth.at(k));
    const std::size_t tp = hungarian_solve(build_iou_cost_at_least(est, gt, iou_threshold)).pair_count();
    c.tp += tp;
    c.fp += est.size() - tp;
    c.fn += gt.size() - tp;
  }
  return c;
}

PrecisionRecall precision_recall(const ConfusionCounts& c) {
  PrecisionRecall pr;
  if (c.tp + c.fp > 0) pr.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn > 0) pr.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  return pr;
}

double average_precision(const FrameSeries& detections, const FrameSeries& truth, double iou_threshold) {
  check_threshold(iou_threshold);
  check_lengths(detections, truth);
  const std::size_t n_truth = truth.total();
  const std::size_t n_det = detections.total();
  if (n_truth == 0) return n_det == 0 ? 1.0 : 0.0;
  if (n_det == 0) return 0.0;

  struct Ranked {
    int frame;
    std::size_t index;
    double confidence;
  };
  std::vector<Ranked> ranked;
  ranked.reserve(n_det);
  for (int k = 1; k <= detections.frame_count(); ++k) {
    for (std::size_t i = 0; i < detections.at(k).size(); ++i) {
      ranked.push_back({k, i, detections.at(k)[i].confidence});
    }
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const Ranked& a, const Ranked& b) { return a.confidence > b.confidence; });

  std::vector<std::vector<char>> used(static_cast<std::size_t>(truth.frame_count()));
  for (int k = 1; k <= truth.frame_count(); ++k) used[k - 1].assign(truth.at(k).size(), 0);

  std::vector<double> precision(n_det), recall(n_det);
  std::size_t tp = 0;
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    const auto& det = detections.at(ranked[r].frame)[ranked[r].index];
    const auto& gts = truth.at(ranked[r].frame);
    auto& taken = used[ranked[r].frame - 1];
    double best = 0.0;
    std::size_t best_idx = gts.size();
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[g]) continue;
      const double o = iou(det.box, gts[g].box);
      if (o > best) {
        best = o;
        best_idx = g;
      }
    }
    if (best_idx < gts.size() && best >= iou_threshold) {
      taken[best_idx] = 1;
      ++tp;
    }
    precision[r] = static_cast<double>(tp) / static_cast<double>(r + 1);
    recall[r] = static_cast<double>(tp) / static_cast<double>(n_truth);
  }

  // Precision envelope from the right, then area over recall steps.
  for (std::size_t r = n_det - 1; r > 0; --r) precision[r - 1] = std::max(precision[r - 1], precision[r]);
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t r = 0; r < n_det; ++r) {
    if (recall[r] > prev_recall) {
      ap += (recall[r] - prev_recall) * precision[r];
      prev_recall = recall[r];
    }
  }
  return std::clamp(ap, 0.0, 1.0);
}

ClearMot clear_mot(const FrameSeries& tracks, const FrameSeries& truth, double iou_threshold) {
  check_threshold(iou_threshold);
  check_lengths(tracks, truth);
  ClearMot out;
  std::map<int, int> last_known;  // truth id -> tracker id of the latest match
  std::map<int, int> previous;    // matches of the previous frame
  double iou_sum = 0.0;

  for (int k = 1; k <= truth.frame_count(); ++k) {
    const auto& gts = truth.at(k);
    const auto& trks = tracks.at(k);
    std::vector<char> gt_done(gts.size(), 0), trk_done(trks.size(), 0);
    std::map<int, int> current;

    auto record = [&](std::size_t g, std::size_t t, double o) {
      gt_done[g] = trk_done[t] = 1;
      current[*gts[g].identity] = *trks[t].identity;
      iou_sum += o;
      ++out.matches;
    };

    // Keep last frame's correspondences that are still valid.
    for (std::size_t g = 0; g < gts.size(); ++g) {
      auto it = previous.find(*gts[g].identity);
      if (it == previous.end()) continue;
      for (std::size_t t = 0; t < trks.size(); ++t) {
        if (trk_done[t] || *trks[t].identity != it->second) continue;
        const double o = iou(gts[g].box, trks[t].box);
        if (o >= iou_threshold) record(g, t, o);
        break;
      }
    }

    std::vector<std::size_t> gt_left, trk_left;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (!gt_done[g]) gt_left.push_back(g);
    }
    for (std::size_t t = 0; t < trks.size(); ++t) {
      if (!trk_done[t]) trk_left.push_back(t);
    }
    CostMatrix m(gt_left.size(), trk_left.size());
    for (std::size_t i = 0; i < gt_left.size(); ++i) {
      for (std::size_t j = 0; j < trk_left.size(); ++j) {
        const double o = iou(gts[gt_left[i]].box, trks[trk_left[j]].box);
        m.set(i, j, 1.0 - o, o >= iou_threshold && o > 0.0);
      }
    }
    for (const auto& p : hungarian_solve(m).pairs) {
      const std::size_t g = gt_left[p.row];
      const std::size_t t = trk_left[p.col];
      const int gid = *gts[g].identity;
      const int tid = *trks[t].identity;
      auto it = last_known.find(gid);
      if (it != last_known.end() && it->second != tid) ++out.id_switches;
      record(g, t, 1.0 - p.cost);
    }
    for (const auto& [gid, tid] : current) last_known[gid] = tid;

    out.truth_total += gts.size();
    out.misses += static_cast<std::size_t>(std::count(gt_done.begin(), gt_done.end(), 0));
    out.false_positives += static_cast<std::size_t>(std::count(trk_done.begin(), trk_done.end(), 0));
    previous = std::move(current);
  }

  if (out.truth_total == 0) throw Error(ErrorCode::kUndefined, "MOTA is undefined without ground truth");
  out.mota = 1.0 - static_cast<double>(out.misses + out.false_positives + out.id_switches) /
                       static_cast<double>(out.truth_total);
  out.motp = out.matches == 0 ? 0.0 : iou_sum / static_cast<double>(out.matches);
  return out;
}

double idf1(const FrameSeries& tracks, const FrameSeries& truth, double iou_threshold) {
  return idf1_with(tracks, truth, iou_threshold, solve_hungarian);
}

double ata(const FrameSeries& tracks, const FrameSeries& truth, double iou_threshold) {
  return ata_with(tracks, truth, iou_threshold, solve_hungarian);
}

double idf1_brute_force(const FrameSeries& tracks, const FrameSeries& truth, double iou_threshold) {
  return idf1_with(tracks, truth, iou_threshold, solve_brute);
}

double ata_brute_force(const FrameSeries& tracks, const FrameSeries& truth, double iou_threshold) {
  return ata_with(tracks, truth, iou_threshold, solve_brute);
}

BaselineScores compute_baselines(const EvaluationBundle& bundle, double iou_threshold) {
  BaselineScores s;
  s.counts = confusion_counts(bundle.detections, bundle.ground_truth, iou_threshold);
  const PrecisionRecall pr = precision_recall(s.counts);
  s.precision = pr.precision;
  s.recall = pr.recall;
  s.ap50 = average_precision(bundle.detections, bundle.ground_truth, iou_threshold);
  if (bundle.ground_truth.total() > 0) {
    const ClearMot cm = clear_mot(bundle.tracks, bundle.ground_truth, iou_threshold);
    s.mota = cm.mota;
    s.motp = cm.motp;
    s.idsw_total = cm.id_switches;
  }
  s.idf1 = idf1(bundle.tracks, bundle.ground_truth, iou_threshold);
  s.ata = ata(bundle.tracks, bundle.ground_truth, iou_threshold);
  return s;
}

}  // namespace tem
