#include "tem/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "tem/assignment.hpp"
#include "tem/error.hpp"
#include "tem/rng.hpp"

namespace tem {
namespace {

ConfidenceModel parse_confidence_model(const std::string& text) {
  if (text == "quality_linked" || text == "QUALITY_LINKED") return ConfidenceModel::kQualityLinked;
  if (text == "uniform" || text == "UNIFORM") return ConfidenceModel::kUniform;
  throw Error(ErrorCode::kParse, "unknown confidence_model '" + text + "'");
}

// Jittered copy of `b`; sizes stay >= 1 px and the box stays within a
// window four times the image size, centred on the image.
Box jitter(const Box& b, double sigma, double width, double height, Xoshiro256& rng) {
  const double n1 = rng.normal(), n2 = rng.normal(), n3 = rng.normal(), n4 = rng.normal();
  if (sigma <= 0.0) return b;
  const double cx = b.left + b.width / 2.0 + sigma * b.width * n1;
  const double cy = b.top + b.height / 2.0 + sigma * b.height * n2;
  double w = std::max(1.0, b.width * (1.0 + sigma * n3));
  double h = std::max(1.0, b.height * (1.0 + sigma * n4));
  Box out{cx - w / 2.0, cy - h / 2.0, w, h};
  if (width > 0.0 && height > 0.0) {
    out.width = std::min(out.width, 4.0 * width);
    out.height = std::min(out.height, 4.0 * height);
    out.left = std::clamp(out.left, -1.5 * width, 2.5 * width - out.width);
    out.top = std::clamp(out.top, -1.5 * height, 2.5 * height - out.height);
  }
  return out;
}

// Image extent used to place spurious boxes when the metadata lacks one.
std::pair<double, double> scene_extent(const FrameSeries& gt, const SequenceMeta& meta) {
  if (meta.image_width > 0.0 && meta.image_height > 0.0) return {meta.image_width, meta.image_height};
  double w = 0.0, h = 0.0;
  for (int k = 1; k <= gt.frame_count(); ++k) {
    for (const auto& o : gt.at(k)) {
      w = std::max(w, o.box.right());
      h = std::max(h, o.box.bottom());
    }
  }
  if (w <= 0.0 || h <= 0.0) return {1920.0, 1080.0};
  return {w, h};
}

}  // namespace

void validate(const PerturbationProfile& p) {
  if (!(p.drop_prob >= 0.0 && p.drop_prob <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "drop_prob must lie in [0, 1]");
  if (!(p.fp_per_frame >= 0.0) || !std::isfinite(p.fp_per_frame)) {
    throw Error(ErrorCode::kInvalidArgument, "fp_per_frame must be >= 0");
  }
  if (!(p.jitter_sigma >= 0.0) || !std::isfinite(p.jitter_sigma)) {
    throw Error(ErrorCode::kInvalidArgument, "jitter_sigma must be >= 0");
  }
}

std::vector<PerturbationProfile> builtin_profiles() {
  return {
      {"P1", 0.10, 25.0, 0.16, ConfidenceModel::kQualityLinked, 101},
      {"P2", 0.06, 10.0, 0.10, ConfidenceModel::kQualityLinked, 102},
      {"P3", 0.03, 0.5, 0.03, ConfidenceModel::kQualityLinked, 103},
      {"P4", 0.35, 0.3, 0.06, ConfidenceModel::kQualityLinked, 104},
      {"P5", 0.70, 0.1, 0.05, ConfidenceModel::kQualityLinked, 105},
  };
}

PerturbationProfile builtin_profile(std::string_view name) {
  for (auto& p : builtin_profiles()) {
    if (p.name == name) return p;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown profile '" + std::string(name) + "'");
}

PerturbationProfile load_profile(const KvConfig& config, const std::string& name) {
  const std::string section = "profile." + name;
  PerturbationProfile p;
  bool preset = false;
  for (auto& b : builtin_profiles()) {
    if (b.name == name) {
      p = b;
      preset = true;
    }
  }
  if (!config.has_section(section) && !preset) {
    throw Error(ErrorCode::kInvalidArgument, "no [" + section + "] section and no preset named '" + name + "'");
  }
  p.name = name;
  if (auto v = config.get_double(section, "drop_prob")) p.drop_prob = *v;
  if (auto v = config.get_double(section, "fp_per_frame")) p.fp_per_frame = *v;
  if (auto v = config.get_double(section, "jitter_sigma")) p.jitter_sigma = *v;
  if (auto v = config.get_string(section, "confidence_model")) p.confidence_model = parse_confidence_model(*v);
  if (auto v = config.get_int(section, "seed")) p.seed = static_cast<std::uint64_t>(*v);
  validate(p);
  return p;
}

FrameSeries perturb(const FrameSeries& ground_truth, const SequenceMeta& meta, const PerturbationProfile& profile) {
  validate(profile);
  const auto [width, height] = scene_extent(ground_truth, meta);
  const bool bounded = meta.image_width > 0.0 && meta.image_height > 0.0;
  FrameSeries out(ground_truth.frame_count());

  for (int k = 1; k <= ground_truth.frame_count(); ++k) {
    Xoshiro256 rng(derive_seed(profile.seed, static_cast<std::uint64_t>(k)));
    auto& frame = out.at(k);
    for (const auto& gt : ground_truth.at(k)) {
      // Fixed number of draws per box keeps streams aligned across profiles.
      const double drop_draw = rng.uniform();
      const Box box = jitter(gt.box, profile.jitter_sigma, bounded ? width : 0.0, bounded ? height : 0.0, rng);
      const double conf_draw = rng.uniform();
      if (drop_draw < profile.drop_prob) continue;
      Observation det;
      det.frame = k;
      det.box = box;
      det.confidence = profile.confidence_model == ConfidenceModel::kQualityLinked ? 0.5 + 0.5 * iou(box, gt.box)
                                                                                   : conf_draw;
      frame.push_back(det);
    }
    const unsigned spurious = rng.poisson(profile.fp_per_frame);
    for (unsigned i = 0; i < spurious; ++i) {
      const double h = rng.uniform(0.08, 0.3) * height;
      const double w = h * rng.uniform(0.35, 0.5);
      Observation det;
      det.frame = k;
      det.box = Box{rng.uniform(0.0, std::max(1.0, width - w)), rng.uniform(0.0, std::max(1.0, height - h)), w, h};
      const double conf_draw = rng.uniform();
      det.confidence = profile.confidence_model == ConfidenceModel::kQualityLinked ? 0.05 + 0.45 * conf_draw
                                                                                   : conf_draw;
      frame.push_back(det);
    }
  }
  out.canonicalize();
  return out;
}

FrameSeries inject_id_switches(const FrameSeries& tracks, double switch_prob, std::uint64_t seed) {
  if (!(switch_prob >= 0.0 && switch_prob <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "switch probability must lie in [0, 1]");
  }
  FrameSeries out = tracks;
  std::map<int, int> label;  // original identity -> emitted identity
  auto current = [&label](int id) {
    auto it = label.find(id);
    return it == label.end() ? id : it->second;
  };

  for (int k = 1; k <= tracks.frame_count(); ++k) {
    // Rows ordered by original identity so the chosen pair does not depend
    // on earlier swaps.
    std::vector<int> ids;
    for (const auto& o : tracks.at(k)) {
      if (o.identity) ids.push_back(*o.identity);
    }
    std::sort(ids.begin(), ids.end());

    Xoshiro256 rng(derive_seed(seed, static_cast<std::uint64_t>(k)));
    const double draw = rng.uniform();
    if (ids.size() >= 2 && draw < switch_prob) {
      const std::size_t i = rng.below(ids.size());
      std::size_t j = rng.below(ids.size() - 1);
      if (j >= i) ++j;
      const int a = current(ids[i]);
      const int b = current(ids[j]);
      label[ids[i]] = b;
      label[ids[j]] = a;
    }
    for (auto& o : out.at(k)) {
      if (o.identity) o.identity = current(*o.identity);
    }
  }
  return out;
}

void validate(const TrackerConfig& c) {
  if (!(c.match_gate > 0.0 && c.match_gate < 1.0)) throw Error(ErrorCode::kInvalidArgument, "match_gate must lie in (0, 1)");
  if (c.max_age < 0) throw Error(ErrorCode::kInvalidArgument, "max_age must be >= 0");
  if (c.min_hits < 1) throw Error(ErrorCode::kInvalidArgument, "min_hits must be >= 1");
  if (c.interpolate_gaps_up_to < 0 || c.interpolate_gaps_up_to > c.max_age) {
    throw Error(ErrorCode::kInvalidArgument, "interpolate_gaps_up_to must lie in [0, max_age]");
  }
}

std::vector<TrackerConfig> builtin_tracker_configs() {
  return {
      {"sort", 0.3, 1, 3, 0},
      {"interp", 0.3, 8, 2, 8},
      {"permissive", 0.1, 0, 1, 0},
  };
}

TrackerConfig builtin_tracker_config(std::string_view name) {
  for (auto& c : builtin_tracker_configs()) {
    if (c.name == name) return c;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown tracker config '" + std::string(name) + "'");
}

TrackerConfig load_tracker_config(const KvConfig& config, const std::string& name) {
  const std::string section = "tracker." + name;
  TrackerConfig c;
  bool preset = false;
  for (auto& b : builtin_tracker_configs()) {
    if (b.name == name) {
      c = b;
      preset = true;
    }
  }
  if (!config.has_section(section) && !preset) {
    throw Error(ErrorCode::kInvalidArgument, "no [" + section + "] section and no preset named '" + name + "'");
  }
  c.name = name;
  if (auto v = config.get_double(section, "match_gate")) c.match_gate = *v;
  if (auto v = config.get_int(section, "max_age")) c.max_age = static_cast<int>(*v);
  if (auto v = config.get_int(section, "min_hits")) c.min_hits = static_cast<int>(*v);
  if (auto v = config.get_int(section, "interpolate_gaps_up_to")) c.interpolate_gaps_up_to = static_cast<int>(*v);
  validate(c);
  return c;
}

FrameSeries reference_track(const FrameSeries& detections, const TrackerConfig& config) {
  validate(config);

  struct LiveTrack {
    int id = 0;  // 0 while tentative
    Box box;
    double confidence = 1.0;
    int last_frame = 0;
    int hits = 0;
    std::vector<Observation> history;
  };
  std::vector<LiveTrack> live;
  std::vector<LiveTrack> finished;
  int next_id = 1;

  auto confirm_if_ready = [&](LiveTrack& t) {
    if (t.id == 0 && t.hits >= config.min_hits) t.id = next_id++;
  };

  for (int k = 1; k <= detections.frame_count(); ++k) {
    const auto& dets = detections.at(k);
    CostMatrix m(live.size(), dets.size());
    for (std::size_t i = 0; i < live.size(); ++i) {
      for (std::size_t j = 0; j < dets.size(); ++j) {
        const double o = iou(live[i].box, dets[j].box);
        m.set(i, j, 1.0 - o, o >= config.match_gate && o > 0.0);
      }
    }
    const Assignment a = hungarian_solve(m);

    std::vector<char> track_hit(live.size(), 0), det_used(dets.size(), 0);
    for (const auto& p : a.pairs) {
      LiveTrack& t = live[p.row];
      const Observation& d = dets[p.col];
      track_hit[p.row] = det_used[p.col] = 1;
      const int gap = k - t.last_frame - 1;
      if (gap > 0 && gap <= config.interpolate_gaps_up_to) {
        for (int f = 1; f <= gap; ++f) {
          const double s = static_cast<double>(f) / static_cast<double>(gap + 1);
          Observation fill;
          fill.frame = t.last_frame + f;
          fill.box = Box{t.box.left + s * (d.box.left - t.box.left), t.box.top + s * (d.box.top - t.box.top),
                         t.box.width + s * (d.box.width - t.box.width),
                         t.box.height + s * (d.box.height - t.box.height)};
          fill.confidence = t.confidence + s * (d.confidence - t.confidence);
          t.history.push_back(fill);
        }
      }
      Observation obs;
      obs.frame = k;
      obs.box = d.box;
      obs.confidence = d.confidence;
      t.history.push_back(obs);
      t.box = d.box;
      t.confidence = d.confidence;
      t.last_frame = k;
      ++t.hits;
      confirm_if_ready(t);
    }

    std::vector<LiveTrack> survivors;
    survivors.reserve(live.size() + dets.size());
    for (std::size_t i = 0; i < live.size(); ++i) {
      LiveTrack& t = live[i];
      const bool keep = track_hit[i] || (t.id != 0 && k - t.last_frame <= config.max_age);
      if (keep) {
        survivors.push_back(std::move(t));
      } else if (t.id != 0) {
        finished.push_back(std::move(t));
      }
    }
    for (std::size_t j = 0; j < dets.size(); ++j) {
      if (det_used[j]) continue;
      LiveTrack t;
      t.box = dets[j].box;
      t.confidence = dets[j].confidence;
      t.last_frame = k;
      t.hits = 1;
      Observation obs;
      obs.frame = k;
      obs.box = dets[j].box;
      obs.confidence = dets[j].confidence;
      t.history.push_back(obs);
      confirm_if_ready(t);
      survivors.push_back(std::move(t));
    }
    live = std::move(survivors);
  }
  for (auto& t : live) {
    if (t.id != 0) finished.push_back(std::move(t));
  }

  FrameSeries out(detections.frame_count());
  for (const auto& t : finished) {
    for (Observation o : t.history) {
      o.identity = t.id;
      out.at(o.frame).push_back(o);
    }
  }
  out.canonicalize();
  return out;
}

SyntheticSequence generate_scene(const SceneSpec& spec) {
  if (spec.frames < 1 || spec.objects < 0 || !(spec.image_width > 0.0) || !(spec.image_height > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid scene spec");
  }
  SyntheticSequence seq;
  seq.meta.name = spec.name;
  seq.meta.frame_count = spec.frames;
  seq.meta.image_width = spec.image_width;
  seq.meta.image_height = spec.image_height;
  seq.meta.frame_rate = 30.0;
  seq.ground_truth = FrameSeries(spec.frames);

  Xoshiro256 rng(spec.seed);
  const double W = spec.image_width, H = spec.image_height;
  for (int id = 1; id <= spec.objects; ++id) {
    const int birth = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(1, spec.frames * 3 / 5))));
    const int span = std::max(2, static_cast<int>(rng.uniform(0.3, 1.0) * spec.frames));
    const double h0 = rng.uniform(0.08, 0.22) * H;
    const double aspect = rng.uniform(0.36, 0.46);
    double cx = rng.uniform(0.1, 0.9) * W;
    double cy = rng.uniform(0.3, 0.75) * H;
    const double vx = rng.uniform(-0.004, 0.004) * W;
    const double vy = rng.uniform(-0.0015, 0.0015) * H;
    const double growth = rng.uniform(-0.002, 0.002);
    double h = h0;
    for (int k = birth; k <= spec.frames && k < birth + span; ++k) {
      const double w = h * aspect;
      if (cx < 0.0 || cx > W || cy - h / 2.0 < 0.0 || cy + h / 2.0 > H) break;
      Observation o;
      o.frame = k;
      o.identity = id;
      o.box = Box{cx - w / 2.0, cy - h / 2.0, w, h};
      seq.ground_truth.at(k).push_back(o);
      cx += vx;
      cy += vy;
      h *= 1.0 + growth;
    }
  }
  seq.ground_truth.canonicalize();
  return seq;
}

}  // namespace tem
