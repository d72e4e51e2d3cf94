#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "tem/kvconfig.hpp"
#include "tem/mot_io.hpp"

namespace tem {

enum class ConfidenceModel {
  /// Kept boxes score 0.5 + 0.5 * IOU with their source; spurious boxes draw from [0.05, 0.5).
  kQualityLinked,
  /// Every box draws its confidence from [0, 1).
  kUniform,
};

/// Recipe for degrading ground truth into a synthetic detection set.
struct PerturbationProfile {
  std::string name;
  double drop_prob = 0.0;      // per-box miss rate
  double fp_per_frame = 0.0;   // Poisson mean of spurious boxes per frame
  double jitter_sigma = 0.0;   // noise std-dev as a fraction of box size
  ConfidenceModel confidence_model = ConfidenceModel::kQualityLinked;
  std::uint64_t seed = 0;
};

void validate(const PerturbationProfile& profile);

/// The five preset profiles P1 (permissive, noisy) ... P5 (conservative, sparse).
std::vector<PerturbationProfile> builtin_profiles();
/// Preset by name; throws for unknown names.
PerturbationProfile builtin_profile(std::string_view name);
/// Reads `[profile.<name>]`, falling back to the preset of the same name for
/// missing keys when one exists.
PerturbationProfile load_profile(const KvConfig& config, const std::string& name);

/// Drops, jitters and pads the ground truth into a detection set. Identities
/// are stripped. Deterministic for a given profile seed; each frame draws
/// from its own derived stream.
FrameSeries perturb(const FrameSeries& ground_truth, const SequenceMeta& meta, const PerturbationProfile& profile);

/// Swaps the labels of two co-occurring tracks from a frame onward, with
/// probability `switch_prob` per frame. Boxes are never touched. For a fixed
/// seed, the frames switched at a lower rate are a subset of those switched
/// at a higher one.
FrameSeries inject_id_switches(const FrameSeries& tracks, double switch_prob, std::uint64_t seed);

struct TrackerConfig {
  std::string name;
  double match_gate = 0.3;         // minimum IOU to extend a track
  int max_age = 1;                 // frames a confirmed track survives unmatched
  int min_hits = 3;                // consecutive hits before a track is emitted
  int interpolate_gaps_up_to = 0;  // fill gaps of at most this many frames
};

void validate(const TrackerConfig& config);

/// Presets: "sort" (short memory, no gap filling), "interp" (long memory
/// with gap filling) and "permissive" (emits every detection).
std::vector<TrackerConfig> builtin_tracker_configs();
TrackerConfig builtin_tracker_config(std::string_view name);
/// Reads `[tracker.<name>]`, with preset fallback like load_profile.
TrackerConfig load_tracker_config(const KvConfig& config, const std::string& name);

/// IOU tracker with constant-position prediction and Hungarian association.
/// Tentative tracks die on their first miss; once confirmed a track's whole
/// history is emitted under an identity assigned in confirmation order.
FrameSeries reference_track(const FrameSeries& detections, const TrackerConfig& config);

struct SceneSpec {
  std::string name = "synthetic";
  int frames = 150;
  int objects = 12;
  double image_width = 1920.0;
  double image_height = 1080.0;
  std::uint64_t seed = 1;
};

struct SyntheticSequence {
  SequenceMeta meta;
  FrameSeries ground_truth;
};

/// Pedestrian-like boxes on straight paths with staggered entry and exit.
SyntheticSequence generate_scene(const SceneSpec& spec);

}  // namespace tem
