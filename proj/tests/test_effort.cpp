#include <algorithm>
#include <map>

#include <gtest/gtest.h>

#include "tem/effort.hpp"
#include "tem/error.hpp"
#include "tem/synth.hpp"
#include "test_util.hpp"

using namespace tem;
using tem::testing::box;
using tem::testing::obs;
using tem::testing::random_bundle;

namespace {

EvaluationBundle make_bundle(int frames) {
  EvaluationBundle b;
  b.meta.frame_count = frames;
  b.ground_truth = FrameSeries(frames);
  b.detections = FrameSeries(frames);
  b.tracks = FrameSeries(frames);
  return b;
}

// Tracker output that equals the ground truth under an identity bijection.
FrameSeries relabeled(const FrameSeries& gt, int offset) {
  FrameSeries out = gt;
  for (int k = 1; k <= out.frame_count(); ++k) {
    for (auto& o : out.at(k)) o.identity = *o.identity * 3 + offset;
  }
  return out;
}

FrameSeries strip_ids(const FrameSeries& s) {
  FrameSeries out = s;
  for (int k = 1; k <= out.frame_count(); ++k) {
    for (auto& o : out.at(k)) o.identity.reset();
  }
  return out;
}

// Arbitrary per-frame identities, as a tracker that links nothing would emit.
FrameSeries with_arbitrary_ids(const FrameSeries& s) {
  FrameSeries out = s;
  for (int k = 1; k <= out.frame_count(); ++k) {
    int id = 1000 * k;
    for (auto& o : out.at(k)) o.identity = id++;
  }
  return out;
}

}  // namespace

TEST(FrameQuality, Examples) {
  const std::vector<Box> two{box(0, 0, 10, 10), box(50, 50, 10, 10)};
  auto q = frame_quality(two, two);
  EXPECT_EQ(q.similarity, 1.0);
  EXPECT_EQ(q.cardinality, 1.0);
  EXPECT_EQ(q.quality, 1.0);

  const std::vector<Box> one{two[1]};
  q = frame_quality(one, two);
  EXPECT_EQ(q.similarity, 1.0);
  EXPECT_DOUBLE_EQ(q.cardinality, 0.5);
  EXPECT_DOUBLE_EQ(q.quality, 0.5);

  const std::vector<Box> truth{box(0, 0, 10, 10)};
  const std::vector<Box> shifted{box(5, 0, 10, 10)};
  q = frame_quality(shifted, truth);
  EXPECT_NEAR(q.similarity, 1.0 / 3.0, 1e-15);
  EXPECT_EQ(q.cardinality, 1.0);
  EXPECT_NEAR(q.quality, 1.0 / 3.0, 1e-15);

  q = frame_quality({}, truth);
  EXPECT_EQ(q.similarity, 0.0);
  EXPECT_EQ(q.cardinality, 0.0);
  EXPECT_EQ(q.quality, 0.0);

  q = frame_quality({}, {});
  EXPECT_EQ(q.quality, 1.0);
}

TEST(FrameQuality, CardinalityUsesAbsoluteDifference) {
  const std::vector<Box> truth{box(0, 0, 10, 10)};
  const std::vector<Box> three{box(0, 0, 10, 10), box(100, 0, 10, 10), box(200, 0, 10, 10)};
  const auto q = frame_quality(three, truth);
  EXPECT_DOUBLE_EQ(q.cardinality, 1.0 - 2.0 / 3.0);
  EXPECT_EQ(q.similarity, 1.0);
}

TEST(IntraFrameEffort, Examples) {
  const std::vector<Box> truth{box(0, 0, 10, 10), box(50, 50, 10, 10)};
  const std::vector<Box> half{truth[1]};
  EXPECT_EQ(intra_frame_effort(half, half, truth).effort, 0.0);
  EXPECT_DOUBLE_EQ(intra_frame_effort(half, truth, truth).effort, 0.5);
  EXPECT_DOUBLE_EQ(intra_frame_effort(truth, {}, truth).effort, -1.0);
}

TEST(AssociationQuality, Examples) {
  const std::vector<Box> prev{box(0, 0, 10, 10), box(40, 0, 10, 10)};
  EXPECT_EQ(association_quality(prev, prev).value, 1.0);
  const std::vector<Box> far{box(300, 300, 10, 10)};
  EXPECT_EQ(association_quality(prev, far).value, 0.0);
  const std::vector<Box> a{box(0, 0, 10, 10)};
  const std::vector<Box> b{box(5, 0, 10, 10)};
  EXPECT_NEAR(association_quality(a, b).value, 1.0 / 3.0, 1e-15);
  EXPECT_EQ(association_quality({}, {}).value, 1.0);
}

TEST(CountIdSwitches, Examples) {
  const std::vector<Observation> gt_prev{obs(1, 1, 0, 0, 10, 10), obs(1, 2, 50, 0, 10, 10)};
  const std::vector<Observation> gt_cur{obs(2, 1, 1, 0, 10, 10), obs(2, 2, 51, 0, 10, 10)};
  auto relabel = [](std::vector<Observation> v, int mul) {
    for (auto& o : v) o.identity = *o.identity * mul;
    return v;
  };
  EXPECT_EQ(count_id_switches(gt_prev, gt_cur, relabel(gt_prev, 7), relabel(gt_cur, 7)), 0u);

  const std::vector<Observation> one_prev{obs(1, 1, 0, 0, 10, 10)};
  const std::vector<Observation> one_cur{obs(2, 1, 0, 0, 10, 10)};
  EXPECT_EQ(count_id_switches(one_prev, one_cur, {obs(1, 4, 0, 0, 10, 10)}, {obs(2, 9, 0, 0, 10, 10)}), 1u);

  const std::vector<Observation> entered{obs(2, 3, 0, 0, 10, 10)};
  EXPECT_EQ(count_id_switches({}, entered, {}, {obs(2, 9, 0, 0, 10, 10)}), 0u);
}

TEST(IdswScore, Values) {
  EXPECT_EQ(idsw_score(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(idsw_score(1, 4), 0.75);
  EXPECT_EQ(idsw_score(5, 3), 0.0);
}

TEST(CardinalityWeight, Examples) {
  const std::set<int> prev{1, 2, 3}, cur{3, 4, 5};
  EXPECT_EQ(truth_id_count(prev, cur, IdSetMode::kUnion), 5u);
  EXPECT_EQ(truth_id_count(prev, cur, IdSetMode::kIntersection), 1u);
  EXPECT_EQ(cardinality_weight(prev, cur, 5), 1.0);
  EXPECT_EQ(cardinality_weight(prev, cur, 0), 0.0);
  EXPECT_DOUBLE_EQ(cardinality_weight(prev, cur, 4), 0.8);
  EXPECT_EQ(cardinality_weight({}, {}, 0), 1.0);
}

TEST(TemScore, Examples) {
  EXPECT_DOUBLE_EQ(tem_score(1, 2, 0.5), 1.5);
  EXPECT_EQ(tem_score(0, 0, 0.5), 0.0);
  EXPECT_DOUBLE_EQ(tem_score(-1, -1, 0.5), -1.0);
  EXPECT_THROW(tem_score(0, 0, 1.5), Error);
}

TEST(SequenceScores, HandWorkedTwoFrames) {
  auto b = make_bundle(2);
  b.ground_truth.at(1) = {obs(1, 1, 0, 0, 10, 10), obs(1, 2, 50, 0, 10, 10)};
  b.ground_truth.at(2) = {obs(2, 1, 0, 0, 10, 10), obs(2, 2, 50, 0, 10, 10)};
  b.detections.at(1) = {obs(1, std::nullopt, 0, 0, 10, 10)};
  b.detections.at(2) = {obs(2, std::nullopt, 50, 0, 10, 10)};
  b.tracks.at(1) = {obs(1, 1, 0, 0, 10, 10), obs(1, 2, 50, 0, 10, 10)};
  b.tracks.at(2) = {obs(2, 1, 0, 0, 10, 10), obs(2, 2, 50, 0, 10, 10)};
  const auto s = evaluate_tem(b);
  // Q_d = 0.5 both frames, Q_t = 1.
  EXPECT_DOUBLE_EQ(s.e_intra, 0.5);
  ASSERT_EQ(s.per_frame_inter.size(), 1u);
  const auto& f = s.per_frame_inter[0];
  EXPECT_EQ(f.detector_association, 0.0);  // detections never overlap across frames
  EXPECT_EQ(f.tracker_association, 1.0);
  EXPECT_EQ(f.association_gain, 1.0);
  EXPECT_EQ(f.tracker_pairs, 2u);
  EXPECT_EQ(f.truth_ids, 2u);
  EXPECT_EQ(f.cardinality_weight, 1.0);
  EXPECT_EQ(f.idsw_score, 1.0);
  EXPECT_EQ(s.e_inter, 2.0);
  EXPECT_DOUBLE_EQ(s.tem, 1.25);
}

TEST(SequenceScores, SingleFrameWarns) {
  auto b = make_bundle(1);
  b.ground_truth.at(1) = {obs(1, 1, 0, 0, 10, 10)};
  const auto s = evaluate_tem(b);
  EXPECT_EQ(s.e_inter, 0.0);
  EXPECT_TRUE(s.per_frame_inter.empty());
  EXPECT_FALSE(s.warnings.empty());
}

TEST(SequenceScores, RangesHoldOnRandomBundles) {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const auto b = random_bundle(seed);
    for (auto mode : {IdSetMode::kUnion, IdSetMode::kIntersection}) {
      const auto s = evaluate_tem(b, TemOptions{0.5, mode});
      for (const auto& f : s.per_frame_intra) {
        for (const auto* q : {&f.detector, &f.tracker}) {
          ASSERT_GE(q->quality, 0.0);
          ASSERT_LE(q->quality, 1.0);
        }
        ASSERT_GE(f.effort, -1.0);
        ASSERT_LE(f.effort, 1.0);
      }
      for (const auto& f : s.per_frame_inter) {
        ASSERT_GE(f.association_gain, -1.0);
        ASSERT_LE(f.association_gain, 1.0);
        ASSERT_GE(f.cardinality_weight, 0.0);
        ASSERT_LE(f.cardinality_weight, 1.0);
        ASSERT_GE(f.idsw_score, 0.0);
        ASSERT_LE(f.idsw_score, 1.0);
        ASSERT_GE(f.effort, -1.0);
        ASSERT_LE(f.effort, 2.0);
      }
      ASSERT_GE(s.tem, -1.0);
      ASSERT_LE(s.tem, 1.5);
    }
  }
}

TEST(SequenceScores, IdentityTrackerIsExactlyZero) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto b = random_bundle(seed);
    b.tracks = with_arbitrary_ids(b.detections);
    const auto s = evaluate_tem(b);
    ASSERT_EQ(s.e_intra, 0.0) << seed;
    for (const auto& f : s.per_frame_intra) ASSERT_EQ(f.effort, 0.0);
    for (const auto& f : s.per_frame_inter) ASSERT_EQ(f.association_gain, 0.0);
  }
}

TEST(SequenceScores, PerfectTracker) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto b = random_bundle(seed);
    b.tracks = relabeled(b.ground_truth, 5);
    const auto s = evaluate_tem(b);
    for (const auto& f : s.per_frame_intra) ASSERT_EQ(f.tracker.quality, 1.0);
    for (const auto& f : s.per_frame_inter) {
      ASSERT_EQ(f.id_switches, 0u);
      ASSERT_EQ(f.idsw_score, 1.0);
    }
  }
}

TEST(SequenceScores, InvariantUnderRelabelingAndRowOrder) {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const auto b = random_bundle(seed);
    auto c = b;
    c.tracks = relabeled(b.tracks, 1);
    c.ground_truth = relabeled(b.ground_truth, 2);
    for (int k = 1; k <= c.meta.frame_count; ++k) {
      std::reverse(c.tracks.at(k).begin(), c.tracks.at(k).end());
      std::reverse(c.detections.at(k).begin(), c.detections.at(k).end());
      std::reverse(c.ground_truth.at(k).begin(), c.ground_truth.at(k).end());
    }
    const auto s1 = evaluate_tem(b);
    const auto s2 = evaluate_tem(c);
    ASSERT_EQ(s1.e_intra, s2.e_intra) << seed;
    ASSERT_EQ(s1.e_inter, s2.e_inter) << seed;
  }
}

TEST(SequenceScores, InvariantUnderCoordinateScaling) {
  auto scale = [](FrameSeries s, double f) {
    for (int k = 1; k <= s.frame_count(); ++k) {
      for (auto& o : s.at(k)) o.box = Box{o.box.left * f, o.box.top * f, o.box.width * f, o.box.height * f};
    }
    return s;
  };
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto b = random_bundle(seed);
    auto c = b;
    c.ground_truth = scale(b.ground_truth, 4.0);
    c.detections = scale(b.detections, 4.0);
    c.tracks = scale(b.tracks, 4.0);
    const auto s1 = evaluate_tem(b);
    const auto s2 = evaluate_tem(c);
    EXPECT_NEAR(s1.tem, s2.tem, 1e-9) << seed;
  }
}

TEST(SequenceScores, IdSwitchInjectionLowersInterEffort) {
  SceneSpec spec;
  spec.frames = 80;
  spec.objects = 10;
  spec.seed = 4;
  const auto scene = generate_scene(spec);
  EvaluationBundle b;
  b.meta = scene.meta;
  b.ground_truth = scene.ground_truth;
  b.detections = strip_ids(scene.ground_truth);
  double prev_idsw = 2.0, prev_inter = 3.0;
  for (double p : {0.0, 0.05, 0.1, 0.2, 0.4}) {
    b.tracks = inject_id_switches(scene.ground_truth, p, 99);
    const auto s = evaluate_tem(b);
    double idsw = 0.0;
    for (const auto& f : s.per_frame_inter) idsw += f.idsw_score;
    idsw /= static_cast<double>(s.per_frame_inter.size());
    EXPECT_LE(idsw, prev_idsw);
    EXPECT_LE(s.e_inter, prev_inter);
    prev_idsw = idsw;
    prev_inter = s.e_inter;
  }
  EXPECT_LT(prev_idsw, 1.0);
}
