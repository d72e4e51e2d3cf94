// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any failure.
// Usage: tem_acceptance [work_dir]
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "tem/analysis.hpp"
#include "tem/assignment.hpp"
#include "tem/baselines.hpp"
#include "tem/effort.hpp"
#include "tem/pipeline.hpp"
#include "tem/rng.hpp"
#include "tem/synth.hpp"
#include "test_util.hpp"

using namespace tem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

FrameSeries relabel(FrameSeries s, int mul, int add) {
  for (int k = 1; k <= s.frame_count(); ++k) {
    for (auto& o : s.at(k)) o.identity = *o.identity * mul + add;
  }
  return s;
}

FrameSeries strip_ids(FrameSeries s) {
  for (int k = 1; k <= s.frame_count(); ++k) {
    for (auto& o : s.at(k)) o.identity.reset();
  }
  return s;
}

FrameSeries arbitrary_ids(FrameSeries s) {
  for (int k = 1; k <= s.frame_count(); ++k) {
    int id = 1000 * k;
    for (auto& o : s.at(k)) o.identity = id++;
  }
  return s;
}

SyntheticSequence scene(std::uint64_t seed, int frames = 150, int objects = 14) {
  SceneSpec spec;
  spec.name = fmt::format("scene-{}", seed);
  spec.frames = frames;
  spec.objects = objects;
  spec.seed = seed;
  return generate_scene(spec);
}

Outcome assignment_oracle() {
  const auto t0 = Clock::now();
  Xoshiro256 rng(1000);
  double worst = 0.0;
  int mismatched = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t rows = 1 + rng.below(6), cols = 1 + rng.below(6);
    const double density = rng.uniform(0.2, 1.0);
    CostMatrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) m.set(r, c, rng.uniform(), rng.uniform() < density);
    }
    const auto h = hungarian_solve(m);
    const auto b = brute_force_assign(m);
    const double diff = std::abs(h.total_cost - b.total_cost);
    worst = std::max(worst, diff);
    if (diff > 1e-12 || h.pair_count() != b.pair_count()) ++mismatched;
  }
  const double secs = seconds_since(t0);
  return {mismatched == 0 && secs < 10.0,
          fmt::format("1000 matrices, {} mismatches, max |diff| {:.1e}, {:.2f} s", mismatched, worst, secs)};
}

Outcome range_suite() {
  std::size_t violations = 0, frames = 0;
  double lo_tem = 10, hi_tem = -10;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    const auto b = tem::testing::random_bundle(seed * 7919 + 1, 20, 50);
    const auto s = evaluate_tem(b);
    for (const auto& f : s.per_frame_intra) {
      ++frames;
      if (f.effort < -1.0 || f.effort > 1.0) ++violations;
    }
    for (const auto& f : s.per_frame_inter) {
      if (f.effort < -1.0 || f.effort > 2.0) ++violations;
    }
    if (s.tem < -1.0 || s.tem > 1.5) ++violations;
    lo_tem = std::min(lo_tem, s.tem);
    hi_tem = std::max(hi_tem, s.tem);
  }
  return {violations == 0, fmt::format("500 bundles, {} frames, {} violations, TEM observed in [{:.3f}, {:.3f}]",
                                       frames, violations, lo_tem, hi_tem)};
}

Outcome identity_tracker() {
  int bad = 0, bundles = 0;
  auto check = [&](EvaluationBundle b) {
    b.tracks = arbitrary_ids(b.detections);
    const auto s = evaluate_tem(b);
    ++bundles;
    bool ok = s.e_intra == 0.0;
    for (const auto& f : s.per_frame_inter) ok = ok && f.association_gain == 0.0;
    if (!ok) ++bad;
  };
  for (std::uint64_t seed = 0; seed < 200; ++seed) check(tem::testing::random_bundle(seed + 50000));
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto sc = scene(seed);
    EvaluationBundle b;
    b.meta = sc.meta;
    b.ground_truth = sc.ground_truth;
    b.detections = perturb(sc.ground_truth, sc.meta, builtin_profile("P1"));
    check(b);
  }
  return {bad == 0, fmt::format("{} bundles, {} with nonzero E_intra or Y", bundles, bad)};
}

Outcome perfect_tracker() {
  int bad = 0, bundles = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto sc = scene(seed, 60 + static_cast<int>(seed), 6 + static_cast<int>(seed % 10));
    EvaluationBundle b;
    b.meta = sc.meta;
    b.ground_truth = sc.ground_truth;
    b.detections = strip_ids(sc.ground_truth);
    b.tracks = relabel(sc.ground_truth, 5, 17);
    const auto s = evaluate_tem(b);
    const auto base = compute_baselines(b);
    bool ok = true;
    for (const auto& f : s.per_frame_intra) ok = ok && f.tracker.quality == 1.0;
    for (const auto& f : s.per_frame_inter) ok = ok && f.id_switches == 0 && f.idsw_score == 1.0;
    ok = ok && base.idsw_total == 0 && base.mota == 1.0 && base.motp == 1.0 && base.idf1 == 1.0 &&
         base.ata == 1.0 && base.ap50 == 1.0;
    ++bundles;
    if (!ok) ++bad;
  }
  return {bad == 0, fmt::format("{} synthetic sequences, {} failing Q_t=1/IDSW=0/MOTA=MOTP=IDF1=ATA=AP=1", bundles,
                                bad)};
}

Outcome identity_set_example() {
  const std::size_t m = truth_id_count({1, 2, 3}, {3, 4, 5}, IdSetMode::kUnion);
  return {m == 5, fmt::format("|IDs| for {{1,2,3}} and {{3,4,5}} = {}", m)};
}

Outcome switch_monotonicity() {
  const auto sc = scene(42, 150, 14);
  EvaluationBundle b;
  b.meta = sc.meta;
  b.ground_truth = sc.ground_truth;
  b.detections = perturb(sc.ground_truth, sc.meta, builtin_profile("P3"));

  struct Variant {
    std::string name;
    FrameSeries tracks;
  };
  const std::vector<Variant> variants = {
      {"reference tracker", reference_track(b.detections, builtin_tracker_config("sort"))},
      {"ground-truth tracker", relabel(sc.ground_truth, 1, 0)},
  };
  bool pass = true;
  std::string detail;
  for (const auto& v : variants) {
    double prev_idsw = 2.0, prev_inter = 3.0;
    bool boxes_same = true, monotone = true;
    std::string values;
    for (double rate : {0.0, 0.05, 0.1, 0.2}) {
      b.tracks = inject_id_switches(v.tracks, rate, 2024);
      for (int k = 1; k <= b.tracks.frame_count(); ++k) {
        if (b.tracks.at(k).size() != v.tracks.at(k).size()) boxes_same = false;
        for (std::size_t i = 0; boxes_same && i < b.tracks.at(k).size(); ++i) {
          boxes_same = b.tracks.at(k)[i].box == v.tracks.at(k)[i].box;
        }
      }
      const auto s = evaluate_tem(b);
      double idsw = 0.0;
      for (const auto& f : s.per_frame_inter) idsw += f.idsw_score;
      idsw /= static_cast<double>(s.per_frame_inter.size());
      monotone = monotone && idsw <= prev_idsw && s.e_inter <= prev_inter;
      prev_idsw = idsw;
      prev_inter = s.e_inter;
      values += fmt::format(" {:.4f}/{:.4f}", idsw, s.e_inter);
    }
    pass = pass && boxes_same && monotone;
    detail += fmt::format("{}{}: idsw/E_inter{}{}", detail.empty() ? "" : "; ", v.name, values,
                          boxes_same ? "" : " (boxes changed)");
  }
  return {pass, detail};
}

Outcome pearson_oracle() {
  Xoshiro256 rng(352);
  double worst = 0.0;
  bool affine = true;
  for (int i = 0; i < 100; ++i) {
    std::vector<double> x(352), y(352);
    const double slope = rng.uniform(-3, 3);
    for (std::size_t j = 0; j < x.size(); ++j) {
      x[j] = rng.uniform(-1, 2);
      y[j] = slope * x[j] + rng.normal();
    }
    long double mx = 0, my = 0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      mx += x[j];
      my += y[j];
    }
    mx /= x.size();
    my /= y.size();
    long double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      sxy += (x[j] - mx) * (y[j] - my);
      sxx += (x[j] - mx) * (x[j] - mx);
      syy += (y[j] - my) * (y[j] - my);
    }
    const double direct = static_cast<double>(sxy / std::sqrt(sxx * syy));
    const double r = *pearson(x, y);
    worst = std::max(worst, std::abs(r - direct));

    const double a = rng.uniform(0.1, 10), c = rng.uniform(-5, 5);
    std::vector<double> up(x.size()), down(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
      up[j] = a * x[j] + c;
      down[j] = -a * x[j] + c;
    }
    affine = affine && std::abs(*pearson(up, y) - r) <= 1e-12 && std::abs(*pearson(down, y) + r) <= 1e-12;
  }
  return {worst <= 1e-12 && affine,
          fmt::format("100 pairs of length 352, max |diff| {:.1e}, affine invariance {}", worst,
                      affine ? "holds" : "violated")};
}

std::optional<double> table_r(const CorrelationMatrix& m, const std::string& a, const std::string& b) {
  std::size_t i = m.size(), j = m.size();
  for (std::size_t k = 0; k < m.size(); ++k) {
    if (m.labels[k] == a) i = k;
    if (m.labels[k] == b) j = k;
  }
  if (i == m.size() || j == m.size()) return std::nullopt;
  return m.at(i, j);
}

Outcome detector_decoupling(const std::filesystem::path& work) {
  const auto t0 = Clock::now();
  std::filesystem::remove_all(work / "trend");
  SimulationSpec spec;  // 3 sequences x 5 profiles x 2 trackers
  const auto manifest = simulate_dataset(work / "trend", spec);
  const auto report = run_evaluation(load_manifest(manifest));
  if (!report.failures.empty()) return {false, "evaluation failed: " + report.failures[0].message};
  const auto m = correlation_matrix(report.table);
  const auto tem_ap = table_r(m, "tem", "ap50");
  const auto mota_prec = table_r(m, "mota", "precision");
  if (!tem_ap || !mota_prec) return {false, "correlation undefined"};
  const double secs = seconds_since(t0);
  return {std::abs(*tem_ap) < std::abs(*mota_prec) && secs < 120.0,
          fmt::format("{} runs, |r(TEM, AP50)| = {:.3f} vs |r(MOTA, Precision)| = {:.3f}, {:.1f} s",
                      report.results.size(), std::abs(*tem_ap), std::abs(*mota_prec), secs)};
}

Outcome precision_direction() {
  // Same miss rate and localisation noise; B has far fewer false positives.
  PerturbationProfile a{"A", 0.08, 8.0, 0.08, ConfidenceModel::kQualityLinked, 11};
  PerturbationProfile b = a;
  b.name = "B";
  b.fp_per_frame = 1.0;
  const auto tracker = builtin_tracker_config("sort");
  double ap_a = 0, ap_b = 0, prec_a = 0, prec_b = 0, tem_a = 0, tem_b = 0;
  int lower = 0;
  const int n = 3;
  for (int s = 1; s <= n; ++s) {
    const auto sc = scene(100 + static_cast<std::uint64_t>(s));
    auto run = [&](const PerturbationProfile& p) {
      EvaluationBundle bundle;
      bundle.meta = sc.meta;
      bundle.ground_truth = sc.ground_truth;
      bundle.detections = perturb(sc.ground_truth, sc.meta, p);
      bundle.tracks = reference_track(bundle.detections, tracker);
      return evaluate_bundle(bundle, EvaluationOptions{});
    };
    const auto ra = run(a), rb = run(b);
    ap_a += ra.baselines.ap50 / n;
    ap_b += rb.baselines.ap50 / n;
    prec_a += ra.baselines.precision / n;
    prec_b += rb.baselines.precision / n;
    tem_a += ra.tem.tem / n;
    tem_b += rb.tem.tem / n;
    if (rb.tem.tem < ra.tem.tem) ++lower;
  }
  const bool similar_ap = std::abs(ap_a - ap_b) < 0.05;
  const bool higher_precision = prec_b > prec_a;
  return {similar_ap && higher_precision && tem_b < tem_a,
          fmt::format("AP {:.3f} vs {:.3f}, precision {:.3f} vs {:.3f}, TEM {:.3f} vs {:.3f} "
                      "(lower for the high-precision set on {}/{} sequences)",
                      ap_a, ap_b, prec_a, prec_b, tem_a, tem_b, lower, n)};
}

Outcome determinism(const std::filesystem::path& work) {
  std::string first;
  for (int i = 0; i < 2; ++i) {
    const auto dir = work / fmt::format("determinism-{}", i);
    std::filesystem::remove_all(dir);
    SimulationSpec spec;
    spec.sequences = 2;
    spec.frames = 80;
    const auto manifest = simulate_dataset(dir, spec);
    OptionOverrides ov;
    ov.jobs = i == 0 ? 1 : 4;
    run_evaluation(load_manifest(manifest, ov));
    const std::string csv = tem::testing::read_file(dir / "results" / "scores.csv");
    if (i == 0) {
      first = csv;
    } else {
      const bool same = !csv.empty() && csv == first;
      return {same, fmt::format("two simulate+evaluate runs (jobs 1 and 4), scores.csv {} bytes, {}", csv.size(),
                                same ? "identical" : "DIFFERENT")};
    }
  }
  return {false, "unreachable"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::filesystem::path work =
      argc > 1 ? std::filesystem::path(argv[1]) : std::filesystem::temp_directory_path() / "tem_acceptance";
  std::filesystem::create_directories(work);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"assignment oracle", assignment_oracle},
      {"range suite", range_suite},
      {"identity tracker", identity_tracker},
      {"perfect tracker", perfect_tracker},
      {"identity-set example", identity_set_example},
      {"switch monotonicity", switch_monotonicity},
      {"pearson oracle", pearson_oracle},
      {"detector decoupling trend", [&] { return detector_decoupling(work); }},
      {"precision direction", precision_direction},
      {"determinism", [&] { return determinism(work); }},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("[%s] %2zu %-26s %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
