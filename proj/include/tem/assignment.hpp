#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tem/mot_io.hpp"

namespace tem {

/// Intersection over union of two valid boxes, in [0, 1].
double iou(const Box& a, const Box& b) noexcept;

/// Dense rows x cols cost grid with a feasibility mask. Costs lie in [0, 1].
class CostMatrix {
 public:
  CostMatrix() = default;
  CostMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), cost_(rows * cols, 1.0), feasible_(rows * cols, 0) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0 || cols_ == 0; }

  double cost(std::size_t r, std::size_t c) const { return cost_[r * cols_ + c]; }
  bool feasible(std::size_t r, std::size_t c) const { return feasible_[r * cols_ + c] != 0; }

  void set(std::size_t r, std::size_t c, double cost, bool feasible) {
    cost_[r * cols_ + c] = cost;
    feasible_[r * cols_ + c] = feasible ? 1 : 0;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> cost_;
  std::vector<unsigned char> feasible_;
};

struct AssignedPair {
  std::size_t row = 0;
  std::size_t col = 0;
  double cost = 0.0;

  bool operator==(const AssignedPair&) const = default;
};

struct Assignment {
  std::vector<AssignedPair> pairs;  // sorted by row
  double total_cost = 0.0;

  std::size_t pair_count() const noexcept { return pairs.size(); }
};

enum class AssignmentPolicy {
  /// Maximise the number of pairs, then minimise the summed cost.
  kMaxCardinality,
  /// Maximise the summed similarity (1 - cost): a pair is worth taking only
  /// for what it adds, regardless of how many pairs result.
  kMaxSimilarity,
};

/// cost(i, j) = 1 - iou(a_i, b_j); a cell is feasible iff iou > gate.
CostMatrix build_iou_cost(std::span<const Box> a, std::span<const Box> b, double gate = 0.0);

/// Same as build_iou_cost but feasible iff iou >= threshold.
CostMatrix build_iou_cost_at_least(std::span<const Box> a, std::span<const Box> b, double threshold);

/// Hungarian (Kuhn-Munkres) solver over feasible cells. Among optimal
/// matchings the lexicographically smallest (row, col) sequence is returned.
Assignment hungarian_solve(const CostMatrix& m, AssignmentPolicy policy = AssignmentPolicy::kMaxCardinality);

/// Exhaustive reference solver with the same objective and tie-break.
/// Throws for matrices larger than 7 in either dimension.
Assignment brute_force_assign(const CostMatrix& m, AssignmentPolicy policy = AssignmentPolicy::kMaxCardinality);

/// Hungarian on build_iou_cost(a, b, 0) with the maximal-cardinality policy.
Assignment match_boxes(std::span<const Box> a, std::span<const Box> b);

}  // namespace tem
