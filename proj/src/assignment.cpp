#include "tem/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>

#include "tem/error.hpp"

namespace tem {

double iou(const Box& a, const Box& b) noexcept {
  const double iw = std::min(a.right(), b.right()) - std::max(a.left, b.left);
  const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.top, b.top);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  // Areas from the same corner arithmetic, so identical boxes give exactly 1.
  const double area_a = (a.right() - a.left) * (a.bottom() - a.top);
  const double area_b = (b.right() - b.left) * (b.bottom() - b.top);
  const double uni = area_a + area_b - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

CostMatrix build_iou_cost(std::span<const Box> a, std::span<const Box> b, double gate) {
  CostMatrix m(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double o = iou(a[i], b[j]);
      m.set(i, j, 1.0 - o, o > gate);
    }
  }
  return m;
}

CostMatrix build_iou_cost_at_least(std::span<const Box> a, std::span<const Box> b, double threshold) {
  CostMatrix m(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double o = iou(a[i], b[j]);
      m.set(i, j, 1.0 - o, o >= threshold && o > 0.0);
    }
  }
  return m;
}

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

// Square n x n problem. Unmatched (padding or infeasible) cells carry
// `unmatched_cost`: n + 1 makes every extra pair worth more than any cost
// difference, 1.0 makes a pair worth exactly its similarity.
struct PaddedProblem {
  const CostMatrix& m;
  std::size_t n;
  double unmatched_cost;

  bool real(std::size_t r, std::size_t c) const { return r < m.rows() && c < m.cols() && m.feasible(r, c); }
  double cost(std::size_t r, std::size_t c) const { return real(r, c) ? m.cost(r, c) : unmatched_cost; }
};

// Shortest augmenting path Hungarian with row/column potentials.
// Returns row -> col and leaves potentials with cost - u - v >= 0.
std::vector<std::size_t> solve_square(const PaddedProblem& p, std::vector<double>& u, std::vector<double>& v) {
  const std::size_t n = p.n;
  const double inf = std::numeric_limits<double>::infinity();
  u.assign(n + 1, 0.0);
  v.assign(n + 1, 0.0);
  std::vector<std::size_t> match(n + 1, 0);  // column j (1-based) -> row (1-based), 0 = free
  std::vector<std::size_t> way(n + 1, 0);
  std::vector<double> minv(n + 1);
  std::vector<char> used(n + 1);

  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = p.cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<std::size_t> row_to_col(n, kNone);
  for (std::size_t j = 1; j <= n; ++j) row_to_col[match[j] - 1] = j - 1;
  return row_to_col;
}

// Walks the optimal face (tight edges under the final potentials) row by row
// and moves each row to its smallest feasible column that still admits a
// perfect tight matching for the rest. Rows already decided as matched stay
// put; rows decided as unmatched may still swap among non-feasible columns.
void lexicographic_tie_break(const PaddedProblem& p, const std::vector<double>& u, const std::vector<double>& v,
                             std::vector<std::size_t>& row_to_col) {
  const std::size_t n = p.n;
  constexpr double kTightTol = 1e-9;
  auto tight = [&](std::size_t r, std::size_t c) {
    return std::abs(p.cost(r, c) - u[r + 1] - v[c + 1]) <= kTightTol;
  };

  std::vector<std::size_t> col_to_row(n);
  for (std::size_t r = 0; r < n; ++r) col_to_row[row_to_col[r]] = r;

  enum class State : unsigned char { kFree, kMatched, kUnmatched };
  std::vector<State> state(n, State::kFree);
  std::vector<std::size_t> pred(n);
  std::vector<char> seen(n);

  for (std::size_t i = 0; i < p.m.rows(); ++i) {
    const std::size_t cur = row_to_col[i];
    const std::size_t limit = p.real(i, cur) ? cur : p.m.cols();

    for (std::size_t j = 0; j < limit; ++j) {
      if (!p.real(i, j) || !tight(i, j)) continue;
      const std::size_t owner = col_to_row[j];
      if (state[owner] == State::kMatched) continue;

      // Alternating path: owner gives up j and takes some column c, whose
      // owner in turn moves on, until someone takes the column i releases.
      std::fill(seen.begin(), seen.end(), 0);
      std::deque<std::size_t> queue{owner};
      seen[owner] = 1;
      seen[i] = 1;
      std::size_t end_row = kNone;
      while (!queue.empty() && end_row == kNone) {
        const std::size_t r = queue.front();
        queue.pop_front();
        for (std::size_t c = 0; c < n; ++c) {
          if (c == j || c == row_to_col[r] || !tight(r, c)) continue;
          if (state[r] == State::kUnmatched && p.real(r, c)) continue;
          if (c == cur) {
            end_row = r;
            break;
          }
          const std::size_t next = col_to_row[c];
          if (seen[next] || state[next] == State::kMatched) continue;
          seen[next] = 1;
          pred[next] = r;
          queue.push_back(next);
        }
      }
      if (end_row == kNone) continue;

      std::size_t r = end_row;
      std::size_t take = cur;
      while (true) {
        const std::size_t released = row_to_col[r];
        row_to_col[r] = take;
        col_to_row[take] = r;
        if (r == owner) break;
        take = released;
        r = pred[r];
      }
      row_to_col[i] = j;
      col_to_row[j] = i;
      break;
    }
    state[i] = p.real(i, row_to_col[i]) ? State::kMatched : State::kUnmatched;
  }
}

Assignment extract(const CostMatrix& m, const std::vector<std::size_t>& row_to_col) {
  Assignment out;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const std::size_t c = row_to_col[r];
    if (c < m.cols() && m.feasible(r, c)) {
      out.pairs.push_back({r, c, m.cost(r, c)});
      out.total_cost += m.cost(r, c);
    }
  }
  return out;
}

double unmatched_cost(AssignmentPolicy policy, std::size_t n) {
  return policy == AssignmentPolicy::kMaxCardinality ? static_cast<double>(n) + 1.0 : 1.0;
}

}  // namespace

Assignment hungarian_solve(const CostMatrix& m, AssignmentPolicy policy) {
  if (m.empty()) return {};
  const std::size_t n = std::max(m.rows(), m.cols());
  PaddedProblem problem{m, n, unmatched_cost(policy, n)};
  std::vector<double> u, v;
  std::vector<std::size_t> row_to_col = solve_square(problem, u, v);
  lexicographic_tie_break(problem, u, v, row_to_col);
  return extract(m, row_to_col);
}

Assignment brute_force_assign(const CostMatrix& m, AssignmentPolicy policy) {
  constexpr std::size_t kMaxSide = 7;
  if (m.rows() > kMaxSide || m.cols() > kMaxSide) {
    throw Error(ErrorCode::kInvalidArgument, "brute_force_assign supports at most 7x7 matrices");
  }
  if (m.empty()) return {};
  constexpr double kTieTol = 1e-12;
  const std::size_t unmatched = m.cols();

  // Objective as (unmatched rows, summed cost); smaller is better. Under
  // kMaxSimilarity the unmatched count is folded into the cost.
  struct Candidate {
    std::size_t missing = 0;
    double cost = 0.0;
    std::vector<std::size_t> cols;  // per row, `unmatched` when free
  };
  std::optional<Candidate> best;
  std::vector<std::size_t> cols(m.rows(), unmatched);
  std::vector<char> used(m.cols(), 0);

  auto consider = [&] {
    Candidate cand;
    cand.cols = cols;
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t r = 0; r < m.rows(); ++r) {
      if (cols[r] == unmatched) continue;
      sum += m.cost(r, cols[r]);
      ++pairs;
    }
    if (policy == AssignmentPolicy::kMaxCardinality) {
      cand.missing = std::min(m.rows(), m.cols()) - pairs;
      cand.cost = sum;
    } else {
      cand.cost = sum - static_cast<double>(pairs);
    }
    if (!best || cand.missing < best->missing ||
        (cand.missing == best->missing &&
         (cand.cost < best->cost - kTieTol ||
          (std::abs(cand.cost - best->cost) <= kTieTol && cand.cols < best->cols)))) {
      best = std::move(cand);
    }
  };

  auto recurse = [&](auto&& self, std::size_t r) -> void {
    if (r == m.rows()) {
      consider();
      return;
    }
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (used[c] || !m.feasible(r, c)) continue;
      used[c] = 1;
      cols[r] = c;
      self(self, r + 1);
      used[c] = 0;
    }
    cols[r] = unmatched;
    self(self, r + 1);
  };
  recurse(recurse, 0);

  Assignment out;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    if (best->cols[r] == unmatched) continue;
    out.pairs.push_back({r, best->cols[r], m.cost(r, best->cols[r])});
    out.total_cost += m.cost(r, best->cols[r]);
  }
  return out;
}

Assignment match_boxes(std::span<const Box> a, std::span<const Box> b) {
  return hungarian_solve(build_iou_cost(a, b, 0.0));
}

}  // namespace tem
