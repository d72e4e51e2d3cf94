#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tem/baselines.hpp"
#include "tem/effort.hpp"

namespace tem {

/// One evaluated (sequence, detector set, tracker) combination.
struct RunKey {
  std::string sequence;
  std::string detector;
  std::string tracker;

  auto operator<=>(const RunKey&) const = default;
};

/// Measure columns written for every run, in file order after the key.
const std::vector<std::string>& score_columns();

/// Sequence label of per-group mean rows added by aggregate().
inline constexpr std::string_view kMeanRowLabel = "(mean)";

class ScoreTable {
 public:
  struct Row {
    RunKey key;
    std::vector<std::optional<double>> values;
  };

  ScoreTable() = default;
  explicit ScoreTable(std::vector<std::string> columns);

  const std::vector<std::string>& columns() const noexcept { return columns_; }
  const std::vector<Row>& rows() const noexcept { return rows_; }

  /// Throws on a duplicate key or a value count that does not match the columns.
  void add_row(RunKey key, std::vector<std::optional<double>> values);

  std::optional<std::size_t> column_index(std::string_view name) const;
  std::vector<std::optional<double>> column(std::size_t index) const;

  /// Copy without the mean rows.
  ScoreTable without_mean_rows() const;

 private:
  std::vector<std::string> columns_;
  std::vector<Row> rows_;
};

/// Reads `sequence,detector,tracker,<measures...>`; any extra numeric
/// columns (e.g. externally computed HOTA) are kept verbatim. Empty cells
/// are missing values.
ScoreTable read_score_csv(const std::filesystem::path& path);
ScoreTable parse_score_csv(std::string_view text);
std::string format_score_csv(const ScoreTable& table);
void write_score_csv(const ScoreTable& table, const std::filesystem::path& path);

struct RunResult {
  RunKey key;
  TemScores tem;
  BaselineScores baselines;
};

/// Measure values in score_columns() order.
std::vector<std::optional<double>> score_values(const RunResult& run);

enum class Grouping { kNone, kDetectorTracker };

/// One row per run, sorted by key; with kDetectorTracker also a mean row per
/// (detector, tracker) pair. Throws on duplicate run keys.
ScoreTable aggregate(const std::vector<RunResult>& runs, Grouping grouping = Grouping::kNone);

struct PearsonResult {
  std::optional<double> r;  // missing when n < 2 or a side has zero variance
  std::size_t n = 0;        // pairs where both values are present
};

/// Population-form Pearson coefficient. Throws when lengths differ.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);
/// Pairwise-complete variant: pairs with a missing value are dropped.
PearsonResult pearson(std::span<const std::optional<double>> x, std::span<const std::optional<double>> y);

struct CorrelationMatrix {
  std::vector<std::string> labels;
  std::vector<std::optional<double>> r;  // row-major, labels.size()^2
  std::vector<std::size_t> n;

  std::size_t size() const noexcept { return labels.size(); }
  const std::optional<double>& at(std::size_t i, std::size_t j) const { return r[i * size() + j]; }
  std::size_t count(std::size_t i, std::size_t j) const { return n[i * size() + j]; }
};

/// Pairwise Pearson over every measure column. Needs at least 2 rows.
CorrelationMatrix correlation_matrix(const ScoreTable& table);

/// `measure_a,measure_b,r,n` for every pair i <= j.
std::string format_correlation_csv(const CorrelationMatrix& m);
void write_correlation_csv(const CorrelationMatrix& m, const std::filesystem::path& path);

/// Self-contained SVG heatmap, blue (-1) through white (0) to red (+1).
std::string heatmap_svg(const CorrelationMatrix& m);
void render_heatmap(const CorrelationMatrix& m, const std::filesystem::path& path);

}  // namespace tem
