#include "tem/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "numfmt.hpp"
#include "tem/error.hpp"
#include "tem/kvconfig.hpp"

namespace tem {
namespace {

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    std::size_t comma = line.find(',', pos);
    std::string_view cell = line.substr(pos, comma == std::string_view::npos ? line.npos : comma - pos);
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r')) cell.remove_suffix(1);
    out.push_back(cell);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

void check_label(const std::string& s) {
  if (s.empty() || s.find_first_of(",\"\n\r") != std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument, "run labels must be non-empty and free of commas, quotes and newlines: '" + s + "'");
  }
}

bool is_count_column(std::string_view name) {
  return name == "tp" || name == "fp" || name == "fn" || name == "idsw";
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

// Diverging scale: blue (-1) -> white (0) -> red (+1).
std::string cell_color(double r) {
  r = std::clamp(r, -1.0, 1.0);
  const double t = std::abs(r);
  const int end_r = r < 0 ? 33 : 178, end_g = r < 0 ? 102 : 24, end_b = r < 0 ? 172 : 43;
  auto mix = [t](int end) { return static_cast<int>(std::lround(255.0 + t * (end - 255.0))); };
  return fmt::format("#{:02x}{:02x}{:02x}", mix(end_r), mix(end_g), mix(end_b));
}

}  // namespace

const std::vector<std::string>& score_columns() {
  static const std::vector<std::string> kColumns = {"ap50", "recall", "precision", "tp",     "fp",
                                                    "fn",   "mota",   "motp",      "idf1",   "ata",
                                                    "idsw", "e_intra", "e_inter",  "tem"};
  return kColumns;
}

ScoreTable::ScoreTable(std::vector<std::string> columns) : columns_(std::move(columns)) {
  std::set<std::string> seen;
  for (const auto& c : columns_) {
    if (c.empty() || !seen.insert(c).second) throw Error(ErrorCode::kInvalidArgument, "duplicate or empty column '" + c + "'");
    if (c == "sequence" || c == "detector" || c == "tracker") {
      throw Error(ErrorCode::kInvalidArgument, "'" + c + "' is reserved for the run key");
    }
  }
}

void ScoreTable::add_row(RunKey key, std::vector<std::optional<double>> values) {
  if (values.size() != columns_.size()) throw Error(ErrorCode::kInvalidArgument, "row width does not match columns");
  for (const auto& r : rows_) {
    if (r.key == key) {
      throw Error(ErrorCode::kInvalidArgument,
                  "duplicate run " + key.sequence + "/" + key.detector + "/" + key.tracker);
    }
  }
  rows_.push_back({std::move(key), std::move(values)});
}

std::optional<std::size_t> ScoreTable::column_index(std::string_view name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i] == name) return i;
  }
  return std::nullopt;
}

std::vector<std::optional<double>> ScoreTable::column(std::size_t index) const {
  std::vector<std::optional<double>> out;
  out.reserve(rows_.size());
  for (const auto& r : rows_) out.push_back(r.values.at(index));
  return out;
}

ScoreTable ScoreTable::without_mean_rows() const {
  ScoreTable out(columns_);
  for (const auto& r : rows_) {
    if (r.key.sequence != kMeanRowLabel) out.rows_.push_back(r);
  }
  return out;
}

ScoreTable parse_score_csv(std::string_view text) {
  std::vector<std::string> lines;
  {
    std::size_t pos = 0;
    while (pos < text.size()) {
      std::size_t end = text.find('\n', pos);
      if (end == std::string_view::npos) end = text.size();
      std::string line(text.substr(pos, end - pos));
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) lines.push_back(std::move(line));
      pos = end + 1;
    }
  }
  if (lines.empty()) throw Error(ErrorCode::kParse, "score file is empty");
  const auto header = split_csv(lines.front());
  if (header.size() < 4 || header[0] != "sequence" || header[1] != "detector" || header[2] != "tracker") {
    throw Error(ErrorCode::kParse, "score header must start with sequence,detector,tracker and name measures");
  }
  ScoreTable table(std::vector<std::string>(header.begin() + 3, header.end()));
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = split_csv(lines[i]);
    if (cells.size() != header.size()) throw ParseError(i + 1, "expected " + std::to_string(header.size()) + " cells");
    std::vector<std::optional<double>> values;
    for (std::size_t c = 3; c < cells.size(); ++c) {
      if (cells[c].empty() || cells[c] == "nan" || cells[c] == "NaN") {
        values.emplace_back();
        continue;
      }
      try {
        values.emplace_back(parse_double(cells[c], std::string(header[c])));
      } catch (const Error& e) {
        throw ParseError(i + 1, e.what());
      }
    }
    table.add_row(RunKey{std::string(cells[0]), std::string(cells[1]), std::string(cells[2])}, std::move(values));
  }
  return table;
}

ScoreTable read_score_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open score file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_score_csv(ss.str());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::string format_score_csv(const ScoreTable& table) {
  std::string out = "sequence,detector,tracker";
  for (const auto& c : table.columns()) out += "," + c;
  out += '\n';
  for (const auto& row : table.rows()) {
    check_label(row.key.sequence);
    check_label(row.key.detector);
    check_label(row.key.tracker);
    out += row.key.sequence + "," + row.key.detector + "," + row.key.tracker;
    for (std::size_t c = 0; c < row.values.size(); ++c) {
      out += ',';
      out += detail::format_optional(row.values[c], is_count_column(table.columns()[c]) ? 0 : 6);
    }
    out += '\n';
  }
  return out;
}

void write_score_csv(const ScoreTable& table, const std::filesystem::path& path) {
  write_text(path, format_score_csv(table));
}

std::vector<std::optional<double>> score_values(const RunResult& run) {
  const auto& b = run.baselines;
  const auto& t = run.tem;
  return {b.ap50,
          b.recall,
          b.precision,
          static_cast<double>(b.counts.tp),
          static_cast<double>(b.counts.fp),
          static_cast<double>(b.counts.fn),
          b.mota,
          b.motp,
          b.idf1,
          b.ata,
          static_cast<double>(b.idsw_total),
          t.e_intra,
          t.e_inter,
          t.tem};
}

ScoreTable aggregate(const std::vector<RunResult>& runs, Grouping grouping) {
  std::vector<const RunResult*> ordered;
  for (const auto& r : runs) ordered.push_back(&r);
  std::sort(ordered.begin(), ordered.end(), [](const RunResult* a, const RunResult* b) { return a->key < b->key; });

  ScoreTable table(score_columns());
  for (const RunResult* r : ordered) {
    if (r->key.sequence == kMeanRowLabel) throw Error(ErrorCode::kInvalidArgument, "reserved sequence name");
    table.add_row(r->key, score_values(*r));
  }
  if (grouping == Grouping::kDetectorTracker) {
    std::map<std::pair<std::string, std::string>, std::vector<const RunResult*>> groups;
    for (const RunResult* r : ordered) groups[{r->key.detector, r->key.tracker}].push_back(r);
    for (const auto& [group, members] : groups) {
      std::vector<std::optional<double>> mean(score_columns().size());
      for (std::size_t c = 0; c < mean.size(); ++c) {
        double sum = 0.0;
        std::size_t n = 0;
        for (const RunResult* r : members) {
          if (auto v = score_values(*r)[c]) {
            sum += *v;
            ++n;
          }
        }
        if (n > 0) mean[c] = sum / static_cast<double>(n);
      }
      table.add_row(RunKey{std::string(kMeanRowLabel), group.first, group.second}, std::move(mean));
    }
  }
  return table;
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::kInvalidArgument, "pearson: vectors differ in length");
  const std::size_t n = x.size();
  if (n < 2) return std::nullopt;
  auto constant = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); });
  };
  if (constant(x) || constant(y)) return std::nullopt;

  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

PearsonResult pearson(std::span<const std::optional<double>> x, std::span<const std::optional<double>> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::kInvalidArgument, "pearson: vectors differ in length");
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] && y[i] && std::isfinite(*x[i]) && std::isfinite(*y[i])) {
      xs.push_back(*x[i]);
      ys.push_back(*y[i]);
    }
  }
  return {pearson(xs, ys), xs.size()};
}

CorrelationMatrix correlation_matrix(const ScoreTable& table) {
  if (table.rows().size() < 2) throw Error(ErrorCode::kInvalidArgument, "correlation needs at least 2 rows");
  CorrelationMatrix m;
  m.labels = table.columns();
  const std::size_t k = m.labels.size();
  m.r.assign(k * k, std::nullopt);
  m.n.assign(k * k, 0);
  std::vector<std::vector<std::optional<double>>> cols;
  for (std::size_t i = 0; i < k; ++i) cols.push_back(table.column(i));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i; j < k; ++j) {
      PearsonResult p = pearson(cols[i], cols[j]);
      if (i == j && p.r) p.r = 1.0;
      m.r[i * k + j] = m.r[j * k + i] = p.r;
      m.n[i * k + j] = m.n[j * k + i] = p.n;
    }
  }
  return m;
}

std::string format_correlation_csv(const CorrelationMatrix& m) {
  std::string out = "measure_a,measure_b,r,n\n";
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = i; j < m.size(); ++j) {
      out += m.labels[i] + "," + m.labels[j] + "," + detail::format_optional(m.at(i, j)) + "," +
             std::to_string(m.count(i, j)) + "\n";
    }
  }
  return out;
}

void write_correlation_csv(const CorrelationMatrix& m, const std::filesystem::path& path) {
  write_text(path, format_correlation_csv(m));
}

std::string heatmap_svg(const CorrelationMatrix& m) {
  constexpr int kCell = 48;
  constexpr int kPad = 16;
  std::size_t longest = 1;
  for (const auto& l : m.labels) longest = std::max(longest, l.size());
  const int label_space = static_cast<int>(longest) * 7 + 12;
  const int grid = static_cast<int>(m.size()) * kCell;
  const int origin_x = kPad + label_space;
  const int origin_y = kPad + label_space;
  const int legend_y = origin_y + grid + 24;
  const int width = origin_x + grid + kPad;
  const int height = legend_y + 40 + kPad;

  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\" "
      "font-family=\"Helvetica, Arial, sans-serif\" font-size=\"11\">\n",
      width, height, width, height);
  s += fmt::format("<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"#ffffff\"/>\n", width, height);

  for (std::size_t i = 0; i < m.size(); ++i) {
    const int y = origin_y + static_cast<int>(i) * kCell + kCell / 2 + 4;
    s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n", origin_x - 6, y,
                     xml_escape(m.labels[i]));
    const int x = origin_x + static_cast<int>(i) * kCell + kCell / 2 + 4;
    s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"start\" transform=\"rotate(-90 {} {})\">{}</text>\n", x,
                     origin_y - 6, x, origin_y - 6, xml_escape(m.labels[i]));
  }

  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < m.size(); ++j) {
      const int x = origin_x + static_cast<int>(j) * kCell;
      const int y = origin_y + static_cast<int>(i) * kCell;
      const auto& r = m.at(i, j);
      const std::string fill = r ? cell_color(*r) : std::string("#cccccc");
      s += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\" stroke=\"#ffffff\"/>\n", x, y,
                       kCell, kCell, fill);
      const std::string label = r ? fmt::format("{:.2f}", *r) : std::string("n/a");
      const char* ink = r && std::abs(*r) > 0.6 ? "#ffffff" : "#000000";
      s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" fill=\"{}\">{}</text>\n", x + kCell / 2,
                       y + kCell / 2 + 4, ink, label == "-0.00" ? "0.00" : label);
    }
  }

  // Legend: 21 swatches from -1 to +1.
  const int swatch = std::max(4, grid / 21);
  for (int i = 0; i <= 20; ++i) {
    const double r = -1.0 + 0.1 * i;
    s += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"12\" fill=\"{}\"/>\n", origin_x + i * swatch,
                     legend_y, swatch, cell_color(r));
  }
  s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"start\">-1</text>\n", origin_x, legend_y + 26);
  s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">0</text>\n", origin_x + 10 * swatch + swatch / 2,
                   legend_y + 26);
  s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">+1</text>\n", origin_x + 21 * swatch, legend_y + 26);
  s += "</svg>\n";
  return s;
}

void render_heatmap(const CorrelationMatrix& m, const std::filesystem::path& path) { write_text(path, heatmap_svg(m)); }

}  // namespace tem
