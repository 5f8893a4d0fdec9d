#include "tersoff/report.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include <json.hpp>

namespace tersoff {

double round_significant(double x, int digits) {
  if (x == 0.0 || !std::isfinite(x)) return x;
  const double mag = std::floor(std::log10(std::abs(x)));
  const double scale = std::pow(10.0, digits - 1 - mag);
  return std::round(x * scale) / scale;
}

double round_decimals(double x, int decimals) {
  if (!std::isfinite(x)) return x;
  const double scale = std::pow(10.0, decimals);
  return std::round(x * scale) / scale;
}

std::string format_number(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

void finalize_speedups(BenchReport& report) {
  for (auto& row : report.rows) {
    double t_ref = 0.0;
    double t_scalar = 0.0;
    for (const auto& b : report.rows) {
      if (b.precision != row.precision) continue;
      if (b.variant == "reference") t_ref = b.time_s;
      if (b.variant == "scalar") t_scalar = b.time_s;
    }
    row.speedup_ref = t_ref > 0.0 && row.time_s > 0.0 ? round_decimals(t_ref / row.time_s, 4) : 0.0;
    row.speedup_scalar = t_scalar > 0.0 && row.time_s > 0.0 ? round_decimals(t_scalar / row.time_s, 4) : 0.0;
    row.efficiency = round_decimals(row.speedup_scalar / row.width, 4);
  }
}

namespace {

std::vector<std::string> row_cells(const BenchRow& r) {
  return {r.variant,
          r.backend,
          std::to_string(r.width),
          r.precision,
          std::to_string(r.atoms),
          std::to_string(r.steps),
          format_number(r.time_s),
          format_number(r.speedup_ref),
          format_number(r.speedup_scalar),
          format_number(r.efficiency),
          format_number(r.lane_util)};
}

std::vector<std::string> header_cells() {
  std::vector<std::string> cells;
  std::stringstream ss(bench_csv_header);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

}  // namespace

std::string render_table(const BenchReport& report) {
  std::vector<std::vector<std::string>> grid{header_cells()};
  for (const auto& r : report.rows) grid.push_back(row_cells(r));
  std::vector<std::size_t> width(grid.front().size(), 0);
  for (const auto& row : grid) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  for (std::size_t n = 0; n < grid.size(); ++n) {
    for (std::size_t c = 0; c < grid[n].size(); ++c) {
      const auto& cell = grid[n][c];
      if (c > 0) out += "  ";
      // text columns left-aligned, numbers right-aligned
      const bool left = c == 0 || c == 1 || c == 3;
      const std::string pad(width[c] - cell.size(), ' ');
      out += left ? cell + pad : pad + cell;
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    out += '\n';
    if (n == 0) {
      std::size_t total = 0;
      for (auto w : width) total += w;
      out += std::string(total + 2 * (width.size() - 1), '-') + '\n';
    }
  }
  return out;
}

std::string render_csv(const BenchReport& report) {
  std::string out = std::string(bench_csv_header) + '\n';
  for (const auto& r : report.rows) {
    const auto cells = row_cells(r);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c > 0) out += ',';
      out += cells[c];
    }
    out += '\n';
  }
  return out;
}

std::string render_json(const BenchReport& report) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"variant", r.variant},
                    {"backend", r.backend},
                    {"width", r.width},
                    {"precision", r.precision},
                    {"atoms", r.atoms},
                    {"steps", r.steps},
                    {"time_s", r.time_s},
                    {"speedup_ref", r.speedup_ref},
                    {"speedup_scalar", r.speedup_scalar},
                    {"efficiency", r.efficiency},
                    {"lane_util", r.lane_util}});
  }
  return rows.dump(2) + '\n';
}

}  // namespace tersoff
