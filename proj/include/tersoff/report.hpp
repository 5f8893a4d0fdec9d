#pragma once

#include <string>
#include <vector>

namespace tersoff {

/// One timed kernel configuration. Values are rounded when the row is built
/// (times to 6 significant digits, ratios to 4 decimals) so that every
/// rendering carries exactly the same numbers.
struct BenchRow {
  std::string variant;
  std::string backend;
  int width = 1;
  std::string precision;
  int atoms = 0;
  int steps = 0;
  double time_s = 0.0;          // min over repetitions, force phase only
  double speedup_ref = 0.0;     // t_reference / t
  double speedup_scalar = 0.0;  // t_scalar / t
  double efficiency = 0.0;      // speedup_scalar / width
  double lane_util = 0.0;       // active lanes / total lanes
  double time_median_s = 0.0;   // not part of the tabular formats
  double energy = 0.0;          // initial potential energy, eV; not tabulated
};

struct BenchReport {
  std::vector<BenchRow> rows;
};

inline constexpr const char* bench_csv_header =
    "variant,backend,width,precision,atoms,steps,time_s,speedup_ref,speedup_scalar,efficiency,lane_util";

/// Fills speedups and efficiency from the time_s of the reference and scalar
/// rows with the same precision. Rows without a baseline get 0.
void finalize_speedups(BenchReport& report);

double round_significant(double x, int digits);
double round_decimals(double x, int decimals);
/// Shortest text that parses back to exactly x.
std::string format_number(double x);

std::string render_table(const BenchReport& report);
std::string render_csv(const BenchReport& report);
std::string render_json(const BenchReport& report);

}  // namespace tersoff
