#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "tersoff/kernels.hpp"
#include "tersoff/params.hpp"
#include "tersoff/report.hpp"
#include "tersoff/state.hpp"

namespace tersoff {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int verification_failed = 1;
inline constexpr int input_error = 2;
}  // namespace exit_code

/// Entry point of the command-line tool; `args` excludes the program name.
/// Subcommands: gen, run, bench, verify.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Builds a structure from a generator spec or reads an XYZ file:
///   nanotube:N:CELLS[:BOND]   armchair (N, N) tube
///   diamond:CELLS[:A]         periodic cubic diamond
///   random:ATOMS[:SEED]       open random cluster over the table's species
///   PATH                      XYZ file
/// Species are renumbered to match `params`.
SimulationState make_structure(const std::string& spec, const ParamTable& params, std::uint64_t seed);

struct BenchTiming {
  int steps = 20;
  double dt = 0.5;
  double skin = 0.3;
  int threads = 1;
  int reps = 5;
  int warmup = 1;
};

/// Runs `steps` velocity Verlet steps from `initial` `reps` times and reports
/// the force-phase time (min and median). Speedups are left to
/// finalize_speedups. A progress line goes to `log`.
BenchRow time_kernel(const SimulationState& initial, const ParamTable& params, const KernelVariant& v,
                     const BenchTiming& timing, std::ostream& log);

}  // namespace tersoff
