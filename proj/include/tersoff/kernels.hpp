#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "tersoff/neighbor.hpp"
#include "tersoff/params.hpp"
#include "tersoff/state.hpp"

namespace tersoff {

enum class Variant { Reference, ScalarOpt, VecJ, VecI };
enum class Precision { Single, Double };
enum class BackendKind { Scalar, Emulated, Native };

/// Where and how wide the lane code runs. Scalar is W = 1; Emulated runs any
/// width in {1, 2, 4, 8, 16} with C library transcendentals; Native runs the
/// host register width with the polynomial transcendentals.
struct BackendDescriptor {
  BackendKind kind = BackendKind::Scalar;
  int width = 1;
  Precision precision = Precision::Double;

  std::string name() const;
};

/// Backend for `kind` at `width` (ignored for Scalar and Native, which pick
/// their own). Throws ConfigError for unsupported widths or a native backend
/// that was not compiled in.
BackendDescriptor make_backend(BackendKind kind, int width, Precision precision);

inline constexpr int emulated_widths[] = {1, 2, 4, 8, 16};
bool native_available();
int native_width(Precision precision);

struct KernelVariant {
  Variant tag = Variant::Reference;
  Precision precision = Precision::Double;
  BackendDescriptor backend{};
};

struct KernelOptions {
  int threads = 1;
  /// Atom ranges reduced in fixed order. Results depend on this number and
  /// not on `threads`.
  int chunks = 8;
  bool per_atom_energy = false;
  bool count = false;
};

struct KernelCounters {
  /// (j, k) slots visited in zeta loops, k == j included; both j and k are
  /// within-cutoff neighbors of i.
  std::uint64_t zeta_visits = 0;
  /// zeta_term evaluations, k != j.
  std::uint64_t zeta_evals = 0;
  std::uint64_t gathers = 0;
  std::uint64_t active_lanes = 0;
  std::uint64_t total_lanes = 0;

  double lane_fraction() const {
    return total_lanes == 0 ? 0.0 : static_cast<double>(active_lanes) / static_cast<double>(total_lanes);
  }
  KernelCounters& operator+=(const KernelCounters& o);
};

struct ForceEnergyResult {
  Eigen::Matrix3Xd forces;
  double potential_energy = 0.0;
  Eigen::VectorXd per_atom_energy;  // empty unless requested; sum_j V_ij for atom i
  KernelCounters counters;
};

ForceEnergyResult compute_reference(const SimulationState& state, const NeighborList& nl, const ParamTable& params,
                                    Precision precision = Precision::Double, const KernelOptions& opts = {});
ForceEnergyResult compute_scalar_opt(const SimulationState& state, const NeighborList& nl, const ParamTable& params,
                                     Precision precision = Precision::Double, const KernelOptions& opts = {});
ForceEnergyResult compute_vec_j(const SimulationState& state, const NeighborList& nl, const ParamTable& params,
                                const BackendDescriptor& backend, const KernelOptions& opts = {});
ForceEnergyResult compute_vec_i(const SimulationState& state, const NeighborList& nl, const ParamTable& params,
                                const BackendDescriptor& backend, const KernelOptions& opts = {});

/// Dispatches on the variant tag.
ForceEnergyResult compute_forces(const SimulationState& state, const NeighborList& nl, const ParamTable& params,
                                 const KernelVariant& variant, const KernelOptions& opts = {});

/// Runs the variant with counters on.
KernelCounters count_flops_and_visits(const SimulationState& state, const NeighborList& nl, const ParamTable& params,
                                      const KernelVariant& variant);

std::string_view to_string(Variant v);
std::string_view to_string(Precision p);
std::string_view to_string(BackendKind b);
Variant parse_variant(std::string_view s);      // reference|scalar|vec-j|vec-i
Precision parse_precision(std::string_view s);  // single|double
BackendKind parse_backend(std::string_view s);  // scalar|emulated|native

}  // namespace tersoff
