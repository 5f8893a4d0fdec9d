#pragma once

#include <string>
#include <vector>

#include "tersoff/kernels.hpp"
#include "tersoff/neighbor.hpp"
#include "tersoff/system.hpp"

namespace testing_support {

using namespace tersoff;

inline KernelVariant scalar_variant(Variant tag, Precision p = Precision::Double) {
  return {tag, p, make_backend(BackendKind::Scalar, 1, p)};
}

inline KernelVariant vector_variant(Variant tag, BackendKind kind, int width, Precision p = Precision::Double) {
  return {tag, p, make_backend(kind, width, p)};
}

/// Reference and ScalarOpt, then VecJ/VecI on every emulated width and on
/// the native backend when compiled in.
inline std::vector<KernelVariant> all_variants(Precision p = Precision::Double) {
  std::vector<KernelVariant> out{scalar_variant(Variant::Reference, p), scalar_variant(Variant::ScalarOpt, p)};
  for (Variant t : {Variant::VecJ, Variant::VecI}) {
    for (int w : emulated_widths) out.push_back(vector_variant(t, BackendKind::Emulated, w, p));
    if (native_available()) out.push_back(vector_variant(t, BackendKind::Native, 0, p));
  }
  return out;
}

inline std::string label(const KernelVariant& v) {
  return std::string(to_string(v.tag)) + "/" + v.backend.name() + "/W" + std::to_string(v.backend.width) + "/" +
         std::string(to_string(v.precision));
}

inline ForceEnergyResult evaluate(const SimulationState& s, const ParamTable& params, const KernelVariant& v,
                                  double skin = default_skin, KernelOptions opts = {}) {
  const auto nl = build_neighbor_list(s, params.cutoff(), skin);
  return compute_forces(s, nl, params, v, opts);
}

/// Random open cluster; mixed species when the table has several.
inline SimulationState random_cluster(int atoms, std::uint64_t seed, const ParamTable& params, double density = 0.1,
                                      std::vector<double> avoid = {}, double avoid_width = 0.0) {
  ClusterOptions opts;
  opts.density = density;
  opts.species = static_cast<int>(params.species_count());
  opts.names = params.species();
  opts.avoid = std::move(avoid);
  opts.avoid_width = avoid_width;
  auto s = gen_random_cluster(atoms, seed, opts);
  align_species(s, params);
  return s;
}

/// R - D and R + D of every entry, the places where forces have kinks.
inline std::vector<double> kink_radii(const ParamTable& params) {
  std::vector<double> out;
  for (const auto& p : params.entries()) {
    out.push_back(p.R - p.D);
    out.push_back(p.R + p.D);
  }
  return out;
}

inline double max_abs_diff(const Eigen::Matrix3Xd& a, const Eigen::Matrix3Xd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace testing_support
