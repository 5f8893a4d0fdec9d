#include "tersoff/state.hpp"

#include <algorithm>
#include <map>

namespace tersoff {

SimulationState SimulationState::with_atoms(int n, std::vector<std::string> names) {
  SimulationState s;
  s.positions = Eigen::Matrix3Xd::Zero(3, n);
  s.velocities = Eigen::Matrix3Xd::Zero(3, n);
  s.forces = Eigen::Matrix3Xd::Zero(3, n);
  s.species.assign(static_cast<std::size_t>(n), 0);
  for (const auto& name : names) s.type_masses.push_back(element_mass(name));
  s.type_names = std::move(names);
  return s;
}

double SimulationState::kinetic_energy() const {
  double mv2 = 0.0;
  for (int a = 0; a < size(); ++a) mv2 += mass(a) * velocities.col(a).squaredNorm();
  return 0.5 * mv2 * units::mvv_to_energy;
}

Eigen::Vector3d SimulationState::momentum() const {
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
  for (int a = 0; a < size(); ++a) p += mass(a) * velocities.col(a);
  return p;
}

double element_mass(const std::string& element) {
  static const std::map<std::string, double, std::less<>> masses = {
      {"H", 1.008},   {"B", 10.81},   {"C", 12.011},  {"N", 14.007},  {"O", 15.999},
      {"Si", 28.085}, {"Ge", 72.630}, {"Sn", 118.71}, {"Al", 26.982}, {"Ga", 69.723},
  };
  auto it = masses.find(element);
  if (it == masses.end()) throw ConfigError("unknown element '" + element + "'");
  return it->second;
}

void validate_state(const SimulationState& state, std::size_t species_count) {
  const auto n = static_cast<Eigen::Index>(state.size());
  if (state.velocities.cols() != n || state.forces.cols() != n ||
      static_cast<Eigen::Index>(state.species.size()) != n) {
    throw InputError("state arrays disagree on the atom count");
  }
  if (state.type_names.size() != state.type_masses.size()) {
    throw InputError("type names and masses disagree");
  }
  for (int a = 0; a < 3; ++a) {
    if (!(state.box.lengths[a] > 0.0) || !std::isfinite(state.box.lengths[a])) {
      throw InputError("box edge " + std::to_string(a) + " must be positive");
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!state.positions.col(i).allFinite()) throw InputError("atom " + std::to_string(i) + " has a non-finite position");
    if (!state.velocities.col(i).allFinite()) throw InputError("atom " + std::to_string(i) + " has a non-finite velocity");
    const int s = state.species[static_cast<std::size_t>(i)];
    if (s < 0 || static_cast<std::size_t>(s) >= state.type_names.size() ||
        (species_count != 0 && static_cast<std::size_t>(s) >= species_count)) {
      throw InputError("atom " + std::to_string(i) + " has invalid species " + std::to_string(s));
    }
  }
  for (double m : state.type_masses) {
    if (!(m > 0.0)) throw InputError("masses must be positive");
  }
}

}  // namespace tersoff
