#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tersoff/params.hpp"

namespace tersoff {

/// Orthorhombic box with per-axis periodicity. Coordinates along periodic
/// axes live in [0, L); non-periodic axes are unbounded and L is nominal.
struct SimulationBox {
  Eigen::Vector3d lengths = Eigen::Vector3d::Constant(1.0);
  std::array<bool, 3> periodic{false, false, false};

  bool any_periodic() const { return periodic[0] || periodic[1] || periodic[2]; }

  Eigen::Vector3d minimum_image(Eigen::Vector3d d) const {
    for (int a = 0; a < 3; ++a) {
      if (periodic[a]) d[a] -= lengths[a] * std::nearbyint(d[a] / lengths[a]);
    }
    return d;
  }

  Eigen::Vector3d wrap(Eigen::Vector3d x) const {
    for (int a = 0; a < 3; ++a) {
      if (periodic[a]) {
        x[a] -= lengths[a] * std::floor(x[a] / lengths[a]);
        if (x[a] >= lengths[a]) x[a] -= lengths[a];
      }
    }
    return x;
  }
};

/// Atoms in metal-style units: A, A/fs, eV/A, amu, fs.
struct SimulationState {
  Eigen::Matrix3Xd positions;
  Eigen::Matrix3Xd velocities;
  Eigen::Matrix3Xd forces;
  std::vector<int> species;
  std::vector<std::string> type_names;  // element per species index
  std::vector<double> type_masses;      // amu per species index
  SimulationBox box;
  double time = 0.0;
  double potential_energy = 0.0;

  int size() const { return static_cast<int>(positions.cols()); }

  /// Allocates n atoms of species 0, zero motion.
  static SimulationState with_atoms(int n, std::vector<std::string> names = {"C"});

  double mass(int atom) const { return type_masses[static_cast<std::size_t>(species[static_cast<std::size_t>(atom)])]; }
  double kinetic_energy() const;  // eV
  Eigen::Vector3d momentum() const;  // amu A/fs
};

/// Standard atomic mass in amu; throws ConfigError for unknown elements.
double element_mass(const std::string& element);

/// Checks array sizes, finite positions and species indices against the
/// parameter table's species count (when nonzero). Throws InputError.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
void validate_state(const SimulationState& state, std::size_t species_count = 0);

/// Unit conversions for metal units with time in fs.
namespace units {
/// eV / (A amu) -> A / fs^2
inline constexpr double force_to_accel = 9.648533212331002e-3;
/// amu A^2 / fs^2 -> eV
inline constexpr double mvv_to_energy = 1.0 / force_to_accel;
/// Boltzmann constant, eV / K
inline constexpr double boltzmann = 8.617333262e-5;
}  // namespace units

}  // namespace tersoff
