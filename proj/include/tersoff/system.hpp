#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tersoff/kernels.hpp"
#include "tersoff/neighbor.hpp"
#include "tersoff/params.hpp"
#include "tersoff/state.hpp"

namespace tersoff {

inline constexpr double graphene_bond_length = 1.421;     // A
inline constexpr double diamond_lattice_constant = 3.5668;  // A, carbon

/// Armchair (n, n) tube along z, centered on the z axis, 4 n atoms per axial
/// period of sqrt(3) b. The radius is solved so that every bond, including
/// the ones running around the circumference, has length exactly b.
/// Open ends unless `periodic`, in which case z is periodic with the period.
SimulationState gen_nanotube(int n, int cells, double bond_length = graphene_bond_length, bool periodic = false);

/// Radius of the (n, n) tube with bond length b.
double nanotube_radius(int n, double bond_length);

/// Cubic diamond, 8 atoms per conventional cell, periodic on all axes.
SimulationState gen_diamond(int cells, double lattice_constant = diamond_lattice_constant);

struct ClusterOptions {
  double density = 0.1;    // atoms / A^3
  double min_distance = 1.3;
  int species = 1;         // species drawn uniformly from [0, species)
  std::vector<std::string> names{"C"};
  /// Pair distances closer than `avoid_width` to any of these are rejected,
  /// which keeps finite-difference checks off the cutoff shell kinks.
  std::vector<double> avoid;
  double avoid_width = 0.0;
};

/// Open-boundary random cluster in a cube sized for the requested density.
SimulationState gen_random_cluster(int atoms, std::uint64_t seed, const ClusterOptions& opts = {});

/// Uniform random displacement in [-amplitude, amplitude] per component.
void perturb(SimulationState& state, double amplitude, std::uint64_t seed);

/// Maxwell-Boltzmann velocities at `temperature` K with zero total momentum.
void assign_velocities(SimulationState& state, double temperature, std::uint64_t seed);

/// Two-species table (C, Si) for mixed-species tests. C-C-C is the carbon
/// set; everything involving Si is synthetic and not a physical model.
ParamTable mixed_test_params();

/// Renumbers species so that state species s means params species s.
/// Throws ConfigError for elements missing from the table.
void align_species(SimulationState& state, const ParamTable& params);

// ---------------------------------------------------------------------------
// Structure files

/// XYZ with an extended comment line: Lattice="Lx 0 0 0 Ly 0 0 0 Lz" pbc="T T F".
void write_xyz(std::ostream& out, const SimulationState& state, const std::string& extra_comment = {});
/// Reads one frame. Box and periodicity come from the comment when present;
/// otherwise the box is open. Throws ParseError.
SimulationState read_xyz(std::istream& in);
SimulationState read_xyz_file(const std::string& path);

// ---------------------------------------------------------------------------
// Dynamics

/// Owns the neighbor list and evaluates forces with one kernel variant,
/// rebuilding the list whenever an atom has moved far enough.
class ForceField {
 public:
  ForceField(ParamTable params, KernelVariant variant, KernelOptions opts = {}, double skin = default_skin);

  /// Fills state.forces and state.potential_energy. Throws InputError on a
  /// non-finite force.
  void compute(SimulationState& state);

  const ParamTable& params() const { return params_; }
  const KernelVariant& variant() const { return variant_; }
  const NeighborList& neighbor_list() const { return nl_; }
  double skin() const { return skin_; }
  int rebuilds() const { return rebuilds_; }
  double force_seconds() const { return force_seconds_; }
  double neighbor_seconds() const { return neighbor_seconds_; }
  const ForceEnergyResult& last() const { return last_; }

 private:
  ParamTable params_;
  KernelVariant variant_;
  KernelOptions opts_;
  double skin_;
  NeighborList nl_;
  bool built_ = false;
  int rebuilds_ = 0;
  double force_seconds_ = 0.0;
  double neighbor_seconds_ = 0.0;
  ForceEnergyResult last_;
};

/// One velocity-Verlet step. Atoms flagged in `frozen` skip both kicks and
/// drift with their current velocity. Forces must be current on entry.
void velocity_verlet_step(SimulationState& state, double dt, ForceField& ff, std::span<const char> frozen = {});

struct StretchSpec {
  double pull_speed = 0.0;  // A/fs, rate at which the grips separate
  int axis = 2;
  double grip_width = 2.5;  // A from each end
};

struct RunConfig {
  double dt = 0.5;  // fs
  int steps = 0;
  KernelVariant variant{};
  KernelOptions kernel{};
  double skin = default_skin;
  std::optional<StretchSpec> stretch;
};

struct StepRecord {
  int step = 0;
  double time = 0.0;
  double potential = 0.0;
  double kinetic = 0.0;
  double total() const { return potential + kinetic; }
  double force_sum = 0.0;     // |sum_i F_i|, eV/A
  double momentum = 0.0;      // |sum_i m_i v_i|, amu A/fs
};

struct TrajectorySummary {
  std::vector<StepRecord> steps;  // step 0 is the initial state
  int atoms = 0;
  int grip_atoms = 0;
  int rebuilds = 0;
  double force_seconds = 0.0;
  double neighbor_seconds = 0.0;
  double integrate_seconds = 0.0;

  /// max_t |E_tot(t) - E_tot(0)| / |E_pot(0)|
  double energy_drift() const;
  double max_force_sum() const;
  double max_momentum() const;
};

using StepObserver = std::function<void(const SimulationState&, const StepRecord&)>;

/// Plain NVE for cfg.steps steps.
TrajectorySummary run_nve(SimulationState& state, const ParamTable& params, const RunConfig& cfg,
                          const StepObserver& observe = {});

/// Atoms within grip_width of either end along the axis are frozen and moved
/// apart at constant speed (each grip at pull_speed / 2); the rest is NVE.
/// A zero pull speed freezes nothing and reduces to run_nve. Throws
/// ConfigError when a grip is empty.
TrajectorySummary run_stretch(SimulationState& state, const ParamTable& params, const RunConfig& cfg,
                              const StepObserver& observe = {});

/// Atoms at the low and high end along `axis`.
std::pair<std::vector<int>, std::vector<int>> select_grips(const SimulationState& state, int axis, double width);

}  // namespace tersoff
