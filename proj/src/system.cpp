#include "tersoff/system.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <random>

namespace tersoff {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void fit_open_box(SimulationState& s) {
  if (s.size() == 0) return;
  const Eigen::Vector3d extent = s.positions.rowwise().maxCoeff() - s.positions.rowwise().minCoeff();
  for (int a = 0; a < 3; ++a) {
    if (!s.box.periodic[a]) s.box.lengths[a] = std::max(1.0, extent[a]);
  }
}

}  // namespace

double nanotube_radius(int n, double b) {
  // Chord b for the bond around the circumference, chord b/2 for the
  // projection of the slanted bond; one period of both spans pi/n.
  auto excess = [&](double R) { return 2.0 * std::asin(b / (2.0 * R)) + 2.0 * std::asin(b / (4.0 * R)) - std::numbers::pi / n; };
  double lo = 0.5 * b;
  double hi = 3.0 * n * b;  // far beyond the flat-sheet estimate 3nb / 2pi
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (excess(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

SimulationState gen_nanotube(int n, int cells, double b, bool periodic) {
  if (n < 3) throw ConfigError("nanotube chirality n must be at least 3");
  if (cells < 1) throw ConfigError("nanotube needs at least one cell");
  if (!(b > 0.0)) throw ConfigError("bond length must be positive");

  const double R = nanotube_radius(n, b);
  const double alpha = 2.0 * std::asin(b / (2.0 * R));
  const double gamma = 2.0 * std::asin(b / (4.0 * R));
  const double period = std::sqrt(3.0) * b;
  const double unit_angles[4] = {0.0, alpha, alpha + gamma, 2.0 * alpha + gamma};
  const double unit_z[4] = {0.0, 0.0, 0.5 * period, 0.5 * period};

  auto s = SimulationState::with_atoms(4 * n * cells);
  int a = 0;
  for (int c = 0; c < cells; ++c) {
    for (int u = 0; u < n; ++u) {
      const double base = 2.0 * std::numbers::pi * u / n;
      for (int m = 0; m < 4; ++m) {
        const double phi = base + unit_angles[m];
        s.positions.col(a++) = Eigen::Vector3d(R * std::cos(phi), R * std::sin(phi), c * period + unit_z[m]);
      }
    }
  }
  fit_open_box(s);
  if (periodic) {
    s.box.periodic[2] = true;
    s.box.lengths[2] = cells * period;
  }
  return s;
}

SimulationState gen_diamond(int cells, double a) {
  if (cells < 1) throw ConfigError("diamond needs at least one cell");
  if (!(a > 0.0)) throw ConfigError("lattice constant must be positive");
  static const double basis[8][3] = {{0, 0, 0},          {0, 0.5, 0.5},       {0.5, 0, 0.5},       {0.5, 0.5, 0},
                                     {0.25, 0.25, 0.25}, {0.25, 0.75, 0.75}, {0.75, 0.25, 0.75}, {0.75, 0.75, 0.25}};
  auto s = SimulationState::with_atoms(8 * cells * cells * cells);
  int n = 0;
  for (int x = 0; x < cells; ++x) {
    for (int y = 0; y < cells; ++y) {
      for (int z = 0; z < cells; ++z) {
        for (const auto& p : basis) {
          s.positions.col(n++) = a * Eigen::Vector3d(x + p[0], y + p[1], z + p[2]);
        }
      }
    }
  }
  s.box.lengths = Eigen::Vector3d::Constant(a * cells);
  s.box.periodic = {true, true, true};
  return s;
}

SimulationState gen_random_cluster(int atoms, std::uint64_t seed, const ClusterOptions& opts) {
  if (atoms < 1) throw ConfigError("cluster needs at least one atom");
  if (opts.species < 1 || static_cast<std::size_t>(opts.species) > opts.names.size()) {
    throw ConfigError("cluster species count does not match the element names");
  }
  const double side = std::cbrt(atoms / opts.density);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(0.0, side);
  std::uniform_int_distribution<int> kind(0, opts.species - 1);

  auto s = SimulationState::with_atoms(atoms, opts.names);
  const double dmin2 = opts.min_distance * opts.min_distance;
  for (int i = 0; i < atoms; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < 100000 && !placed; ++attempt) {
      const Eigen::Vector3d x(coord(rng), coord(rng), coord(rng));
      placed = true;
      for (int j = 0; j < i && placed; ++j) {
        const double d2 = (s.positions.col(j) - x).squaredNorm();
        if (d2 < dmin2) placed = false;
        const double d = std::sqrt(d2);
        for (double shell : opts.avoid) {
          if (std::abs(d - shell) < opts.avoid_width) placed = false;
        }
      }
      if (placed) s.positions.col(i) = x;
    }
    if (!placed) throw ConfigError("could not place cluster atoms; density too high");
    s.species[static_cast<std::size_t>(i)] = kind(rng);
  }
  fit_open_box(s);
  return s;
}

void perturb(SimulationState& state, double amplitude, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-amplitude, amplitude);
  for (int i = 0; i < state.size(); ++i) {
    for (int a = 0; a < 3; ++a) state.positions(a, i) += u(rng);
    state.positions.col(i) = state.box.wrap(state.positions.col(i));
  }
}

void assign_velocities(SimulationState& state, double temperature, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int n = state.size();
  double total_mass = 0.0;
  for (int i = 0; i < n; ++i) {
    const double sigma = std::sqrt(units::boltzmann * temperature / state.mass(i) * units::force_to_accel);
    for (int a = 0; a < 3; ++a) state.velocities(a, i) = sigma * normal(rng);
    total_mass += state.mass(i);
  }
  if (n == 0) return;
  const Eigen::Vector3d v_cm = state.momentum() / total_mass;
  state.velocities.colwise() -= v_cm;
}

ParamTable mixed_test_params() {
  TersoffParams c;
  c.m = 3.0;
  c.gamma = 1.0;
  c.lambda3 = 0.0;
  c.c = 38049.0;
  c.d = 4.3484;
  c.h = -0.57058;
  c.eta = 0.72751;
  c.beta = 1.5724e-7;
  c.lambda2 = 2.2119;
  c.B = 346.74;
  c.R = 1.95;
  c.D = 0.15;
  c.lambda1 = 3.4879;
  c.A = 1393.6;

  // Silicon-like magnitudes with a shortened cutoff; invented for testing.
  TersoffParams x;
  x.m = 3.0;
  x.gamma = 1.0;
  x.lambda3 = 1.3258;
  x.c = 4.8381;
  x.d = 2.0417;
  x.h = 0.0;
  x.eta = 22.956;
  x.beta = 0.33675;
  x.lambda2 = 1.3258;
  x.B = 95.373;
  x.R = 2.45;
  x.D = 0.15;
  x.lambda1 = 3.2394;
  x.A = 3264.7;

  const TersoffParams base[2] = {c, x};
  std::vector<TersoffParams> entries;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      for (int k = 0; k < 2; ++k) {
        const auto& pi = base[i];
        const auto& pj = base[j];
        const auto& pk = base[k];
        TersoffParams e = pi;
        e.A = std::sqrt(pi.A * pj.A);
        e.B = std::sqrt(pi.B * pj.B);
        e.lambda1 = 0.5 * (pi.lambda1 + pj.lambda1);
        e.lambda2 = 0.5 * (pi.lambda2 + pj.lambda2);
        // Three-body cutoff follows the (i, k) pair so that it agrees with
        // the cutoff that admits k to i's neighbor list.
        e.R = 0.5 * (pi.R + pk.R);
        e.D = 0.5 * (pi.D + pk.D);
        if (i == 1 && j == 0) e.m = 1.0;
        if (i == 0 && k == 1) e.lambda3 = 0.4;
        entries.push_back(e);
      }
    }
  }
  return ParamTable({"C", "Si"}, entries);
}

void align_species(SimulationState& state, const ParamTable& params) {
  std::vector<int> map(state.type_names.size(), -1);
  for (std::size_t t = 0; t < state.type_names.size(); ++t) {
    const auto idx = params.species_index(state.type_names[t]);
    if (idx) map[t] = *idx;
  }
  for (int s : state.species) {
    if (s < 0 || static_cast<std::size_t>(s) >= map.size() || map[static_cast<std::size_t>(s)] < 0) {
      const std::string name =
          s >= 0 && static_cast<std::size_t>(s) < state.type_names.size() ? state.type_names[static_cast<std::size_t>(s)] : "?";
      throw ConfigError("element '" + name + "' has no entries in the parameter table");
    }
  }
  std::vector<double> masses(params.species_count(), 0.0);
  for (std::size_t t = 0; t < params.species_count(); ++t) {
    const auto& name = params.species()[t];
    auto it = std::find(state.type_names.begin(), state.type_names.end(), name);
    if (it != state.type_names.end()) {
      masses[t] = state.type_masses[static_cast<std::size_t>(it - state.type_names.begin())];
    } else {
      try {
        masses[t] = element_mass(name);
      } catch (const ConfigError&) {
        masses[t] = 1.0;  // species absent from the structure; never used
      }
    }
  }
  for (auto& s : state.species) s = map[static_cast<std::size_t>(s)];
  state.type_names = params.species();
  state.type_masses = std::move(masses);
}

// ---------------------------------------------------------------------------

ForceField::ForceField(ParamTable params, KernelVariant variant, KernelOptions opts, double skin)
    : params_(std::move(params)), variant_(variant), opts_(opts), skin_(skin) {
  if (!(skin >= 0.0)) throw ConfigError("skin must be non-negative");
}

void ForceField::compute(SimulationState& state) {
  if (!built_ || needs_rebuild(state, nl_)) {
    const auto t0 = Clock::now();
    nl_ = build_neighbor_list(state, params_.cutoff(), skin_);
    neighbor_seconds_ += seconds_since(t0);
    if (built_) ++rebuilds_;
    built_ = true;
  }
  const auto t0 = Clock::now();
  last_ = compute_forces(state, nl_, params_, variant_, opts_);
  force_seconds_ += seconds_since(t0);
  for (int i = 0; i < state.size(); ++i) {
    if (!last_.forces.col(i).allFinite()) {
      throw InputError("non-finite force on atom " + std::to_string(i) + " at t = " + std::to_string(state.time) +
                       " fs");
    }
  }
  state.forces = last_.forces;
  state.potential_energy = last_.potential_energy;
}

void velocity_verlet_step(SimulationState& state, double dt, ForceField& ff, std::span<const char> frozen) {
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  const int n = state.size();
  auto is_frozen = [&](int i) { return !frozen.empty() && frozen[static_cast<std::size_t>(i)] != 0; };
  auto kick = [&] {
    for (int i = 0; i < n; ++i) {
      if (is_frozen(i)) continue;
      state.velocities.col(i) += (0.5 * dt * units::force_to_accel / state.mass(i)) * state.forces.col(i);
    }
  };
  kick();
  for (int i = 0; i < n; ++i) {
    state.positions.col(i) = state.box.wrap(state.positions.col(i) + dt * state.velocities.col(i));
  }
  state.time += dt;
  ff.compute(state);
  kick();
}

double TrajectorySummary::energy_drift() const {
  if (steps.empty()) return 0.0;
  const double e0 = steps.front().total();
  const double scale = std::abs(steps.front().potential);
  double worst = 0.0;
  for (const auto& s : steps) worst = std::max(worst, std::abs(s.total() - e0));
  return scale > 0.0 ? worst / scale : worst;
}

double TrajectorySummary::max_force_sum() const {
  double m = 0.0;
  for (const auto& s : steps) m = std::max(m, s.force_sum);
  return m;
}

double TrajectorySummary::max_momentum() const {
  double m = 0.0;
  for (const auto& s : steps) m = std::max(m, s.momentum);
  return m;
}

std::pair<std::vector<int>, std::vector<int>> select_grips(const SimulationState& state, int axis, double width) {
  if (axis < 0 || axis > 2) throw ConfigError("stretch axis must be 0, 1 or 2");
  std::pair<std::vector<int>, std::vector<int>> grips;
  if (state.size() == 0) return grips;
  const double lo = state.positions.row(axis).minCoeff();
  const double hi = state.positions.row(axis).maxCoeff();
  for (int i = 0; i < state.size(); ++i) {
    const double z = state.positions(axis, i);
    if (z < lo + width) {
      grips.first.push_back(i);
    } else if (z > hi - width) {
      grips.second.push_back(i);
    }
  }
  return grips;
}

namespace {

StepRecord record(const SimulationState& s, int step) {
  StepRecord r;
  r.step = step;
  r.time = s.time;
  r.potential = s.potential_energy;
  r.kinetic = s.kinetic_energy();
  r.force_sum = s.forces.rowwise().sum().norm();
  r.momentum = s.momentum().norm();
  return r;
}

TrajectorySummary integrate(SimulationState& state, const ParamTable& params, const RunConfig& cfg,
                            std::span<const char> frozen, const StepObserver& observe) {
  if (cfg.steps < 0) throw ConfigError("step count must be non-negative");
  if (!(cfg.dt > 0.0)) throw ConfigError("time step must be positive");
  validate_state(state, params.species_count());

  ForceField ff(params, cfg.variant, cfg.kernel, cfg.skin);
  TrajectorySummary out;
  out.atoms = state.size();
  ff.compute(state);
  out.steps.push_back(record(state, 0));
  if (observe) observe(state, out.steps.back());

  const double setup = ff.force_seconds() + ff.neighbor_seconds();
  double stepping = 0.0;
  for (int step = 1; step <= cfg.steps; ++step) {
    const auto t0 = Clock::now();
    velocity_verlet_step(state, cfg.dt, ff, frozen);
    stepping += seconds_since(t0);
    out.steps.push_back(record(state, step));
    if (observe) observe(state, out.steps.back());
  }
  out.rebuilds = ff.rebuilds();
  out.force_seconds = ff.force_seconds();
  out.neighbor_seconds = ff.neighbor_seconds();
  out.integrate_seconds = std::max(0.0, stepping - (out.force_seconds + out.neighbor_seconds - setup));
  return out;
}

}  // namespace

TrajectorySummary run_nve(SimulationState& state, const ParamTable& params, const RunConfig& cfg,
                          const StepObserver& observe) {
  return integrate(state, params, cfg, {}, observe);
}

TrajectorySummary run_stretch(SimulationState& state, const ParamTable& params, const RunConfig& cfg,
                              const StepObserver& observe) {
  if (!cfg.stretch) throw ConfigError("stretch run without stretch settings");
  const auto& spec = *cfg.stretch;
  if (spec.axis < 0 || spec.axis > 2) throw ConfigError("stretch axis must be 0, 1 or 2");
  if (state.box.periodic[static_cast<std::size_t>(spec.axis)]) {
    throw ConfigError("cannot stretch along a periodic axis");
  }
  const auto [low, high] = select_grips(state, spec.axis, spec.grip_width);
  if (low.empty() || high.empty()) throw ConfigError("stretch grips are empty; increase the grip width");
  if (spec.pull_speed == 0.0) {
    auto out = run_nve(state, params, cfg, observe);
    return out;
  }

  std::vector<char> frozen(static_cast<std::size_t>(state.size()), 0);
  for (int i : low) {
    frozen[static_cast<std::size_t>(i)] = 1;
    state.velocities.col(i).setZero();
    state.velocities(spec.axis, i) = -0.5 * spec.pull_speed;
  }
  for (int i : high) {
    frozen[static_cast<std::size_t>(i)] = 1;
    state.velocities.col(i).setZero();
    state.velocities(spec.axis, i) = 0.5 * spec.pull_speed;
  }
  auto out = integrate(state, params, cfg, frozen, observe);
  out.grip_atoms = static_cast<int>(low.size() + high.size());
  return out;
}

}  // namespace tersoff
