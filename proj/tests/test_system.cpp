#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace tersoff;
using namespace testing_support;

namespace {

// neighbor counts within `r` by brute force
std::vector<int> coordination(const SimulationState& s, double r) {
  std::vector<int> out(static_cast<std::size_t>(s.size()), 0);
  for (int i = 0; i < s.size(); ++i) {
    for (int j = 0; j < s.size(); ++j) {
      if (i != j && s.box.minimum_image(s.positions.col(j) - s.positions.col(i)).norm() < r) {
        ++out[static_cast<std::size_t>(i)];
      }
    }
  }
  return out;
}

double nearest_distance(const SimulationState& s, int i) {
  double best = std::numeric_limits<double>::infinity();
  for (int j = 0; j < s.size(); ++j) {
    if (j != i) best = std::min(best, s.box.minimum_image(s.positions.col(j) - s.positions.col(i)).norm());
  }
  return best;
}

RunConfig config(int steps, Variant tag = Variant::ScalarOpt) {
  RunConfig cfg;
  cfg.steps = steps;
  cfg.variant = scalar_variant(tag);
  return cfg;
}

bool same_positions(const SimulationState& a, const SimulationState& b) {
  return a.positions.size() == b.positions.size() &&
         std::equal(a.positions.data(), a.positions.data() + a.positions.size(), b.positions.data());
}

}  // namespace

TEST(Nanotube, ShapeAndBonds) {
  const double b = graphene_bond_length;
  const auto s = gen_nanotube(5, 10);
  ASSERT_EQ(s.size(), 200);
  EXPECT_FALSE(s.box.any_periodic());
  const double radius = nanotube_radius(5, b);
  for (int i = 0; i < s.size(); ++i) {
    EXPECT_NEAR(std::hypot(s.positions(0, i), s.positions(1, i)), radius, 1e-12);
    EXPECT_NEAR(nearest_distance(s, i), b, 1e-12);
  }
  const auto z = coordination(s, 1.1 * b);
  const double lo = s.positions.row(2).minCoeff(), hi = s.positions.row(2).maxCoeff();
  EXPECT_NEAR(hi - lo, (10 * std::sqrt(3.0) - std::sqrt(3.0) / 2.0) * b, 1e-9);
  for (int i = 0; i < s.size(); ++i) {
    const int want = (s.positions(2, i) - lo < 0.1 || hi - s.positions(2, i) < 0.1) ? 2 : 3;
    EXPECT_EQ(z[static_cast<std::size_t>(i)], want) << "atom " << i;
  }
}

TEST(Nanotube, PeriodicAllThreeCoordinated) {
  const auto s = gen_nanotube(6, 4, 1.42, true);
  EXPECT_EQ(s.size(), 96);
  EXPECT_TRUE(s.box.periodic[2]);
  EXPECT_NEAR(s.box.lengths[2], 4 * std::sqrt(3.0) * 1.42, 1e-12);
  for (int n : coordination(s, 1.1 * 1.42)) EXPECT_EQ(n, 3);
}

TEST(Nanotube, ScalesWithBondLength) {
  const auto a = gen_nanotube(5, 3, 1.0);
  const auto b = gen_nanotube(5, 3, 1.5);
  EXPECT_LE((1.5 * a.positions - b.positions).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(nanotube_radius(5, 1.5), 1.5 * nanotube_radius(5, 1.0), 1e-12);
  EXPECT_THROW(gen_nanotube(1, 3), ConfigError);
  EXPECT_THROW(gen_nanotube(5, 0), ConfigError);
}

TEST(Diamond, CoordinationAndSpacing) {
  const double a = diamond_lattice_constant;
  const auto s = gen_diamond(3);
  ASSERT_EQ(s.size(), 216);
  EXPECT_TRUE(s.box.periodic[0] && s.box.periodic[1] && s.box.periodic[2]);
  const double nn = a * std::sqrt(3.0) / 4.0;
  for (int i = 0; i < s.size(); ++i) EXPECT_NEAR(nearest_distance(s, i), nn, 1e-12);
  for (int n : coordination(s, 1.1 * nn)) EXPECT_EQ(n, 4);
  // second shell at a / sqrt(2), 12 atoms
  for (int n : coordination(s, 1.05 * a / std::sqrt(2.0))) EXPECT_EQ(n, 16);
}

TEST(Diamond, ForcesVanishAndVariantsAgree) {
  const auto params = carbon_params();
  const auto s = gen_diamond(3);
  for (const auto& v : all_variants()) {
    const auto res = evaluate(s, params, v);
    EXPECT_LE(res.forces.cwiseAbs().maxCoeff(), 1e-10) << label(v);
    EXPECT_NEAR(res.potential_energy / 216.0, evaluate(s, params, scalar_variant(Variant::Reference)).potential_energy / 216.0,
                1e-12);
  }
}

TEST(RandomCluster, SeededAndSpaced) {
  ClusterOptions opts;
  const auto a = gen_random_cluster(120, 5, opts);
  const auto b = gen_random_cluster(120, 5, opts);
  const auto c = gen_random_cluster(120, 6, opts);
  EXPECT_TRUE(same_positions(a, b));
  EXPECT_FALSE(same_positions(a, c));
  for (int i = 0; i < a.size(); ++i) EXPECT_GE(nearest_distance(a, i), opts.min_distance);
  opts.density = 5.0;
  EXPECT_THROW(gen_random_cluster(200, 1, opts), ConfigError);
}

TEST(RandomCluster, AvoidsKinkShells) {
  const auto params = carbon_params();
  const auto radii = kink_radii(params);
  const auto s = random_cluster(100, 3, params, 0.15, radii, 0.01);
  for (int i = 0; i < s.size(); ++i) {
    for (int j = i + 1; j < s.size(); ++j) {
      const double r = (s.positions.col(j) - s.positions.col(i)).norm();
      for (double k : radii) EXPECT_GE(std::abs(r - k), 0.01);
    }
  }
}

TEST(Velocities, TemperatureAndMomentum) {
  auto s = gen_nanotube(10, 50);
  assign_velocities(s, 300.0, 42);
  EXPECT_LE(s.momentum().norm(), 1e-12 * s.size());
  const double t = 2.0 * s.kinetic_energy() / (3.0 * s.size() * units::boltzmann);
  EXPECT_NEAR(t, 300.0, 15.0);
}

TEST(Verlet, IsolatedAtomsMoveBallistically) {
  const auto params = carbon_params();
  auto s = SimulationState::with_atoms(3);
  s.positions.col(1) = Eigen::Vector3d(10, 0, 0);
  s.positions.col(2) = Eigen::Vector3d(0, 10, 0);
  s.velocities.col(0) = Eigen::Vector3d(0.01, 0.0, 0.0);
  s.velocities.col(2) = Eigen::Vector3d(-0.002, 0.003, 0.001);
  const auto start = s.positions;
  const auto out = run_nve(s, params, config(100));
  EXPECT_EQ(out.steps.size(), 101u);
  EXPECT_NEAR(s.time, 50.0, 1e-12);
  EXPECT_LE((s.positions - (start + 50.0 * s.velocities)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(s.positions.col(1), start.col(1));
}

TEST(Verlet, RelaxedStructureStaysPut) {
  const auto params = carbon_params();
  auto s = gen_diamond(2);
  const auto start = s.positions;
  run_nve(s, params, config(20));
  EXPECT_LE((s.positions - start).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Verlet, TimeReversible) {
  const auto params = carbon_params();
  auto s = gen_nanotube(5, 4);
  assign_velocities(s, 300.0, 1);
  const auto start = s.positions;
  run_nve(s, params, config(100));
  s.velocities = -s.velocities;
  run_nve(s, params, config(100));
  EXPECT_LE((s.positions - start).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Verlet, DimerOscillatesAndConserves) {
  const auto params = carbon_params();
  auto s = SimulationState::with_atoms(2);
  s.positions.col(1) = Eigen::Vector3d(1.35, 0, 0);
  auto cfg = config(2000);
  cfg.dt = 0.1;
  double rmin = 10, rmax = 0;
  const auto out = run_nve(s, params, cfg, [&](const SimulationState& st, const StepRecord&) {
    const double r = (st.positions.col(1) - st.positions.col(0)).norm();
    rmin = std::min(rmin, r);
    rmax = std::max(rmax, r);
  });
  EXPECT_NEAR(rmin, 1.35, 1e-3);
  EXPECT_GT(rmax, 1.5);
  EXPECT_LT(rmax, 2.0);
  // Verlet error is bounded and O(dt^2)
  EXPECT_LE(out.energy_drift(), 2e-5) << rmax;
  EXPECT_LE(out.max_momentum(), 1e-12);
}

TEST(Verlet, SkinDoesNotChangeTrajectory) {
  const auto params = carbon_params();
  auto a = gen_nanotube(5, 4);
  assign_velocities(a, 2000.0, 9);
  auto b = a;
  auto ca = config(150), cb = config(150);
  ca.skin = 0.0;
  cb.skin = 1.0;
  const auto oa = run_nve(a, params, ca);
  const auto ob = run_nve(b, params, cb);
  EXPECT_GT(oa.rebuilds, ob.rebuilds);
  EXPECT_TRUE(same_positions(a, b));
}

TEST(Verlet, ThreadCountDoesNotChangeTrajectory) {
  const auto params = carbon_params();
  auto a = gen_nanotube(5, 6);
  assign_velocities(a, 600.0, 2);
  auto b = a;
  auto ca = config(60), cb = config(60);
  cb.kernel.threads = 4;
  run_nve(a, params, ca);
  run_nve(b, params, cb);
  EXPECT_TRUE(same_positions(a, b));
}

TEST(Verlet, ReferenceAndVecITrajectoriesAgree) {
  const auto params = carbon_params();
  auto a = gen_nanotube(5, 10);
  assign_velocities(a, 300.0, 7);
  auto b = a;
  run_nve(a, params, config(100, Variant::Reference));
  auto cb = config(100);
  cb.variant = vector_variant(Variant::VecI, BackendKind::Emulated, 8);
  run_nve(b, params, cb);
  EXPECT_LE((a.positions - b.positions).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Conservation, ShortNanotubeRun) {
  const auto params = carbon_params();
  auto s = gen_nanotube(5, 10);
  assign_velocities(s, 300.0, 11);
  const auto out = run_nve(s, params, config(200));
  EXPECT_LE(out.energy_drift(), 1e-4);
  EXPECT_LE(out.max_force_sum(), 1e-9 * s.size());
  EXPECT_LE(out.max_momentum(), 1e-9 * s.size());
}

TEST(Errors, CoincidentAtomsAbort) {
  const auto params = carbon_params();
  auto s = SimulationState::with_atoms(3);
  s.positions.col(1) = Eigen::Vector3d(1.4, 0, 0);
  s.positions.col(2) = s.positions.col(1);
  EXPECT_THROW(run_nve(s, params, config(5)), InputError);
}

TEST(Errors, BadInputs) {
  const auto params = carbon_params();
  auto s = gen_nanotube(5, 2);
  s.positions(0, 3) = std::nan("");
  EXPECT_THROW(run_nve(s, params, config(1)), InputError);
  auto t = gen_nanotube(5, 2);
  auto bad = config(1);
  bad.dt = 0.0;
  EXPECT_THROW(run_nve(t, params, bad), ConfigError);
  bad = config(-1);
  EXPECT_THROW(run_nve(t, params, bad), ConfigError);
  auto u = gen_nanotube(5, 2);
  u.species[0] = 3;
  EXPECT_THROW(run_nve(u, params, config(1)), InputError);
}

TEST(Stretch, ZeroSpeedIsPlainNve) {
  const auto params = carbon_params();
  auto a = gen_nanotube(5, 6);
  assign_velocities(a, 300.0, 4);
  auto b = a;
  auto cfg = config(50);
  run_nve(a, params, cfg);
  cfg.stretch = StretchSpec{};
  const auto out = run_stretch(b, params, cfg);
  EXPECT_EQ(out.grip_atoms, 0);
  EXPECT_TRUE(same_positions(a, b));
}

TEST(Stretch, PullingRaisesEnergyAndMovesGrips) {
  const auto params = carbon_params();
  auto s = gen_nanotube(5, 10);
  const auto [low, high] = select_grips(s, 2, 2.5);
  ASSERT_FALSE(low.empty());
  ASSERT_FALSE(high.empty());
  const auto start = s.positions;
  auto cfg = config(400);
  cfg.stretch = StretchSpec{0.01, 2, 2.5};
  const auto out = run_stretch(s, params, cfg);
  EXPECT_EQ(out.grip_atoms, static_cast<int>(low.size() + high.size()));
  EXPECT_GT(out.steps.back().potential, out.steps.front().potential + 1.0);
  for (int i : low) EXPECT_NEAR(s.positions(2, i) - start(2, i), -0.5 * 0.01 * 200.0, 1e-12);
  for (int i : high) EXPECT_NEAR(s.positions(2, i) - start(2, i), 0.5 * 0.01 * 200.0, 1e-12);
  for (int i : low) EXPECT_EQ(s.positions(0, i), start(0, i));
}

TEST(Stretch, Errors) {
  const auto params = carbon_params();
  auto s = gen_nanotube(5, 4);
  auto cfg = config(1);
  cfg.stretch = StretchSpec{0.01, 2, 0.0};
  EXPECT_THROW(run_stretch(s, params, cfg), ConfigError);
  cfg.stretch = StretchSpec{0.01, 5, 2.5};
  EXPECT_THROW(run_stretch(s, params, cfg), ConfigError);
  auto p = gen_nanotube(5, 4, graphene_bond_length, true);
  cfg.stretch = StretchSpec{0.01, 2, 2.5};
  EXPECT_THROW(run_stretch(p, params, cfg), ConfigError);
}

TEST(Xyz, RoundTrip) {
  auto s = gen_diamond(2);
  s.time = 12.5;
  std::stringstream ss;
  write_xyz(ss, s, "note=x");
  const auto back = read_xyz(ss);
  ASSERT_EQ(back.size(), s.size());
  EXPECT_LE((back.positions - s.positions).cwiseAbs().maxCoeff(), 1e-11);
  EXPECT_EQ(back.box.periodic, s.box.periodic);
  EXPECT_NEAR((back.box.lengths - s.box.lengths).norm(), 0.0, 1e-10);
  EXPECT_EQ(back.type_names, s.type_names);
  EXPECT_DOUBLE_EQ(back.time, 12.5);
}

TEST(Xyz, MixedSpeciesAndOpenBox) {
  std::stringstream ss("3\nplain comment\nSi 0 0 0\nC 1.5 0 0\nSi 0 2 0\n");
  auto s = read_xyz(ss);
  EXPECT_FALSE(s.box.any_periodic());
  EXPECT_EQ(s.type_names, (std::vector<std::string>{"Si", "C"}));
  const auto params = mixed_test_params();
  align_species(s, params);
  EXPECT_EQ(s.species, (std::vector<int>{1, 0, 1}));
  EXPECT_DOUBLE_EQ(s.mass(1), element_mass("C"));
  EXPECT_THROW(align_species(s, carbon_params()), ConfigError);
}

TEST(Xyz, ParseErrorsCarryLines) {
  auto line_of = [](const std::string& text) -> std::size_t {
    std::stringstream ss(text);
    try {
      read_xyz(ss);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  EXPECT_EQ(line_of(""), 1u);
  EXPECT_EQ(line_of("x\n"), 1u);
  EXPECT_EQ(line_of("2\n"), 2u);
  EXPECT_EQ(line_of("2\nc\nC 0 0 0\n"), 4u);
  EXPECT_EQ(line_of("1\nc\nC 0 zero 0\n"), 3u);
  EXPECT_EQ(line_of("1\nc\nXx 0 0 0\n"), 3u);
  EXPECT_EQ(line_of("1\nLattice=\"1 0 0 0 1 0 0 0\"\nC 0 0 0\n"), 2u);
  EXPECT_EQ(line_of("1\npbc=\"T T T\"\nC 0 0 0\n"), 2u);
  EXPECT_THROW(read_xyz_file("/nonexistent.xyz"), ConfigError);
}
