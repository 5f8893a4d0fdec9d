#include <bit>
#include <random>

#include <gtest/gtest.h>
#include <quadmath.h>

#include "tersoff/potential.hpp"
#include "tersoff/system.hpp"

using namespace tersoff;
using quad = __float128;

namespace {

std::int64_t ulps(double a, double b) {
  auto key = [](double x) {
    const auto i = std::bit_cast<std::int64_t>(x);
    return i < 0 ? std::numeric_limits<std::int64_t>::min() - i : i;
  };
  const auto d = key(a) - key(b);
  return d < 0 ? -d : d;
}

const TersoffParams carbon = carbon_params()(0, 0, 0);

TersoffParams random_params(std::mt19937_64& rng) {
  auto u = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  TersoffParams p;
  p.m = (rng() & 1) ? 3.0 : 1.0;
  p.gamma = u(0.1, 2.0);
  p.lambda3 = u(0.0, 2.0);
  p.c = u(0.5, 1e5);
  p.d = u(0.5, 20.0);
  p.h = u(-1.0, 1.0);
  p.eta = u(0.3, 25.0);
  p.beta = u(1e-7, 1.0);
  p.lambda2 = u(1.0, 3.0);
  p.B = u(50.0, 500.0);
  p.R = u(1.8, 3.0);
  p.D = u(0.05, 0.3);
  p.lambda1 = u(2.0, 4.0);
  p.A = u(1e3, 4e3);
  return p;
}

Eigen::Vector3d random_direction(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Eigen::Vector3d v(n(rng), n(rng), n(rng));
  return v.normalized();
}

// zeta contribution from raw positions, for finite differences
double zeta_at(const Eigen::Vector3d& xi, const Eigen::Vector3d& xj, const Eigen::Vector3d& xk,
               const TersoffParams& p) {
  const auto g = TripletGeometry<double>::from_displacements(xj - xi, xk - xi);
  return zeta_term(g, p).value;
}

}  // namespace

TEST(Cutoff, Boundaries) {
  const double R = carbon.R, D = carbon.D;
  auto a = f_cutoff(R - D, carbon);
  EXPECT_EQ(a.value, 1.0);
  EXPECT_EQ(a.slope, 0.0);
  a = f_cutoff(R, carbon);
  EXPECT_DOUBLE_EQ(a.value, 0.5);
  EXPECT_NEAR(a.slope, -M_PI / (4 * D), 1e-14);
  a = f_cutoff(R + D + 1e-12, carbon);
  EXPECT_EQ(a.value, 0.0);
  EXPECT_EQ(a.slope, 0.0);
  a = f_cutoff(R + D, carbon);
  EXPECT_EQ(a.value, 0.0);
}

TEST(Cutoff, DerivativeAndContinuity) {
  const double R = carbon.R, D = carbon.D;
  for (double r = R - D + 1e-3; r < R + D - 1e-3; r += 0.01) {
    const double h = 1e-6;
    const double fd = (f_cutoff(r + h, carbon).value - f_cutoff(r - h, carbon).value) / (2 * h);
    EXPECT_NEAR(f_cutoff(r, carbon).slope, fd, 1e-7);
    const auto v = f_cutoff(r, carbon).value;
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  // C1 at both ends
  EXPECT_NEAR(f_cutoff(R - D + 1e-9, carbon).value, 1.0, 1e-12);
  EXPECT_NEAR(f_cutoff(R + D - 1e-9, carbon).value, 0.0, 1e-12);
  EXPECT_NEAR(f_cutoff(R + D - 1e-9, carbon).slope, 0.0, 1e-6);
}

TEST(PairFunctions, Limits) {
  const auto fr = f_repulsive(1e-300, carbon);
  const auto fa = f_attractive(1e-300, carbon);
  EXPECT_DOUBLE_EQ(fr.value, carbon.A);
  EXPECT_DOUBLE_EQ(fa.value, -carbon.B);
  auto p = carbon;
  p.lambda1 = 0.0;
  for (double r : {0.5, 1.0, 2.0, 10.0}) EXPECT_EQ(f_repulsive(r, p).value, p.A);
  for (double r : {0.5, 1.4, 2.0}) {
    EXPECT_GT(f_repulsive(r, carbon).value, 0.0);
    EXPECT_LT(f_attractive(r, carbon).value, 0.0);
  }
}

TEST(PairFunctions, WithinTwoUlpOfQuad) {
  std::mt19937_64 rng(1);
  std::int64_t worst = 0;
  for (int n = 0; n < 20000; ++n) {
    const auto p = random_params(rng);
    const double r = std::uniform_real_distribution<double>(0.3, 3.5)(rng);
    const double fr = static_cast<double>(quad(p.A) * expq(-quad(p.lambda1) * quad(r)));
    const double fa = static_cast<double>(-quad(p.B) * expq(-quad(p.lambda2) * quad(r)));
    worst = std::max({worst, ulps(f_repulsive(r, p).value, fr), ulps(f_attractive(r, p).value, fa)});
    const double dfr = static_cast<double>(-quad(p.lambda1) * quad(p.A) * expq(-quad(p.lambda1) * quad(r)));
    EXPECT_NEAR(f_repulsive(r, p).slope, dfr, 1e-15 * std::abs(dfr));
  }
  EXPECT_LE(worst, 2);
}

TEST(Angle, StationaryAtH) {
  const auto g = g_angle(carbon.h, carbon);
  EXPECT_DOUBLE_EQ(g.value, carbon.gamma);
  EXPECT_EQ(g.slope, 0.0);
  auto p = carbon;
  p.c = 0.0;
  for (double c : {-1.0, -0.3, 0.2, 1.0}) {
    EXPECT_EQ(g_angle(c, p).value, p.gamma);
    EXPECT_EQ(g_angle(c, p).slope, 0.0);
  }
}

TEST(Angle, WithinTwoUlpOfQuad) {
  std::mt19937_64 rng(2);
  std::int64_t worst = 0;
  for (int n = 0; n < 20000; ++n) {
    const auto p = random_params(rng);
    const double cs = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
    const quad c2 = quad(p.c) * quad(p.c), d2 = quad(p.d) * quad(p.d), u = quad(p.h) - quad(cs);
    const quad exact = quad(p.gamma) * (1 + c2 / d2 - c2 / (d2 + u * u));
    worst = std::max(worst, ulps(g_angle(cs, p).value, static_cast<double>(exact)));
    const double h = 1e-7;
    const double fd = (g_angle(cs + h, p).value - g_angle(cs - h, p).value) / (2 * h);
    EXPECT_NEAR(g_angle(cs, p).slope, fd, 1e-5 * std::max(1.0, std::abs(fd)));
  }
  EXPECT_LE(worst, 2);
}

TEST(BondOrder, Identities) {
  EXPECT_EQ(bond_order(0.0, carbon).value, 1.0);
  EXPECT_EQ(bond_order(0.0, carbon).slope, 0.0);
  EXPECT_EQ(bond_order(1e-40, carbon).slope, 0.0);
  auto p = carbon;
  p.beta = 0.0;
  for (double z : {0.0, 0.5, 3.0, 100.0}) EXPECT_EQ(bond_order(z, p).value, 1.0);
  double prev = 1.0;
  for (double z = 0.01; z < 20; z *= 1.5) {
    const double b = bond_order(z, carbon).value;
    EXPECT_LT(b, prev);
    EXPECT_GT(b, 0.0);
    prev = b;
  }
}

TEST(BondOrder, AgainstQuad) {
  std::mt19937_64 rng(3);
  for (int n = 0; n < 5000; ++n) {
    const auto p = random_params(rng);
    const double z = std::exp(std::uniform_real_distribution<double>(-10, 4)(rng));
    // b - 1 = expm1(-log1p((beta z)^eta) / (2 eta)) keeps the variation resolvable
    auto minus_one = [&](quad zz) {
      return expm1q(-log1pq(powq(quad(p.beta) * zz, quad(p.eta))) / (2 * quad(p.eta)));
    };
    const auto b = bond_order(z, p);
    const double v = static_cast<double>(1 + minus_one(z));
    EXPECT_NEAR(b.value, v, 1e-10 * std::abs(v));
    const quad h = quad(z) * 1e-9Q;
    const double d = static_cast<double>((minus_one(quad(z) + h) - minus_one(quad(z) - h)) / (2 * h));
    EXPECT_NEAR(b.slope, d, 1e-10 * std::abs(d) + 1e-300);
  }
}

TEST(BondOrder, LargeEtaSinglePrecision) {
  // (beta zeta)^eta overflows float long before b gets small
  TersoffParams p = carbon;
  p.beta = 0.33675;
  p.eta = 22.956;
  for (double z : {1.0, 5.0, 50.0, 500.0, 5e4}) {
    const quad x = quad(p.beta) * quad(z);
    const quad t = powq(x, quad(p.eta));
    const double want = static_cast<double>(powq(1 + t, -0.5Q / quad(p.eta)));
    const double want_slope = static_cast<double>(-0.5Q * powq(1 + t, -0.5Q / quad(p.eta)) * t / (1 + t) / quad(z));
    const auto bf = bond_order(static_cast<float>(z), p);
    EXPECT_TRUE(std::isfinite(bf.value) && std::isfinite(bf.slope)) << z;
    EXPECT_NEAR(bf.value, want, 1e-6 * want) << z;
    EXPECT_NEAR(bf.slope, want_slope, 1e-5 * std::abs(want_slope)) << z;
    const auto bd = bond_order(z, p);
    EXPECT_NEAR(bd.value, want, 1e-14 * want) << z;
  }
}

TEST(ZetaTerm, BeyondCutoffIsZero) {
  const Eigen::Vector3d xi(0, 0, 0), xj(1.4, 0, 0), xk(0, carbon.R + carbon.D, 0);
  const auto g = TripletGeometry<double>::from_displacements(xj - xi, xk - xi);
  const auto t = zeta_term(g, carbon);
  EXPECT_EQ(t.value, 0.0);
  EXPECT_EQ(t.d_xi.norm(), 0.0);
  EXPECT_EQ(t.d_xj.norm(), 0.0);
  EXPECT_EQ(t.d_xk.norm(), 0.0);
}

TEST(ZetaTerm, NoExponentialWhenLambda3Zero) {
  auto p = carbon;
  p.lambda3 = 0.0;
  const Eigen::Vector3d xj(1.4, 0.1, 0), xk(-0.3, 1.5, 0.2);
  const auto g = TripletGeometry<double>::from_displacements(xj, xk);
  EXPECT_DOUBLE_EQ(zeta_term(g, p).value, f_cutoff(g.r_ik, p).value * g_angle(g.cos_theta, p).value);
}

TEST(ZetaTerm, ExponentM1AndM3) {
  auto p = carbon;
  p.lambda3 = 1.7;
  const Eigen::Vector3d xj(1.2, 0.0, 0), xk(0.2, 1.6, 0.1);
  const auto g = TripletGeometry<double>::from_displacements(xj, xk);
  const double base = f_cutoff(g.r_ik, p).value * g_angle(g.cos_theta, p).value;
  const double a = p.lambda3 * (g.r_ij - g.r_ik);
  p.m = 1.0;
  EXPECT_NEAR(zeta_term(g, p).value, base * std::exp(a), 1e-14);
  p.m = 3.0;
  EXPECT_NEAR(zeta_term(g, p).value, base * std::exp(a * a * a), 1e-14);
}

TEST(ZetaTerm, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(4);
  int tested = 0;
  for (int n = 0; n < 500; ++n) {
    const auto p = random_params(rng);
    const Eigen::Vector3d xi(0.1, -0.2, 0.3);
    const double rij = std::uniform_real_distribution<double>(1.0, p.R + p.D)(rng);
    const double rik = std::uniform_real_distribution<double>(1.0, p.R + p.D)(rng);
    if (std::abs(rik - (p.R - p.D)) < 1e-3 || std::abs(rik - (p.R + p.D)) < 1e-3) continue;
    const Eigen::Vector3d xj = xi + rij * random_direction(rng);
    const Eigen::Vector3d xk = xi + rik * random_direction(rng);
    const auto g = TripletGeometry<double>::from_displacements(xj - xi, xk - xi);
    const auto t = zeta_term(g, p);

    // translation invariance
    const double scale = t.d_xj.norm() + t.d_xk.norm() + 1e-300;
    EXPECT_LE((t.d_xi + t.d_xj + t.d_xk).norm(), 1e-12 * scale);

    const double h = 1e-6;
    for (int atom = 0; atom < 3; ++atom) {
      for (int c = 0; c < 3; ++c) {
        Eigen::Vector3d pos[3] = {xi, xj, xk};
        pos[atom][c] += h;
        const double ep = zeta_at(pos[0], pos[1], pos[2], p);
        pos[atom][c] -= 2 * h;
        const double em = zeta_at(pos[0], pos[1], pos[2], p);
        const double fd = (ep - em) / (2 * h);
        const Eigen::Vector3d& an = atom == 0 ? t.d_xi : atom == 1 ? t.d_xj : t.d_xk;
        if (std::abs(fd) < 1e-4 * std::max(1.0, t.value)) continue;
        EXPECT_LE(std::abs(an[c] - fd), 1e-6 * std::abs(fd)) << "atom " << atom << " c " << c;
        ++tested;
      }
    }
  }
  EXPECT_GT(tested, 1000);
}

TEST(PairEnergyForce, BeyondCutoff) {
  const Eigen::Vector3d e(1, 0, 0);
  const auto t = pair_energy_force(carbon.R + carbon.D, e, 0.5, carbon);
  EXPECT_EQ(t.energy, 0.0);
  EXPECT_EQ(t.dV_dxi.norm(), 0.0);
  EXPECT_EQ(t.dV_dxj.norm(), 0.0);
  EXPECT_EQ(t.delta_zeta, 0.0);
}

TEST(PairEnergyForce, ZeroZetaIsPlainPair) {
  const Eigen::Vector3d e(0, 1, 0);
  for (double r : {1.2, 1.4, 1.9, 2.05}) {
    const auto t = pair_energy_force(r, e, 0.0, carbon);
    EXPECT_DOUBLE_EQ(t.energy, f_cutoff(r, carbon).value *
                                   (f_repulsive(r, carbon).value + f_attractive(r, carbon).value));
    EXPECT_EQ(t.delta_zeta, 0.0);
  }
}

TEST(PairEnergyForce, FiniteDifferences) {
  std::mt19937_64 rng(5);
  for (int n = 0; n < 2000; ++n) {
    const auto p = random_params(rng);
    const double r = std::uniform_real_distribution<double>(0.8, p.R + p.D - 1e-3)(rng);
    if (std::abs(r - (p.R - p.D)) < 1e-3) continue;
    const double zeta = std::uniform_real_distribution<double>(0.01, 5.0)(rng);
    const Eigen::Vector3d e = random_direction(rng);
    const auto t = pair_energy_force(r, e, zeta, p);
    EXPECT_LE((t.dV_dxi + t.dV_dxj).norm(), 0.0);

    const double h = 1e-6;
    const double fd_r =
        (pair_energy_force(r + h, e, zeta, p).energy - pair_energy_force(r - h, e, zeta, p).energy) / (2 * h);
    const double an_r = t.dV_dxj.dot(e);
    if (std::abs(fd_r) > 1e-4) EXPECT_LE(std::abs(an_r - fd_r), 1e-6 * std::abs(fd_r));
    const double hz = 1e-4 * zeta;
    const double fd_z =
        (pair_energy_force(r, e, zeta + hz, p).energy - pair_energy_force(r, e, zeta - hz, p).energy) / (2 * hz);
    // roundoff of the energy difference is about 1e-16 |E| / hz
    if (std::abs(fd_z) > 1e-2) EXPECT_LE(std::abs(t.delta_zeta - fd_z), 1e-6 * std::abs(fd_z));
  }
}

TEST(LaneForm, StrictBitIdenticalToScalar) {
  constexpr int W = 8;
  using V = simd::LaneVector<double, W>;
  std::mt19937_64 rng(6);
  const auto tp = three_body_params<double>(carbon);
  const auto pp = pair_params<double>(carbon);
  for (int n = 0; n < 200; ++n) {
    XYZ<V> eij, eik;
    V rij, rik, zeta;
    for (int l = 0; l < W; ++l) {
      const auto a = random_direction(rng);
      const auto b = random_direction(rng);
      eij.x[l] = a.x(), eij.y[l] = a.y(), eij.z[l] = a.z();
      eik.x[l] = b.x(), eik.y[l] = b.y(), eik.z[l] = b.z();
      rij[l] = std::uniform_real_distribution<double>(1.0, 2.2)(rng);
      rik[l] = std::uniform_real_distribution<double>(1.0, 2.2)(rng);
      zeta[l] = std::uniform_real_distribution<double>(0.0, 3.0)(rng);
    }
    ThreeBodyParams<V> tv{tp.gamma, tp.c2, tp.c2_lo, tp.d2, tp.d2_lo, tp.h, tp.lambda3, tp.m_is_cubic, tp.R, tp.D};
    PairParams<V> pv{pp.A, pp.B, pp.lambda1, pp.lambda2, pp.beta, pp.eta, pp.R, pp.D};
    const auto zt = zeta_term(eij, rij, eik, rik, tv);
    const auto pt = pair_term(eij, rij, zeta, pv);
    for (int l = 0; l < W; ++l) {
      const XYZ<double> a{eij.x[l], eij.y[l], eij.z[l]}, b{eik.x[l], eik.y[l], eik.z[l]};
      const auto zs = zeta_term(a, rij[l], b, rik[l], tp);
      const auto ps = pair_term(a, rij[l], zeta[l], pp);
      EXPECT_EQ(zt.value[l], zs.value);
      EXPECT_EQ(zt.d_xk.y[l], zs.d_xk.y);
      EXPECT_EQ(zt.d_xi.z[l], zs.d_xi.z);
      EXPECT_EQ(pt.energy[l], ps.energy);
      EXPECT_EQ(pt.dV_dxj.x[l], ps.dV_dxj.x);
      EXPECT_EQ(pt.delta_zeta[l], ps.delta_zeta);
    }
  }
}

TEST(LaneForm, FastCloseToScalar) {
  constexpr int W = 8;
  using V = simd::LaneVector<double, W, simd::FastMath>;
  std::mt19937_64 rng(7);
  const auto pp = pair_params<double>(carbon);
  for (int n = 0; n < 200; ++n) {
    XYZ<V> e{V(1.0), V(0.0), V(0.0)};
    V r, zeta;
    for (int l = 0; l < W; ++l) {
      r[l] = std::uniform_real_distribution<double>(1.0, 2.1)(rng);
      zeta[l] = std::uniform_real_distribution<double>(0.0, 3.0)(rng);
    }
    PairParams<V> pv{pp.A, pp.B, pp.lambda1, pp.lambda2, pp.beta, pp.eta, pp.R, pp.D};
    const auto pt = pair_term(e, r, zeta, pv);
    for (int l = 0; l < W; ++l) {
      const auto ps = pair_term(XYZ<double>{1.0, 0.0, 0.0}, r[l], zeta[l], pp);
      EXPECT_NEAR(pt.energy[l], ps.energy, 1e-13 * (std::abs(ps.energy) + 1.0));
    }
  }
}
