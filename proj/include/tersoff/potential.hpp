#pragma once

// Tersoff component functions and their analytic derivatives.
//
//   V_ij    = f_C(r_ij) [ f_R(r_ij) + b_ij f_A(r_ij) ]
//   b_ij    = (1 + (beta zeta_ij)^eta)^(-1/(2 eta))
//   zeta_ij = sum_k f_C(r_ik) g(theta_ijk) exp((lambda3 (r_ij - r_ik))^m)
//
//   f_C(r) = 1                              r < R - D
//          = 1/2 - 1/2 sin(pi/2 (r - R)/D)  |r - R| <= D
//          = 0                              r > R + D
//   f_R(r) = A exp(-lambda1 r),  f_A(r) = -B exp(-lambda2 r)
//   g(cos) = gamma (1 + c^2/d^2 - c^2/(d^2 + (h - cos)^2))
//
// The total energy sums V_ij over ordered pairs (i, j) with no factor 1/2;
// halve it to compare against codes that count each bond once.
//
// Every function here is a template over the value type V, which is either a
// plain float/double or a simd::LaneVector. The scalar and lane forms share
// one source, so lane l of a vector call is bit-identical to the scalar call
// on lane l's inputs whenever the lane policy is StrictMath.

#include <numbers>

#include <Eigen/Core>

#include "tersoff/params.hpp"
#include "tersoff/simd.hpp"

namespace tersoff {

template <class T>
using Vector3 = Eigen::Matrix<T, 3, 1>;

/// Three components of value type V. Used where V is a lane vector and an
/// Eigen vector is not an option.
template <class V>
struct XYZ {
  V x{}, y{}, z{};

  friend XYZ operator+(const XYZ& a, const XYZ& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend XYZ operator-(const XYZ& a, const XYZ& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend XYZ operator-(const XYZ& a) { return {-a.x, -a.y, -a.z}; }
  friend XYZ operator*(const V& s, const XYZ& a) { return {s * a.x, s * a.y, s * a.z}; }
  XYZ& operator+=(const XYZ& o) { return *this = *this + o; }
};

template <class V>
V dot(const XYZ<V>& a, const XYZ<V>& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}

template <class V>
XYZ<V> select(const simd::mask_t<V>& m, const XYZ<V>& a, const XYZ<V>& b) {
  return {simd::select(m, a.x, b.x), simd::select(m, a.y, b.y), simd::select(m, a.z, b.z)};
}

template <class V>
struct ValueSlope {
  V value;
  V slope;  // derivative with respect to the function's argument
};

/// Parameters the (i, j) pair term needs, from the (i, j, j) entry.
template <class V>
struct PairParams {
  V A, B, lambda1, lambda2, beta, eta, R, D;
};

/// Parameters of the k-contribution to zeta_ij, from the (i, j, k) entry.
template <class V>
struct ThreeBodyParams {
  V gamma, c2, c2_lo, d2, d2_lo, h, lambda3, m_is_cubic, R, D;
};

template <class V, class Rec>
PairParams<V> pair_params_from(const Rec& r) {
  return {V(r[field::A]),       V(r[field::B]),    V(r[field::lambda1]), V(r[field::lambda2]),
          V(r[field::beta]),    V(r[field::eta]),  V(r[field::R]),       V(r[field::D])};
}

template <class V, class Rec>
ThreeBodyParams<V> three_body_params_from(const Rec& r) {
  return {V(r[field::gamma]), V(r[field::c2]),      V(r[field::c2_lo]),      V(r[field::d2]),
          V(r[field::d2_lo]), V(r[field::h]),       V(r[field::lambda3]),    V(r[field::m_is_cubic]),
          V(r[field::R]),     V(r[field::D])};
}

// ---------------------------------------------------------------------------
// Component functions

template <class V>
ValueSlope<V> cutoff_function(const V& r, const V& R, const V& D) {
  using T = simd::scalar_t<V>;
  const T half_pi = static_cast<T>(std::numbers::pi / 2);
  const T quarter_pi = static_cast<T>(std::numbers::pi / 4);
  const T half = T(0.5);

  if constexpr (!simd::is_lane_vector_v<V>) {
    if (r <= R - D) return {T(1), T(0)};
    if (!(r < R + D)) return {T(0), T(0)};
  } else {
    // bonded lanes all inside the plateau is the common case; skip sincos
    if ((r <= R - D).all()) return {V(T(1)), V(T(0))};
  }
  const V arg = (r - R) * (half_pi / D);
  V s;
  V c;
  simd::sincos(arg, s, c);
  const V value = half - half * s;
  const V slope = -(quarter_pi / D) * c;
  if constexpr (simd::is_lane_vector_v<V>) {
    const auto below = r <= R - D;
    const auto inside = (!below) & (r < R + D);
    return {simd::select(below, V(T(1)), simd::select(inside, value, V(T(0)))),
            simd::select(inside, slope, V(T(0)))};
  } else {
    return {value, slope};
  }
}

/// A exp(-lambda1 r). The exponent's rounding error is folded back in, which
/// keeps the result within ~2 ulp of the exact value.
template <class V>
V exp_of_product(const V& a, const V& b) {
  const V p = a * b;
  const V err = simd::fma(a, b, -p);
  const V e = simd::exp(p);
  return simd::fma(e, err, e);
}

template <class V>
ValueSlope<V> repulsive(const V& r, const V& A, const V& lambda1) {
  const V value = A * exp_of_product(-lambda1, r);
  return {value, -lambda1 * value};
}

template <class V>
ValueSlope<V> attractive(const V& r, const V& B, const V& lambda2) {
  const V value = -B * exp_of_product(-lambda2, r);
  return {value, -lambda2 * value};
}

/// a + b = s + e exactly.
template <class V>
void two_sum(const V& a, const V& b, V& s, V& e) {
  s = a + b;
  const V bb = s - a;
  e = (a - (s - bb)) + (b - bb);
}

/// g(cos theta) and dg/dcos. Evaluated as gamma (1 + c^2 u^2 / (d^2 (d^2 + u^2)))
/// with u = h - cos, which avoids the cancellation of the two large c^2/d^2
/// terms. The value is carried in double length (c2_lo, d2_lo hold the
/// rounding of c^2 and d^2) and rounds once at the end; the slope is plain.
template <class V>
ValueSlope<V> angular(const V& cos_theta, const V& gamma, const V& c2, const V& c2_lo, const V& d2,
                      const V& d2_lo, const V& h) {
  using T = simd::scalar_t<V>;
  V u, u_lo;
  two_sum(h, -cos_theta, u, u_lo);
  const V u2 = u * u;
  const V u2_lo = simd::fma(u, u, -u2) + T(2) * u * u_lo;
  V den, den_lo;
  two_sum(d2, u2, den, den_lo);
  den_lo = den_lo + (d2_lo + u2_lo);
  const V num = c2 * u2;
  const V num_lo = simd::fma(c2, u2, -num) + (c2 * u2_lo + c2_lo * u2);
  const V dd = d2 * den;
  const V dd_lo = simd::fma(d2, den, -dd) + (d2 * den_lo + d2_lo * den);
  // one division; the residual num - t dd is exact, so t + t_lo stays double length
  const V inv_dd = T(1) / dd;
  const V t = num * inv_dd;
  const V t_lo = (simd::fma(-t, dd, num) + (num_lo - t * dd_lo)) * inv_dd;
  V s, s_lo;
  two_sum(V(T(1)), t, s, s_lo);
  s_lo = s_lo + t_lo;
  const V p = gamma * s;
  const V value = p + (simd::fma(gamma, s, -p) + gamma * s_lo);
  const V inv_den = d2 * inv_dd;
  const V slope = T(-2) * gamma * c2 * u * inv_den * inv_den;
  return {value, slope};
}

/// Zeta below this is treated as zero when differentiating the bond order.
template <class T>
inline constexpr T zeta_floor = T(1e-30);

template <class V>
ValueSlope<V> bond_order(const V& zeta, const V& beta, const V& eta) {
  using T = simd::scalar_t<V>;
  // With u = eta ln(beta zeta): b = exp(-(max(u, 0) + ln(1 + exp(-|u|))) / 2eta).
  // Equal to (1 + (beta zeta)^eta)^(-1/2eta) but nothing overflows for large
  // eta, and it costs two logs and two exps instead of powers.
  const V u = eta * simd::log(beta * zeta);
  const V s = simd::exp(simd::min(u, -u));
  const V one_plus = T(1) + s;
  const V e = T(-0.5) / eta;
  const V value = simd::exp(e * (simd::max(u, V(T(0))) + simd::log(one_plus)));
  if constexpr (simd::is_lane_vector_v<V>) {
    const V ratio = simd::select(u > V(T(0)), T(1) / one_plus, s / one_plus);  // t / (1 + t), t = e^u
    const V slope = T(-0.5) * value * ratio / zeta;
    return {value, simd::select(zeta < V(zeta_floor<T>), V(T(0)), slope)};
  } else {
    const T ratio = u > T(0) ? T(1) / one_plus : s / one_plus;
    const T slope = T(-0.5) * value * ratio / zeta;
    return {value, zeta < zeta_floor<T> ? T(0) : slope};
  }
}

// ---------------------------------------------------------------------------
// Zeta contribution of one neighbor k to the (i, j) bond

template <class V>
struct ZetaTerm {
  V value;
  XYZ<V> d_xi, d_xj, d_xk;
};

template <class V>
V clamp_cosine(const V& c) {
  using T = simd::scalar_t<V>;
  return simd::max(V(T(-1)), simd::min(V(T(1)), c));
}

template <class V>
struct ExpFactor {
  V value;
  V slope;  // derivative with respect to r_ij - r_ik
};

template <class V>
ExpFactor<V> zeta_exponential(const V& r_ij, const V& r_ik, const V& lambda3, const V& m_is_cubic) {
  using T = simd::scalar_t<V>;
  const V a = lambda3 * (r_ij - r_ik);
  V arg;
  V darg;
  if constexpr (simd::is_lane_vector_v<V>) {
    const auto cubic = m_is_cubic != V(T(0));
    arg = simd::select(cubic, a * a * a, a);
    darg = simd::select(cubic, T(3) * lambda3 * a * a, lambda3);
  } else {
    const bool cubic = m_is_cubic != T(0);
    arg = cubic ? a * a * a : a;
    darg = cubic ? T(3) * lambda3 * a * a : lambda3;
  }
  const V e = simd::exp(arg);
  return {e, e * darg};
}

/// Value of the k-contribution only; the first k-loop of the reference
/// algorithm needs nothing more.
template <class V>
V zeta_value(const XYZ<V>& e_ij, const V& r_ij, const XYZ<V>& e_ik, const V& r_ik,
             const ThreeBodyParams<V>& p) {
  const V cos_theta = clamp_cosine(dot(e_ij, e_ik));
  const auto fc = cutoff_function(r_ik, p.R, p.D);
  const auto g = angular(cos_theta, p.gamma, p.c2, p.c2_lo, p.d2, p.d2_lo, p.h);
  const auto ex = zeta_exponential(r_ij, r_ik, p.lambda3, p.m_is_cubic);
  return fc.value * g.value * ex.value;
}

/// Value and position gradients. e_ij, e_ik are unit vectors from i.
/// d_xi is formed as -(d_xj + d_xk), so the three sum to zero. 1/r_ij and
/// 1/r_ik come from the caller, which has them from the unit vectors.
template <class V>
ZetaTerm<V> zeta_term(const XYZ<V>& e_ij, const V& r_ij, const V& inv_rij, const XYZ<V>& e_ik, const V& r_ik,
                      const V& inv_rik, const ThreeBodyParams<V>& p) {
  const V cos_theta = clamp_cosine(dot(e_ij, e_ik));
  const auto fc = cutoff_function(r_ik, p.R, p.D);
  const auto g = angular(cos_theta, p.gamma, p.c2, p.c2_lo, p.d2, p.d2_lo, p.h);
  const auto ex = zeta_exponential(r_ij, r_ik, p.lambda3, p.m_is_cubic);

  const V fg = fc.value * g.value;
  const V value = fg * ex.value;

  // d cos / d x_j = (e_ik - cos e_ij) / r_ij,  d cos / d x_k = (e_ij - cos e_ik) / r_ik
  const XYZ<V> dcos_dxj = inv_rij * (e_ik - cos_theta * e_ij);
  const XYZ<V> dcos_dxk = inv_rik * (e_ij - cos_theta * e_ik);

  const V angle_coeff = fc.value * g.slope * ex.value;
  const V radial_ij = fg * ex.slope;                                // d/dr_ij
  const V radial_ik = fc.slope * g.value * ex.value - fg * ex.slope;  // d/dr_ik

  ZetaTerm<V> out;
  out.value = value;
  out.d_xj = angle_coeff * dcos_dxj + radial_ij * e_ij;
  out.d_xk = angle_coeff * dcos_dxk + radial_ik * e_ik;
  out.d_xi = -(out.d_xj + out.d_xk);
  return out;
}

template <class V>
ZetaTerm<V> zeta_term(const XYZ<V>& e_ij, const V& r_ij, const XYZ<V>& e_ik, const V& r_ik,
                      const ThreeBodyParams<V>& p) {
  const V one(simd::scalar_t<V>(1));
  return zeta_term(e_ij, r_ij, one / r_ij, e_ik, r_ik, one / r_ik, p);
}

// ---------------------------------------------------------------------------
// Pair term V(i, j, zeta)

template <class V>
struct PairTerm {
  V energy;
  XYZ<V> dV_dxi, dV_dxj;
  V delta_zeta;  // dV/dzeta
};

template <class V>
PairTerm<V> pair_term(const XYZ<V>& e_ij, const V& r_ij, const V& zeta, const PairParams<V>& p) {
  const auto fc = cutoff_function(r_ij, p.R, p.D);
  const auto fr = repulsive(r_ij, p.A, p.lambda1);
  const auto fa = attractive(r_ij, p.B, p.lambda2);
  const auto b = bond_order(zeta, p.beta, p.eta);

  const V bracket = fr.value + b.value * fa.value;
  const V dV_dr = fc.slope * bracket + fc.value * (fr.slope + b.value * fa.slope);

  PairTerm<V> out;
  out.energy = fc.value * bracket;
  out.dV_dxj = dV_dr * e_ij;
  out.dV_dxi = -out.dV_dxj;
  out.delta_zeta = fc.value * fa.value * b.slope;
  return out;
}

// ---------------------------------------------------------------------------
// Scalar convenience API over TersoffParams and Eigen vectors.

template <class T>
ValueSlope<T> f_cutoff(T r, const TersoffParams& p) {
  return cutoff_function<T>(r, static_cast<T>(p.R), static_cast<T>(p.D));
}

template <class T>
ValueSlope<T> f_repulsive(T r, const TersoffParams& p) {
  return repulsive<T>(r, static_cast<T>(p.A), static_cast<T>(p.lambda1));
}

template <class T>
ValueSlope<T> f_attractive(T r, const TersoffParams& p) {
  return attractive<T>(r, static_cast<T>(p.B), static_cast<T>(p.lambda2));
}

template <class T>
ThreeBodyParams<T> three_body_params(const TersoffParams& p);

template <class T>
ValueSlope<T> g_angle(T cos_theta, const TersoffParams& p) {
  const auto tp = three_body_params<T>(p);
  return angular<T>(cos_theta, tp.gamma, tp.c2, tp.c2_lo, tp.d2, tp.d2_lo, tp.h);
}

template <class T>
ValueSlope<T> bond_order(T zeta, const TersoffParams& p) {
  return bond_order<T>(zeta, static_cast<T>(p.beta), static_cast<T>(p.eta));
}

template <class T>
XYZ<T> to_xyz(const Vector3<T>& v) {
  return {v.x(), v.y(), v.z()};
}

template <class T>
Vector3<T> to_vector(const XYZ<T>& v) {
  return {v.x, v.y, v.z};
}

/// Distances, unit vectors and cosine of the angle at i for the triplet
/// (i, j, k), built from the displacements x_j - x_i and x_k - x_i.
template <class T>
struct TripletGeometry {
  T r_ij{};
  T r_ik{};
  T cos_theta{};
  Vector3<T> e_ij = Vector3<T>::Zero();
  Vector3<T> e_ik = Vector3<T>::Zero();

  static TripletGeometry from_displacements(const Vector3<T>& d_ij, const Vector3<T>& d_ik) {
    TripletGeometry g;
    g.r_ij = d_ij.norm();
    g.r_ik = d_ik.norm();
    g.e_ij = d_ij / g.r_ij;
    g.e_ik = d_ik / g.r_ik;
    g.cos_theta = clamp_cosine(g.e_ij.dot(g.e_ik));
    return g;
  }
};

template <class T>
struct ZetaGradient {
  T value;
  Vector3<T> d_xi, d_xj, d_xk;
};

template <class T>
ThreeBodyParams<T> three_body_params(const TersoffParams& p) {
  ThreeBodyParams<T> t;
  t.gamma = static_cast<T>(p.gamma);
  split_square(p.c, t.c2, t.c2_lo);
  split_square(p.d, t.d2, t.d2_lo);
  t.h = static_cast<T>(p.h);
  t.lambda3 = static_cast<T>(p.lambda3);
  t.m_is_cubic = p.m == 3.0 ? T(1) : T(0);
  t.R = static_cast<T>(p.R);
  t.D = static_cast<T>(p.D);
  return t;
}

template <class T>
PairParams<T> pair_params(const TersoffParams& p) {
  return {static_cast<T>(p.A),       static_cast<T>(p.B),    static_cast<T>(p.lambda1),
          static_cast<T>(p.lambda2), static_cast<T>(p.beta), static_cast<T>(p.eta),
          static_cast<T>(p.R),       static_cast<T>(p.D)};
}

template <class T>
ZetaGradient<T> zeta_term(const TripletGeometry<T>& geom, const TersoffParams& p) {
  const auto t = zeta_term<T>(to_xyz(geom.e_ij), geom.r_ij, to_xyz(geom.e_ik), geom.r_ik, three_body_params<T>(p));
  return {t.value, to_vector(t.d_xi), to_vector(t.d_xj), to_vector(t.d_xk)};
}

template <class T>
struct PairEnergyForce {
  T energy;
  Vector3<T> dV_dxi, dV_dxj;
  T delta_zeta;
};

template <class T>
PairEnergyForce<T> pair_energy_force(T r_ij, const Vector3<T>& e_ij, T zeta, const TersoffParams& p) {
  const auto t = pair_term<T>(to_xyz(e_ij), r_ij, zeta, pair_params<T>(p));
  return {t.energy, to_vector(t.dV_dxi), to_vector(t.dV_dxj), t.delta_zeta};
}

}  // namespace tersoff
