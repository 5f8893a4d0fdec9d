#pragma once

// Branch-free polynomial transcendentals used by the FastMath lane policy.
//
// Every routine is a template over D, which is either double or a GCC vector
// of doubles. The body has no data-dependent control flow: conditions become
// ternaries, which the vector extension evaluates lane-wise. One source
// therefore gives the scalar function and its packed form, bit-identical
// lane for lane. Accuracy target is a few ulp against the C library over the
// finite domain.

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <type_traits>

namespace tersoff::simd::fast {

namespace constants {

// ln(2) split so that n * ln2_hi is exact for |n| < 2^21.
inline constexpr double ln2_hi = std::bit_cast<double>(0x3fe62e42fee00000ULL);
inline constexpr double ln2_lo = std::bit_cast<double>(0x3dea39ef35793c76ULL);
inline constexpr double log2e = 1.4426950408889634074;

// pi/2 split in three 33-bit pieces; n * pio2_k is exact for |n| < 2^20.
inline constexpr double pio2_1 = std::bit_cast<double>(0x3ff921fb54400000ULL);
inline constexpr double pio2_2 = std::bit_cast<double>(0x3dd0b4611a600000ULL);
inline constexpr double pio2_3 = std::bit_cast<double>(0x3ba3198a2e000000ULL);
inline constexpr double two_over_pi = 0.63661977236758134308;

// Adding and subtracting this rounds a double with |x| < 2^51 to an integer.
inline constexpr double round_shifter = 6755399441055744.0;  // 1.5 * 2^52

// Largest argument whose sine/cosine we reduce with the three-piece scheme.
inline constexpr double trig_reduction_limit = 1.0e5;

}  // namespace constants

namespace detail {

template <class D>
struct int_of {
  using type = std::int64_t;
};
template <class D>
  requires(!std::is_same_v<D, double>)
struct int_of<D> {
  typedef std::int64_t type __attribute__((vector_size(sizeof(D))));
};
template <class D>
using int_t = typename int_of<D>::type;

template <class D>
inline constexpr bool is_scalar = std::is_same_v<D, double>;

// c - 0 keeps the sign of c, also for -0
template <class D>
D splat(double c) {
  return c - D{};
}

template <class D>
int_t<D> to_int(D x) {
  if constexpr (is_scalar<D>) {
    return static_cast<std::int64_t>(x);
  } else {
    return __builtin_convertvector(x, int_t<D>);
  }
}

template <class D>
D to_double(int_t<D> n) {
  if constexpr (is_scalar<D>) {
    return static_cast<double>(n);
  } else {
    return __builtin_convertvector(n, D);
  }
}

template <class D>
D fma(D a, D b, D c) {
  if constexpr (is_scalar<D>) {
    return std::fma(a, b, c);
  } else {
    D r;
    for (int l = 0; l < static_cast<int>(sizeof(D) / sizeof(double)); ++l) r[l] = __builtin_fma(a[l], b[l], c[l]);
    return r;
  }
}

}  // namespace detail

template <class D>
D round_to_integer(D x) {
  return (x + constants::round_shifter) - constants::round_shifter;
}

// 2^n for integral n in [-1022, 1023], built directly in the exponent field.
template <class D>
D pow2_int(D n) {
  const auto biased = detail::to_int(n) + 1023;
  return std::bit_cast<D>(biased << 52);
}

template <class D>
D exp(D x) {
  using namespace constants;
  using detail::splat;
  const auto is_nan = x != x;
  D xc = is_nan ? splat<D>(0.0) : x;
  xc = xc > 709.79 ? splat<D>(709.79) : xc;
  xc = xc < -745.2 ? splat<D>(-745.2) : xc;

  const D n = round_to_integer(xc * log2e);
  const D r = (xc - n * ln2_hi) - n * ln2_lo;

  // Taylor series of exp on |r| <= ln2/2, truncation below 1e-17.
  D p = splat<D>(1.0 / 6227020800.0);  // 1/13!
  p = detail::fma(p, r, detail::splat<D>(1.0 / 479001600.0));
  p = detail::fma(p, r, detail::splat<D>(1.0 / 39916800.0));
  p = detail::fma(p, r, detail::splat<D>(1.0 / 3628800.0));
  p = detail::fma(p, r, detail::splat<D>(1.0 / 362880.0));
  p = detail::fma(p, r, detail::splat<D>(1.0 / 40320.0));
  p = detail::fma(p, r, detail::splat<D>(1.0 / 5040.0));
  p = detail::fma(p, r, detail::splat<D>(1.0 / 720.0));
  p = detail::fma(p, r, detail::splat<D>(1.0 / 120.0));
  p = detail::fma(p, r, detail::splat<D>(1.0 / 24.0));
  p = detail::fma(p, r, detail::splat<D>(1.0 / 6.0));
  p = detail::fma(p, r, detail::splat<D>(0.5));
  p = detail::fma(p, r, detail::splat<D>(1.0));
  p = detail::fma(p, r, detail::splat<D>(1.0));

  // Two half-size scale factors keep both inside the normal range, so the
  // final product rounds once even when the result is subnormal.
  const D half = round_to_integer(n * 0.5 - 0.25);
  const D result = (p * pow2_int(half)) * pow2_int(n - half);
  return is_nan ? x : result;
}

namespace detail {

// x = 2^k m with m in (sqrt2/2, sqrt2]; f = m - 1 exactly.
template <class D>
void reduce_log(D x, D& k, D& f) {
  constexpr double two54 = 18014398509481984.0;
  constexpr double sqrt2 = 1.41421356237309504880;
  const auto subnormal = x < std::numeric_limits<double>::min();
  const D xs = subnormal ? x * two54 : x;
  const auto bits = std::bit_cast<int_t<D>>(xs);
  k = to_double<D>(((bits >> 52) & 0x7ff) - 1023);
  k = subnormal ? k - 54.0 : k;
  D m = std::bit_cast<D>((bits & 0x000fffffffffffffLL) | 0x3ff0000000000000LL);
  const auto high = m > sqrt2;
  m = high ? m * 0.5 : m;
  k = high ? k + 1.0 : k;
  f = m - 1.0;
}

// R(z) with 2 atanh(s) = 2s + s R(z), z = s^2
template <class D>
D log_series(D z) {
  D poly = splat<D>(2.0 / 23.0);
  poly = detail::fma(poly, z, detail::splat<D>(2.0 / 21.0));
  poly = detail::fma(poly, z, detail::splat<D>(2.0 / 19.0));
  poly = detail::fma(poly, z, detail::splat<D>(2.0 / 17.0));
  poly = detail::fma(poly, z, detail::splat<D>(2.0 / 15.0));
  poly = detail::fma(poly, z, detail::splat<D>(2.0 / 13.0));
  poly = detail::fma(poly, z, detail::splat<D>(2.0 / 11.0));
  poly = detail::fma(poly, z, detail::splat<D>(2.0 / 9.0));
  poly = detail::fma(poly, z, detail::splat<D>(2.0 / 7.0));
  poly = detail::fma(poly, z, detail::splat<D>(2.0 / 5.0));
  poly = detail::fma(poly, z, detail::splat<D>(2.0 / 3.0));
  return poly * z;
}

}  // namespace detail

template <class D>
D log(D x) {
  using namespace constants;
  using detail::splat;
  D k, f;
  detail::reduce_log(x, k, f);
  const D s = f / (2.0 + f);
  const D R = detail::log_series(s * s);
  const D hfsq = 0.5 * f * f;
  const D result = k * ln2_hi - ((hfsq - (s * (hfsq + R) + k * ln2_lo)) - f);

  // Special values: NaN and negative -> NaN, 0 -> -inf, +inf -> +inf.
  constexpr double inf = std::numeric_limits<double>::infinity();
  constexpr double qnan = std::numeric_limits<double>::quiet_NaN();
  D out = x == inf ? splat<D>(inf) : result;
  out = x == 0.0 ? splat<D>(-inf) : out;
  out = ((x < 0.0) | (x != x)) ? splat<D>(qnan) : out;
  return out;
}

template <class D>
void two_sum(D a, D b, D& s, D& e) {
  s = a + b;
  const D bb = s - a;
  e = (a - (s - bb)) + (b - bb);
}

// log(x) as an unevaluated sum hi + lo, about 1e-18 relative, for positive
// finite x. Same reduction as log() with the leading terms kept exact.
template <class D>
void log_dd(D x, D& hi, D& lo) {
  using namespace constants;
  D k, f;
  detail::reduce_log(x, k, f);
  const D s = f / (2.0 + f);
  const D R = detail::log_series(s * s);

  // log1p(f) = f - f^2/2 + s (f^2/2 + R)
  const D f2 = f * f;
  const D hfsq = 0.5 * f2;
  const D hfsq_lo = 0.5 * detail::fma(f, f, -f2);
  const D t = s * (hfsq + R);

  D a_hi, a_lo, b_hi, b_lo;
  two_sum(f, -hfsq, a_hi, a_lo);
  two_sum(k * ln2_hi, a_hi, b_hi, b_lo);
  const D tail = (((b_lo + a_lo) - hfsq_lo) + t) + k * ln2_lo;
  hi = b_hi + tail;
  lo = tail - (hi - b_hi);
}

/// x^y for x >= 0 through exp(y log x) with the product carried to double
/// length, so large |y log x| does not magnify the rounding of log.
template <class D>
D pow(D x, D y) {
  using detail::splat;
  constexpr double inf = std::numeric_limits<double>::infinity();
  const auto regular = (x > 0.0) & (x < inf);
  const D xs = regular ? x : splat<D>(1.0);
  D lh, ll;
  log_dd(xs, lh, ll);
  const D p = y * lh;
  const D e = detail::fma(y, lh, -p) + y * ll;
  const D ep = exp(p);
  D out = detail::fma(ep, e, ep);
  const D abs_p = p < 0.0 ? -p : p;
  out = abs_p > 708.0 ? ep : out;  // near the range limits e is irrelevant
  // x = 0 or inf follow the C library; negative or NaN x gives NaN
  const D zero = splat<D>(0.0), one = splat<D>(1.0), big = splat<D>(inf);
  const D at_zero = y > 0.0 ? zero : (y < 0.0 ? big : one);
  const D at_inf = y > 0.0 ? big : (y < 0.0 ? zero : one);
  out = x == 0.0 ? at_zero : out;
  out = x == inf ? at_inf : out;
  out = ((x < 0.0) | (x != x) | (y != y)) ? splat<D>(std::numeric_limits<double>::quiet_NaN()) : out;
  out = ((y == 0.0) | (x == 1.0)) ? one : out;
  return out;
}

template <class D>
D sin_poly(D r) {
  const D z = r * r;
  D p = detail::splat<D>(-1.0 / 355687428096000.0);  // -1/17!
  p = detail::fma(p, z, detail::splat<D>(1.0 / 1307674368000.0));
  p = detail::fma(p, z, detail::splat<D>(-1.0 / 6227020800.0));
  p = detail::fma(p, z, detail::splat<D>(1.0 / 39916800.0));
  p = detail::fma(p, z, detail::splat<D>(-1.0 / 362880.0));
  p = detail::fma(p, z, detail::splat<D>(1.0 / 5040.0));
  p = detail::fma(p, z, detail::splat<D>(-1.0 / 120.0));
  p = detail::fma(p, z, detail::splat<D>(1.0 / 6.0));
  return r - r * z * p;
}

template <class D>
D cos_poly(D r) {
  const D z = r * r;
  D p = detail::splat<D>(-1.0 / 6402373705728000.0);  // -1/18!
  p = detail::fma(p, z, detail::splat<D>(1.0 / 20922789888000.0));
  p = detail::fma(p, z, detail::splat<D>(-1.0 / 87178291200.0));
  p = detail::fma(p, z, detail::splat<D>(1.0 / 479001600.0));
  p = detail::fma(p, z, detail::splat<D>(-1.0 / 3628800.0));
  p = detail::fma(p, z, detail::splat<D>(1.0 / 40320.0));
  p = detail::fma(p, z, detail::splat<D>(-1.0 / 720.0));
  p = detail::fma(p, z, detail::splat<D>(1.0 / 24.0));
  return (1.0 - 0.5 * z) + z * z * p;
}

// Valid for |x| <= trig_reduction_limit; callers route larger or non-finite
// arguments to the C library.
template <class D>
void sincos(D x, D& s, D& c) {
  using namespace constants;
  const D n = round_to_integer(x * two_over_pi);
  const D r = ((x - n * pio2_1) - n * pio2_2) - n * pio2_3;
  const D sr = sin_poly(r);
  const D cr = cos_poly(r);
  const auto quadrant = detail::to_int(n) & 3;
  const auto swap = (quadrant & 1) != 0;
  const D sv = swap ? cr : sr;
  const D cv = swap ? sr : cr;
  s = (quadrant & 2) != 0 ? -sv : sv;
  c = ((quadrant == 1) | (quadrant == 2)) ? -cv : cv;
}

inline float exp(float x) { return static_cast<float>(exp(static_cast<double>(x))); }
inline float log(float x) { return static_cast<float>(log(static_cast<double>(x))); }
inline float pow(float x, float y) { return static_cast<float>(pow(static_cast<double>(x), static_cast<double>(y))); }
inline void sincos(float x, float& s, float& c) {
  double sd = 0.0;
  double cd = 0.0;
  sincos(static_cast<double>(x), sd, cd);
  s = static_cast<float>(sd);
  c = static_cast<float>(cd);
}

}  // namespace tersoff::simd::fast
