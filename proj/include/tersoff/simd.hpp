#pragma once

// Width-oblivious lane vectors.
//
// A kernel is written once against LaneVector<T, W, Math> and the free
// functions below; the lane count W and the transcendental policy are
// template parameters, so the same source compiles to the scalar backend
// (W = 1), to any emulated width, or to the native width of the host.
//
// Semantics every backend guarantees:
//   * arithmetic, comparisons, gathers and scatters are lane-wise and
//     bit-identical to the scalar operation applied to each lane;
//   * inactive lanes of a mask are never dereferenced and never written;
//   * reductions run in ascending lane order, ((l0 + l1) + l2) + ...;
//   * StrictMath transcendentals call the C library per lane, FastMath ones
//     use the polynomial routines in simd/fast_math.hpp (a few ulp).
//
// Scalar overloads of the same free functions are provided so that generic
// code can be instantiated with V = float or V = double directly.

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>

#include "tersoff/simd/fast_math.hpp"

#if defined(TERSOFF_CHECKED) || !defined(NDEBUG)
#define TERSOFF_SIMD_CHECKED 1
#else
#define TERSOFF_SIMD_CHECKED 0
#endif

namespace tersoff::simd {

/// Per-lane C library transcendentals; the correctness reference.
struct StrictMath {};
/// Vectorizable polynomial transcendentals.
struct FastMath {};

/// Index lanes. Negative values mark padding and must always be masked off.
using index_t = std::int32_t;

namespace detail {

[[noreturn]] inline void lane_index_violation(std::ptrdiff_t idx, std::size_t size) {
  throw std::out_of_range("active lane index " + std::to_string(idx) +
                          " outside array of size " + std::to_string(size));
}

inline void check_index(std::ptrdiff_t idx, std::size_t size) {
  if constexpr (TERSOFF_SIMD_CHECKED) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= size) lane_index_violation(idx, size);
  }
}

}  // namespace detail

namespace detail {

// GCC/Clang vector extension: element-wise IEEE operators, one register (or a
// few) per value. W = 1 is a one-lane vector and behaves as the scalar.
template <class T, int W>
struct native_vector {
  typedef T type __attribute__((vector_size(sizeof(T) * W)));
};
template <class T, int W>
using native_vector_t = typename native_vector<T, W>::type;

template <std::size_t Bytes>
struct lane_int;
template <>
struct lane_int<4> {
  using type = std::int32_t;
};
template <>
struct lane_int<8> {
  using type = std::int64_t;
};

}  // namespace detail

template <int W>
class LaneMask {
  static_assert(W >= 1 && (W & (W - 1)) == 0, "lane count must be a power of two");

 public:
  static constexpr int width = W;
  /// 0 or -1 per lane, the layout vector comparisons produce.
  using bits_type = detail::native_vector_t<std::int32_t, W>;

  LaneMask() = default;
  explicit LaneMask(bool value) : bits_(bits_type{} - (value ? 1 : 0)) {}
  explicit LaneMask(bits_type bits) : bits_(bits) {}

  /// Lanes [0, n) active.
  static LaneMask first(int n) {
    bits_type lane;
    for (int l = 0; l < W; ++l) lane[l] = l;
    return LaneMask(bits_type(lane < n));
  }

  bool operator[](int lane) const { return bits_[lane] != 0; }
  void set(int lane, bool value) { bits_[lane] = value ? -1 : 0; }

  bool any() const {
    std::int32_t r = 0;
    for (int l = 0; l < W; ++l) r |= bits_[l];
    return r != 0;
  }
  bool all() const {
    std::int32_t r = -1;
    for (int l = 0; l < W; ++l) r &= bits_[l];
    return r != 0;
  }
  bool none() const { return !any(); }
  int count() const {
    int n = 0;
    for (int l = 0; l < W; ++l) n -= bits_[l];
    return n;
  }

  /// Same lanes as 0 / -1 integers of the given width.
  template <class I>
  auto as() const {
    return __builtin_convertvector(bits_, detail::native_vector_t<I, W>);
  }
  bits_type bits() const { return bits_; }

  friend LaneMask operator&(const LaneMask& a, const LaneMask& b) { return LaneMask(a.bits_ & b.bits_); }
  friend LaneMask operator|(const LaneMask& a, const LaneMask& b) { return LaneMask(a.bits_ | b.bits_); }
  friend LaneMask operator!(const LaneMask& a) { return LaneMask(~a.bits_); }
  LaneMask& operator&=(const LaneMask& o) { return *this = *this & o; }
  LaneMask& operator|=(const LaneMask& o) { return *this = *this | o; }
  friend bool operator==(const LaneMask& a, const LaneMask& b) {
    bool same = true;
    for (int l = 0; l < W; ++l) same &= a.bits_[l] == b.bits_[l];
    return same;
  }

 private:
  bits_type bits_{};
};

template <class T, int W, class Math = StrictMath>
class LaneVector {
  static_assert(W >= 1 && (W & (W - 1)) == 0, "lane count must be a power of two");
  static_assert(std::is_arithmetic_v<T>);

 public:
  using value_type = T;
  using math_policy = Math;
  using mask_type = LaneMask<W>;
  using native_type = detail::native_vector_t<T, W>;
  template <class U>
  using rebind = LaneVector<U, W, Math>;
  static constexpr int width = W;

  LaneVector() = default;

  /// Broadcast. Implicit so that scalar constants mix into lane expressions.
  template <class U>
    requires std::is_arithmetic_v<U>
  LaneVector(U x) : v_(static_cast<T>(x) - native_type{}) {}  // NOLINT(google-explicit-constructor)

  explicit LaneVector(native_type v) : v_(v) {}

  static LaneVector load(const T* p) {
    LaneVector r;
    std::memcpy(&r.v_, p, sizeof(native_type));
    return r;
  }

  /// Contiguous masked load; inactive lanes take `fill` and are not read.
  static LaneVector load(const T* p, const mask_type& mask, T fill) {
    LaneVector r;
    for (int l = 0; l < W; ++l) r.v_[l] = mask[l] ? p[l] : fill;
    return r;
  }

  /// (start, start + 1, ..., start + W - 1)
  static LaneVector iota(T start) {
    LaneVector r;
    for (int l = 0; l < W; ++l) r.v_[l] = static_cast<T>(start + static_cast<T>(l));
    return r;
  }

  void store(T* p) const { std::memcpy(p, &v_, sizeof(native_type)); }

  T operator[](int lane) const { return v_[lane]; }
  // vector types may alias their element type
  T& operator[](int lane) { return reinterpret_cast<T*>(&v_)[lane]; }

  native_type native() const { return v_; }

  friend LaneVector operator+(const LaneVector& a, const LaneVector& b) { return LaneVector(a.v_ + b.v_); }
  friend LaneVector operator-(const LaneVector& a, const LaneVector& b) { return LaneVector(a.v_ - b.v_); }
  friend LaneVector operator*(const LaneVector& a, const LaneVector& b) { return LaneVector(a.v_ * b.v_); }
  friend LaneVector operator/(const LaneVector& a, const LaneVector& b) { return LaneVector(a.v_ / b.v_); }
  friend LaneVector operator-(const LaneVector& a) { return LaneVector(-a.v_); }
  LaneVector& operator+=(const LaneVector& o) { return *this = *this + o; }
  LaneVector& operator-=(const LaneVector& o) { return *this = *this - o; }
  LaneVector& operator*=(const LaneVector& o) { return *this = *this * o; }
  LaneVector& operator/=(const LaneVector& o) { return *this = *this / o; }

#define TERSOFF_LANE_COMPARE(op)                                          \
  friend mask_type operator op(const LaneVector& a, const LaneVector& b) { \
    return mask_type(__builtin_convertvector(a.v_ op b.v_, typename mask_type::bits_type)); \
  }
  TERSOFF_LANE_COMPARE(<)
  TERSOFF_LANE_COMPARE(<=)
  TERSOFF_LANE_COMPARE(>)
  TERSOFF_LANE_COMPARE(>=)
  TERSOFF_LANE_COMPARE(==)
  TERSOFF_LANE_COMPARE(!=)
#undef TERSOFF_LANE_COMPARE

 private:
  native_type v_{};
};

// ---------------------------------------------------------------------------
// Traits

template <class V>
struct lane_traits {
  using scalar = V;
  using mask = bool;
  static constexpr int width = 1;
  static constexpr bool is_vector = false;
};

template <class T, int W, class Math>
struct lane_traits<LaneVector<T, W, Math>> {
  using scalar = T;
  using mask = LaneMask<W>;
  static constexpr int width = W;
  static constexpr bool is_vector = true;
};

template <class V>
using scalar_t = typename lane_traits<V>::scalar;
template <class V>
using mask_t = typename lane_traits<V>::mask;
template <class V>
inline constexpr bool is_lane_vector_v = lane_traits<V>::is_vector;

// ---------------------------------------------------------------------------
// Element-wise operations

template <class T, int W, class M>
LaneVector<T, W, M> select(const LaneMask<W>& mask, const LaneVector<T, W, M>& a,
                           const LaneVector<T, W, M>& b) {
  using I = typename detail::lane_int<sizeof(T)>::type;
  return LaneVector<T, W, M>(mask.template as<I>() ? a.native() : b.native());
}

// same expressions as std::min / std::max, NaN handling included
template <class T, int W, class M>
LaneVector<T, W, M> min(const LaneVector<T, W, M>& a, const LaneVector<T, W, M>& b) {
  return LaneVector<T, W, M>(b.native() < a.native() ? b.native() : a.native());
}

template <class T, int W, class M>
LaneVector<T, W, M> max(const LaneVector<T, W, M>& a, const LaneVector<T, W, M>& b) {
  return LaneVector<T, W, M>(a.native() < b.native() ? b.native() : a.native());
}

template <class T, int W, class M>
LaneVector<T, W, M> abs(const LaneVector<T, W, M>& a) {
  LaneVector<T, W, M> r;
  for (int l = 0; l < W; ++l) r[l] = std::abs(a[l]);
  return r;
}

template <class T, int W, class M>
LaneVector<T, W, M> fma(const LaneVector<T, W, M>& a, const LaneVector<T, W, M>& b,
                        const LaneVector<T, W, M>& c) {
  LaneVector<T, W, M> r;
  for (int l = 0; l < W; ++l) r[l] = std::fma(a[l], b[l], c[l]);
  return r;
}

template <class T, int W, class M>
LaneVector<T, W, M> sqrt(const LaneVector<T, W, M>& a) {
  LaneVector<T, W, M> r;
  for (int l = 0; l < W; ++l) r[l] = std::sqrt(a[l]);
  return r;
}

namespace detail {

// FastMath works in double; float lanes are widened and rounded back.
template <class T, int W>
auto widen(const native_vector_t<T, W>& v) {
  if constexpr (std::is_same_v<T, double>) {
    return v;
  } else {
    return __builtin_convertvector(v, native_vector_t<double, W>);
  }
}

template <class T, int W, class D>
native_vector_t<T, W> narrow(const D& v) {
  if constexpr (std::is_same_v<T, double>) {
    return v;
  } else {
    return __builtin_convertvector(v, native_vector_t<T, W>);
  }
}

}  // namespace detail

template <class T, int W, class M>
LaneVector<T, W, M> exp(const LaneVector<T, W, M>& a) {
  LaneVector<T, W, M> r;
  if constexpr (std::is_same_v<M, FastMath>) {
    r = LaneVector<T, W, M>(detail::narrow<T, W>(fast::exp(detail::widen<T, W>(a.native()))));
  } else {
    for (int l = 0; l < W; ++l) r[l] = std::exp(a[l]);
  }
  return r;
}

template <class T, int W, class M>
LaneVector<T, W, M> log(const LaneVector<T, W, M>& a) {
  LaneVector<T, W, M> r;
  if constexpr (std::is_same_v<M, FastMath>) {
    r = LaneVector<T, W, M>(detail::narrow<T, W>(fast::log(detail::widen<T, W>(a.native()))));
  } else {
    for (int l = 0; l < W; ++l) r[l] = std::log(a[l]);
  }
  return r;
}

/// x^y for x >= 0.
template <class T, int W, class M>
LaneVector<T, W, M> pow(const LaneVector<T, W, M>& x, const LaneVector<T, W, M>& y) {
  LaneVector<T, W, M> r;
  if constexpr (std::is_same_v<M, FastMath>) {
    r = LaneVector<T, W, M>(
        detail::narrow<T, W>(fast::pow(detail::widen<T, W>(x.native()), detail::widen<T, W>(y.native()))));
  } else {
    for (int l = 0; l < W; ++l) r[l] = std::pow(x[l], y[l]);
  }
  return r;
}

template <class T, int W, class M>
void sincos(const LaneVector<T, W, M>& a, LaneVector<T, W, M>& s, LaneVector<T, W, M>& c) {
  if constexpr (std::is_same_v<M, FastMath>) {
    const auto x = detail::widen<T, W>(a.native());
    constexpr double limit = fast::constants::trig_reduction_limit;
    const LaneMask<W> in_range(__builtin_convertvector((x <= limit) & (x >= -limit), typename LaneMask<W>::bits_type));
    if (in_range.all()) {
      std::remove_const_t<decltype(x)> sd, cd;
      fast::sincos(x, sd, cd);
      s = LaneVector<T, W, M>(detail::narrow<T, W>(sd));
      c = LaneVector<T, W, M>(detail::narrow<T, W>(cd));
      return;
    }
  }
  for (int l = 0; l < W; ++l) {
    s[l] = std::sin(a[l]);
    c[l] = std::cos(a[l]);
  }
}

template <class T, int W, class M>
LaneVector<T, W, M> sin(const LaneVector<T, W, M>& a) {
  LaneVector<T, W, M> s;
  LaneVector<T, W, M> c;
  sincos(a, s, c);
  return s;
}

template <class T, int W, class M>
LaneVector<T, W, M> cos(const LaneVector<T, W, M>& a) {
  LaneVector<T, W, M> s;
  LaneVector<T, W, M> c;
  sincos(a, s, c);
  return c;
}

template <class U, class T, int W, class M>
LaneVector<U, W, M> convert(const LaneVector<T, W, M>& a) {
  return LaneVector<U, W, M>(__builtin_convertvector(a.native(), detail::native_vector_t<U, W>));
}

/// Sum in ascending lane order.
template <class T, int W, class M>
T reduce_sum(const LaneVector<T, W, M>& a) {
  T s = a[0];
  for (int l = 1; l < W; ++l) s = s + a[l];
  return s;
}

template <class T, int W, class M>
T reduce_max(const LaneVector<T, W, M>& a) {
  T s = a[0];
  for (int l = 1; l < W; ++l) s = std::max(s, a[l]);
  return s;
}

template <class T, int W, class M>
T reduce_min(const LaneVector<T, W, M>& a) {
  T s = a[0];
  for (int l = 1; l < W; ++l) s = std::min(s, a[l]);
  return s;
}

// ---------------------------------------------------------------------------
// Memory building blocks

/// Active lanes read base[idx]; inactive lanes yield `fill` without touching
/// memory.
template <class T, int W, class M>
LaneVector<std::remove_const_t<T>, W, M> masked_gather(std::span<T> base,
                                                       const LaneVector<index_t, W, M>& idx,
                                                       const LaneMask<W>& mask,
                                                       std::remove_const_t<T> fill) {
  LaneVector<std::remove_const_t<T>, W, M> r;
  for (int l = 0; l < W; ++l) {
    if (mask[l]) {
      detail::check_index(idx[l], base.size());
      r[l] = base[static_cast<std::size_t>(idx[l])];
    } else {
      r[l] = fill;
    }
  }
  return r;
}

/// Gathers record idx[l] from an array of K-field records and transposes it:
/// output f holds field f of every lane. Inactive lanes yield zero.
template <std::size_t K, class T, int W, class M>
std::array<LaneVector<T, W, M>, K> gather_transpose(std::span<const std::array<T, K>> records,
                                                    const LaneVector<index_t, W, M>& idx,
                                                    const LaneMask<W>& mask) {
  std::array<LaneVector<T, W, M>, K> out{};
  for (int l = 0; l < W; ++l) {
    if (!mask[l]) continue;
    detail::check_index(idx[l], records.size());
    const auto& rec = records[static_cast<std::size_t>(idx[l])];
    for (std::size_t f = 0; f < K; ++f) out[f][l] = rec[f];
  }
  return out;
}

/// dest[idx[l]] += vals[l] for active lanes, ascending lane order. Lanes that
/// share an index accumulate every contribution, exactly as the scalar loop.
template <class D, class T, int W, class M>
void accumulate_scatter(std::span<D> dest, const LaneVector<index_t, W, M>& idx,
                        const LaneVector<T, W, M>& vals, const LaneMask<W>& mask) {
  for (int l = 0; l < W; ++l) {
    if (!mask[l]) continue;
    detail::check_index(idx[l], dest.size());
    dest[static_cast<std::size_t>(idx[l])] += static_cast<D>(vals[l]);
  }
}

// ---------------------------------------------------------------------------
// Scalar overloads, so generic code also instantiates with V = float/double.

template <std::floating_point T>
T select(bool mask, T a, T b) {
  return mask ? a : b;
}
template <std::floating_point T>
T reduce_sum(T a) {
  return a;
}
template <std::floating_point T>
T exp(T a) {
  return std::exp(a);
}
template <std::floating_point T>
T log(T a) {
  return std::log(a);
}
template <std::floating_point T>
T pow(T x, T y) {
  return std::pow(x, y);
}
template <std::floating_point T>
T sqrt(T a) {
  return std::sqrt(a);
}
template <std::floating_point T>
T fma(T a, T b, T c) {
  return std::fma(a, b, c);
}
template <std::floating_point T>
void sincos(T a, T& s, T& c) {
  s = std::sin(a);
  c = std::cos(a);
}
template <std::floating_point T>
T min(T a, T b) {
  return std::min(a, b);
}
template <std::floating_point T>
T max(T a, T b) {
  return std::max(a, b);
}

// ---------------------------------------------------------------------------
// Backends

/// Register width in bytes the compiler targets, used for the native backend.
inline constexpr int native_register_bytes =
#if defined(__AVX512F__)
    64;
#elif defined(__AVX__)
    32;
#elif defined(__SSE2__) || defined(__ARM_NEON)
    16;
#else
    8;
#endif

template <class T>
inline constexpr int native_width = native_register_bytes / static_cast<int>(sizeof(T)) >= 1
                                        ? native_register_bytes / static_cast<int>(sizeof(T))
                                        : 1;

#if defined(TERSOFF_NATIVE_SIMD)
inline constexpr bool native_backend_available = true;
#else
inline constexpr bool native_backend_available = false;
#endif

inline const char* native_isa_name() {
#if defined(__AVX512F__)
  return "avx512";
#elif defined(__AVX2__)
  return "avx2";
#elif defined(__AVX__)
  return "avx";
#elif defined(__SSE2__)
  return "sse2";
#elif defined(__ARM_NEON)
  return "neon";
#else
  return "generic";
#endif
}

}  // namespace tersoff::simd
