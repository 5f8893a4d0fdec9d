#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tersoff {

/// Parameters of one ordered element triple (i, j, k). Field order matches
/// the 17-token parameter file layout after the three element names.
///
/// Pair-defining entries (j == k) provide A, B, lambda1, lambda2, beta, eta
/// and the pair cutoff; every entry provides the three-body terms used for
/// neighbor k of the (i, j) bond: m, gamma, lambda3, c, d, h, R, D.
struct TersoffParams {
  double m = 3.0;        // exponent flag of the zeta exponential, 1 or 3
  double gamma = 1.0;
  double lambda3 = 0.0;  // 1/A
  double c = 0.0;
  double d = 1.0;
  double h = 0.0;        // cos(theta_0)
  double eta = 1.0;      // "n" in parameter files
  double beta = 0.0;
  double lambda2 = 0.0;  // 1/A
  double B = 0.0;        // eV
  double R = 0.0;        // A, cutoff midpoint
  double D = 0.0;        // A, cutoff half-width
  double lambda1 = 0.0;  // 1/A
  double A = 0.0;        // eV

  double cutoff() const { return R + D; }

  friend bool operator==(const TersoffParams&, const TersoffParams&) = default;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Field layout of the flattened per-triple records the kernels gather from.
/// Derived quantities (c^2, d^2, R + D) are precomputed here once.
namespace field {
enum : std::size_t {
  A,
  B,
  lambda1,
  lambda2,
  lambda3,
  beta,
  eta,
  gamma,
  c2,
  c2_lo,  // c^2 - c2, so that c2 + c2_lo carries c^2 to double length
  d2,
  d2_lo,
  h,
  m_is_cubic,  // 1 when m == 3, else 0
  R,
  D,
  cutoff,
  count
};
}

template <class T>
using ParamRecord = std::array<T, field::count>;

/// x^2 as hi + lo in precision T.
template <class T>
void split_square(double x, T& hi, T& lo) {
  const double sq = x * x;
  const double err = std::fma(x, x, -sq);
  hi = static_cast<T>(sq);
  lo = static_cast<T>((sq - static_cast<double>(hi)) + err);
}

/// Complete table over all ordered species triples, indexed
/// (i * S + j) * S + k for S species.
class ParamTable {
 public:
  ParamTable() = default;
  ParamTable(std::vector<std::string> species, std::vector<TersoffParams> entries);

  std::size_t species_count() const { return species_.size(); }
  const std::vector<std::string>& species() const { return species_; }
  std::optional<int> species_index(std::string_view name) const;

  std::size_t triple_index(int i, int j, int k) const {
    const auto s = species_.size();
    return (static_cast<std::size_t>(i) * s + static_cast<std::size_t>(j)) * s +
           static_cast<std::size_t>(k);
  }
  const TersoffParams& operator()(int i, int j, int k) const { return entries_[triple_index(i, j, k)]; }
  const std::vector<TersoffParams>& entries() const { return entries_; }

  /// Cutoff of the (i, j) pair, taken from the (i, j, j) entry.
  double pair_cutoff(int i, int j) const { return (*this)(i, j, j).cutoff(); }
  /// Largest R + D over all entries.
  double cutoff() const;

  /// Records in kernel precision, one per triple, same indexing.
  template <class T>
  std::vector<ParamRecord<T>> records() const {
    std::vector<ParamRecord<T>> out(entries_.size());
    for (std::size_t n = 0; n < entries_.size(); ++n) {
      const auto& p = entries_[n];
      auto& r = out[n];
      r[field::A] = static_cast<T>(p.A);
      r[field::B] = static_cast<T>(p.B);
      r[field::lambda1] = static_cast<T>(p.lambda1);
      r[field::lambda2] = static_cast<T>(p.lambda2);
      r[field::lambda3] = static_cast<T>(p.lambda3);
      r[field::beta] = static_cast<T>(p.beta);
      r[field::eta] = static_cast<T>(p.eta);
      r[field::gamma] = static_cast<T>(p.gamma);
      split_square(p.c, r[field::c2], r[field::c2_lo]);
      split_square(p.d, r[field::d2], r[field::d2_lo]);
      r[field::h] = static_cast<T>(p.h);
      r[field::m_is_cubic] = p.m == 3.0 ? T(1) : T(0);
      r[field::R] = static_cast<T>(p.R);
      r[field::D] = static_cast<T>(p.D);
      r[field::cutoff] = static_cast<T>(p.R + p.D);
    }
    return out;
  }

 private:
  std::vector<std::string> species_;
  std::vector<TersoffParams> entries_;
};

/// Checks the invariants of one entry; throws ConfigError naming the field.
/// Pair-only fields are validated when `pair_entry` is set.
void validate(const TersoffParams& p, bool pair_entry);

/// Parses the 17-token format. Species are taken in order of first
/// appearance unless `species` restricts them; entries naming other elements
/// are then skipped. Errors carry the offending line number.
ParamTable parse_params(std::string_view text, std::span<const std::string> species = {});
ParamTable load_params(const std::string& path, std::span<const std::string> species = {});

/// Writes one line per triple with round-trip precision.
std::string serialize_params(const ParamTable& table);

/// Tersoff's carbon parameterization (Phys. Rev. Lett. 61, 2879 (1988)) in
/// the 17-token layout.
std::string_view carbon_params_text();
ParamTable carbon_params();

}  // namespace tersoff
