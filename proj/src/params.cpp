#include "tersoff/params.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace tersoff {

namespace {

constexpr std::size_t kTokensPerEntry = 17;

constexpr std::string_view kCarbon = R"(# Tersoff carbon, J. Tersoff, Phys. Rev. Lett. 61, 2879 (1988)
# A, B in eV; lambda1, lambda2, lambda3 in 1/Angstrom; R, D in Angstrom
#
# elem_i elem_j elem_k  m  gamma  lambda3  c  d  h  n  beta  lambda2  B  R  D  lambda1  A
C C C  3.0 1.0 0.0 38049 4.3484 -.57058 .72751 1.5724e-7 2.2119 346.74 1.95 0.15 3.4879 1393.6
)";

std::vector<std::string_view> split_tokens(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
    if (pos >= line.size()) break;
    std::size_t end = pos;
    while (end < line.size() && !std::isspace(static_cast<unsigned char>(line[end]))) ++end;
    tokens.push_back(line.substr(pos, end - pos));
    pos = end;
  }
  return tokens;
}

double parse_number(std::string_view token, std::size_t line, const char* name) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  double value = 0.0;
  const auto* first = token.data();
  const auto* last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw ParseError(line, "field '" + std::string(name) + "' is not a number: '" + std::string(token) + "'");
  }
  return value;
}

struct RawEntry {
  std::array<std::string, 3> elements;
  TersoffParams params;
  std::size_t line;
};

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

ParamTable::ParamTable(std::vector<std::string> species, std::vector<TersoffParams> entries)
    : species_(std::move(species)), entries_(std::move(entries)) {
  const auto s = species_.size();
  if (s == 0) throw ConfigError("parameter table has no species");
  if (entries_.size() != s * s * s) {
    throw ConfigError("parameter table needs " + std::to_string(s * s * s) + " entries, got " +
                      std::to_string(entries_.size()));
  }
  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t j = 0; j < s; ++j) {
      for (std::size_t k = 0; k < s; ++k) {
        validate((*this)(static_cast<int>(i), static_cast<int>(j), static_cast<int>(k)), j == k);
      }
    }
  }
}

std::optional<int> ParamTable::species_index(std::string_view name) const {
  for (std::size_t n = 0; n < species_.size(); ++n) {
    if (species_[n] == name) return static_cast<int>(n);
  }
  return std::nullopt;
}

double ParamTable::cutoff() const {
  double rc = 0.0;
  for (const auto& p : entries_) rc = std::max(rc, p.cutoff());
  return rc;
}

void validate(const TersoffParams& p, bool pair_entry) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("invalid Tersoff parameter: ") + what);
  };
  require(p.m == 1.0 || p.m == 3.0, "m must be 1 or 3");
  require(p.gamma > 0.0, "gamma must be positive");
  require(p.d != 0.0, "d must be nonzero");
  require(p.D > 0.0, "D must be positive");
  require(p.R > p.D, "R must exceed D");
  if (pair_entry) {
    require(p.A > 0.0, "A must be positive");
    require(p.B > 0.0, "B must be positive");
    require(p.eta > 0.0, "n (eta) must be positive");
    require(p.beta >= 0.0, "beta must be non-negative");
  }
}

ParamTable parse_params(std::string_view text, std::span<const std::string> species) {
  std::vector<RawEntry> raw;
  std::vector<std::string> found;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto tokens = split_tokens(line);
    if (tokens.empty()) continue;
    if (tokens.size() != kTokensPerEntry) {
      throw ParseError(line_no, "expected " + std::to_string(kTokensPerEntry) + " tokens, found " +
                                    std::to_string(tokens.size()));
    }

    RawEntry e;
    e.line = line_no;
    for (int n = 0; n < 3; ++n) e.elements[n] = std::string(tokens[n]);
    auto& p = e.params;
    p.m = parse_number(tokens[3], line_no, "m");
    p.gamma = parse_number(tokens[4], line_no, "gamma");
    p.lambda3 = parse_number(tokens[5], line_no, "lambda3");
    p.c = parse_number(tokens[6], line_no, "c");
    p.d = parse_number(tokens[7], line_no, "d");
    p.h = parse_number(tokens[8], line_no, "h");
    p.eta = parse_number(tokens[9], line_no, "n");
    p.beta = parse_number(tokens[10], line_no, "beta");
    p.lambda2 = parse_number(tokens[11], line_no, "lambda2");
    p.B = parse_number(tokens[12], line_no, "B");
    p.R = parse_number(tokens[13], line_no, "R");
    p.D = parse_number(tokens[14], line_no, "D");
    p.lambda1 = parse_number(tokens[15], line_no, "lambda1");
    p.A = parse_number(tokens[16], line_no, "A");
    if (p.m != 1.0 && p.m != 3.0) {
      throw ParseError(line_no, "m must be 1 or 3, got " + std::string(tokens[3]));
    }

    if (!species.empty()) {
      const bool wanted = std::all_of(e.elements.begin(), e.elements.end(), [&](const std::string& el) {
        return std::find(species.begin(), species.end(), el) != species.end();
      });
      if (!wanted) continue;
    } else {
      for (const auto& el : e.elements) {
        if (std::find(found.begin(), found.end(), el) == found.end()) found.push_back(el);
      }
    }
    raw.push_back(std::move(e));
  }

  std::vector<std::string> names = species.empty() ? found : std::vector<std::string>(species.begin(), species.end());
  if (names.empty()) throw ParseError(line_no, "no parameter entries");

  const auto s = names.size();
  auto index_of = [&](const std::string& el) {
    return static_cast<std::size_t>(std::find(names.begin(), names.end(), el) - names.begin());
  };
  std::vector<TersoffParams> entries(s * s * s);
  std::vector<std::size_t> defined_at(s * s * s, 0);
  for (const auto& e : raw) {
    const auto idx = (index_of(e.elements[0]) * s + index_of(e.elements[1])) * s + index_of(e.elements[2]);
    if (defined_at[idx] != 0) {
      throw ParseError(e.line, "duplicate triple (" + e.elements[0] + "," + e.elements[1] + "," + e.elements[2] +
                                   "), first defined on line " + std::to_string(defined_at[idx]));
    }
    try {
      validate(e.params, e.elements[1] == e.elements[2]);
    } catch (const ConfigError& err) {
      throw ParseError(e.line, err.what());
    }
    defined_at[idx] = e.line;
    entries[idx] = e.params;
  }
  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t j = 0; j < s; ++j) {
      for (std::size_t k = 0; k < s; ++k) {
        if (defined_at[(i * s + j) * s + k] == 0) {
          throw ParseError(line_no, "missing triple (" + names[i] + "," + names[j] + "," + names[k] + ")");
        }
      }
    }
  }
  return ParamTable(std::move(names), std::move(entries));
}

ParamTable load_params(const std::string& path, std::span<const std::string> species) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open parameter file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_params(ss.str(), species);
}

std::string serialize_params(const ParamTable& table) {
  std::string out = "# elem_i elem_j elem_k  m  gamma  lambda3  c  d  h  n  beta  lambda2  B  R  D  lambda1  A\n";
  const auto& sp = table.species();
  const auto s = static_cast<int>(sp.size());
  for (int i = 0; i < s; ++i) {
    for (int j = 0; j < s; ++j) {
      for (int k = 0; k < s; ++k) {
        const auto& p = table(i, j, k);
        out += sp[i] + ' ' + sp[j] + ' ' + sp[k];
        for (double v : {p.m, p.gamma, p.lambda3, p.c, p.d, p.h, p.eta, p.beta, p.lambda2, p.B, p.R, p.D,
                         p.lambda1, p.A}) {
          out += ' ';
          out += format_double(v);
        }
        out += '\n';
      }
    }
  }
  return out;
}

std::string_view carbon_params_text() { return kCarbon; }

ParamTable carbon_params() { return parse_params(kCarbon); }

}  // namespace tersoff
