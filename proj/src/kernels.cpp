#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>

#include "kernel_impl.hpp"

namespace tersoff {

KernelCounters& KernelCounters::operator+=(const KernelCounters& o) {
  zeta_visits += o.zeta_visits;
  zeta_evals += o.zeta_evals;
  gathers += o.gathers;
  active_lanes += o.active_lanes;
  total_lanes += o.total_lanes;
  return *this;
}

std::string BackendDescriptor::name() const { return std::string(to_string(kind)); }

bool native_available() { return simd::native_backend_available; }

int native_width(Precision precision) {
  return precision == Precision::Single ? simd::native_width<float> : simd::native_width<double>;
}

BackendDescriptor make_backend(BackendKind kind, int width, Precision precision) {
  switch (kind) {
    case BackendKind::Scalar:
      if (width != 0 && width != 1) throw ConfigError("the scalar backend has width 1");
      return {kind, 1, precision};
    case BackendKind::Emulated:
      if (std::find(std::begin(emulated_widths), std::end(emulated_widths), width) == std::end(emulated_widths)) {
        throw ConfigError("emulated width must be one of 1, 2, 4, 8, 16 (got " + std::to_string(width) + ")");
      }
      return {kind, width, precision};
    case BackendKind::Native: {
      if (!native_available()) throw ConfigError("this build has no native SIMD backend");
      const int w = native_width(precision);
      if (width != 0 && width != w) {
        throw ConfigError("native " + std::string(to_string(precision)) + " width is " + std::to_string(w) +
                          " on " + simd::native_isa_name() + " (got " + std::to_string(width) + ")");
      }
      return {kind, w, precision};
    }
  }
  throw ConfigError("unknown backend");
}

namespace detail {

ForceEnergyResult run_chunks(int n, const KernelOptions& opts, const RangeFn& fn) {
  const int chunks = std::clamp(opts.chunks, 1, std::max(1, n));
  std::vector<Accumulator> acc(static_cast<std::size_t>(chunks));
  auto work = [&](int c) {
    const auto begin = static_cast<int>(static_cast<std::int64_t>(n) * c / chunks);
    const auto end = static_cast<int>(static_cast<std::int64_t>(n) * (c + 1) / chunks);
    auto& a = acc[static_cast<std::size_t>(c)];
    a.reset(n, opts.per_atom_energy);
    fn(begin, end, a);
  };

  const int threads = std::clamp(opts.threads, 1, chunks);
  if (threads == 1) {
    for (int c = 0; c < chunks; ++c) work(c);
  } else {
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (int c = next++; c < chunks; c = next++) work(c);
        } catch (...) {
          errors[static_cast<std::size_t>(t)] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& err : errors) {
      if (err) std::rethrow_exception(err);
    }
  }

  ForceEnergyResult out;
  out.forces = Eigen::Matrix3Xd::Zero(3, n);
  if (opts.per_atom_energy) out.per_atom_energy = Eigen::VectorXd::Zero(n);
  for (const auto& a : acc) {
    for (int i = 0; i < n; ++i) {
      const auto s = static_cast<std::size_t>(i);
      out.forces(0, i) += a.fx[s];
      out.forces(1, i) += a.fy[s];
      out.forces(2, i) += a.fz[s];
    }
    if (opts.per_atom_energy) {
      for (int i = 0; i < n; ++i) out.per_atom_energy[i] += a.e_atom[static_cast<std::size_t>(i)];
    }
    out.potential_energy += a.energy;
    out.counters += a.counters;
  }
  return out;
}

void check_inputs(const SimulationState& state, const NeighborList& nl, const ParamTable& params) {
  validate_state(state, params.species_count());
  if (nl.atom_count() != state.size()) throw ConfigError("neighbor list was built for a different atom count");
  if (nl.cutoff < params.cutoff()) {
    throw ConfigError("neighbor list cutoff " + std::to_string(nl.cutoff) + " A is below the potential cutoff " +
                      std::to_string(params.cutoff()) + " A");
  }
  if (needs_rebuild(state, nl)) throw ConfigError("neighbor list is stale; rebuild before computing forces");
}

namespace {

template <class T>
ForceEnergyResult run_reference(const SimulationState& state, const NeighborList& nl, const ParamTable& params,
                                const KernelOptions& opts) {
  const auto records = params.records<T>();
  const std::span<const ParamRecord<T>> rec(records);
  if (opts.count) {
    return run_chunks(state.size(), opts, [&](int b, int e, Accumulator& a) {
      reference_range<T, true>(state, nl, params, rec, b, e, a);
    });
  }
  return run_chunks(state.size(), opts, [&](int b, int e, Accumulator& a) {
    reference_range<T, false>(state, nl, params, rec, b, e, a);
  });
}

template <class T>
ForceEnergyResult run_scalar_opt(const SimulationState& state, const NeighborList& nl, const ParamTable& params,
                                 const KernelOptions& opts) {
  const KernelInput<T> in(state, nl, params);
  if (opts.count) {
    return run_chunks(state.size(), opts, [&](int b, int e, Accumulator& a) { scalar_opt_range<T, true>(in, b, e, a); });
  }
  return run_chunks(state.size(), opts, [&](int b, int e, Accumulator& a) { scalar_opt_range<T, false>(in, b, e, a); });
}

template <class T>
ForceEnergyResult run_vec(bool mode_j, const SimulationState& state, const NeighborList& nl, const ParamTable& params,
                          const BackendDescriptor& backend, const KernelOptions& opts) {
#define TERSOFF_RUN(W, M) \
  return mode_j ? run_vec_j<T, W, M>(state, nl, params, opts) : run_vec_i<T, W, M>(state, nl, params, opts)

  if (backend.kind == BackendKind::Native) {
#if defined(TERSOFF_NATIVE_SIMD)
    TERSOFF_RUN(simd::native_width<T>, simd::FastMath);
#else
    throw ConfigError("this build has no native SIMD backend");
#endif
  }
  const int w = backend.kind == BackendKind::Scalar ? 1 : backend.width;
  switch (w) {
    case 1: TERSOFF_RUN(1, simd::StrictMath);
    case 2: TERSOFF_RUN(2, simd::StrictMath);
    case 4: TERSOFF_RUN(4, simd::StrictMath);
    case 8: TERSOFF_RUN(8, simd::StrictMath);
    case 16: TERSOFF_RUN(16, simd::StrictMath);
    default:
      throw ConfigError("unsupported lane width " + std::to_string(w));
  }
#undef TERSOFF_RUN
}

ForceEnergyResult run_vec_any(bool mode_j, const SimulationState& state, const NeighborList& nl,
                              const ParamTable& params, const BackendDescriptor& backend, const KernelOptions& opts) {
  check_inputs(state, nl, params);
  return backend.precision == Precision::Single ? run_vec<float>(mode_j, state, nl, params, backend, opts)
                                                : run_vec<double>(mode_j, state, nl, params, backend, opts);
}

}  // namespace
}  // namespace detail

ForceEnergyResult compute_reference(const SimulationState& state, const NeighborList& nl, const ParamTable& params,
                                    Precision precision, const KernelOptions& opts) {
  detail::check_inputs(state, nl, params);
  return precision == Precision::Single ? detail::run_reference<float>(state, nl, params, opts)
                                        : detail::run_reference<double>(state, nl, params, opts);
}

ForceEnergyResult compute_scalar_opt(const SimulationState& state, const NeighborList& nl, const ParamTable& params,
                                     Precision precision, const KernelOptions& opts) {
  detail::check_inputs(state, nl, params);
  return precision == Precision::Single ? detail::run_scalar_opt<float>(state, nl, params, opts)
                                        : detail::run_scalar_opt<double>(state, nl, params, opts);
}

ForceEnergyResult compute_vec_j(const SimulationState& state, const NeighborList& nl, const ParamTable& params,
                                const BackendDescriptor& backend, const KernelOptions& opts) {
  return detail::run_vec_any(true, state, nl, params, backend, opts);
}

ForceEnergyResult compute_vec_i(const SimulationState& state, const NeighborList& nl, const ParamTable& params,
                                const BackendDescriptor& backend, const KernelOptions& opts) {
  return detail::run_vec_any(false, state, nl, params, backend, opts);
}

ForceEnergyResult compute_forces(const SimulationState& state, const NeighborList& nl, const ParamTable& params,
                                 const KernelVariant& variant, const KernelOptions& opts) {
  switch (variant.tag) {
    case Variant::Reference:
      return compute_reference(state, nl, params, variant.precision, opts);
    case Variant::ScalarOpt:
      return compute_scalar_opt(state, nl, params, variant.precision, opts);
    case Variant::VecJ:
    case Variant::VecI: {
      BackendDescriptor b = variant.backend;
      b.precision = variant.precision;
      return variant.tag == Variant::VecJ ? compute_vec_j(state, nl, params, b, opts)
                                          : compute_vec_i(state, nl, params, b, opts);
    }
  }
  throw ConfigError("unknown kernel variant");
}

KernelCounters count_flops_and_visits(const SimulationState& state, const NeighborList& nl, const ParamTable& params,
                                      const KernelVariant& variant) {
  KernelOptions opts;
  opts.count = true;
  return compute_forces(state, nl, params, variant, opts).counters;
}

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::Reference: return "reference";
    case Variant::ScalarOpt: return "scalar";
    case Variant::VecJ: return "vec-j";
    case Variant::VecI: return "vec-i";
  }
  return "?";
}

std::string_view to_string(Precision p) { return p == Precision::Single ? "single" : "double"; }

std::string_view to_string(BackendKind b) {
  switch (b) {
    case BackendKind::Scalar: return "scalar";
    case BackendKind::Emulated: return "emulated";
    case BackendKind::Native: return "native";
  }
  return "?";
}

Variant parse_variant(std::string_view s) {
  for (auto v : {Variant::Reference, Variant::ScalarOpt, Variant::VecJ, Variant::VecI}) {
    if (to_string(v) == s) return v;
  }
  throw ConfigError("unknown variant '" + std::string(s) + "' (reference|scalar|vec-j|vec-i)");
}

Precision parse_precision(std::string_view s) {
  if (s == "single") return Precision::Single;
  if (s == "double") return Precision::Double;
  throw ConfigError("unknown precision '" + std::string(s) + "' (single|double)");
}

BackendKind parse_backend(std::string_view s) {
  for (auto b : {BackendKind::Scalar, BackendKind::Emulated, BackendKind::Native}) {
    if (to_string(b) == s) return b;
  }
  throw ConfigError("unknown backend '" + std::string(s) + "' (scalar|emulated|native)");
}

}  // namespace tersoff
