#pragma once

// Kernel bodies shared by the instantiation units. Not installed.
//
// ScalarOpt, VecJ and VecI evaluate the same expressions in the same order
// per pair: zeta over k ascending, then the pair term, then F_i, F_j and the
// F_k loop. Under StrictMath at W = 1 the three are therefore bit-identical.

#include <functional>
#include <span>
#include <vector>

#include "tersoff/kernels.hpp"
#include "tersoff/neighbor.hpp"
#include "tersoff/potential.hpp"
#include "tersoff/simd.hpp"

namespace tersoff::detail {

struct Accumulator {
  std::vector<double> fx, fy, fz, e_atom;
  double energy = 0.0;
  KernelCounters counters;

  void reset(int n, bool per_atom) {
    fx.assign(static_cast<std::size_t>(n), 0.0);
    fy.assign(static_cast<std::size_t>(n), 0.0);
    fz.assign(static_cast<std::size_t>(n), 0.0);
    e_atom.assign(per_atom ? static_cast<std::size_t>(n) : 0, 0.0);
    energy = 0.0;
    counters = {};
  }

  template <class T>
  void sub_force(int a, const XYZ<T>& f) {
    const auto s = static_cast<std::size_t>(a);
    fx[s] -= static_cast<double>(f.x);
    fy[s] -= static_cast<double>(f.y);
    fz[s] -= static_cast<double>(f.z);
  }

  template <class T>
  void add_energy(int a, T e) {
    energy += static_cast<double>(e);
    if (!e_atom.empty()) e_atom[static_cast<std::size_t>(a)] += static_cast<double>(e);
  }
};

using RangeFn = std::function<void(int, int, Accumulator&)>;

/// Splits [0, n) into opts.chunks ranges, runs them on opts.threads workers
/// with private accumulators, and sums the accumulators in chunk order.
ForceEnergyResult run_chunks(int n, const KernelOptions& opts, const RangeFn& fn);

/// Throws on inconsistent state, list or parameter table.
void check_inputs(const SimulationState& state, const NeighborList& nl, const ParamTable& params);

template <class T>
struct KernelInput {
  PackedPairs<T> pairs;
  std::vector<ParamRecord<T>> records;
  std::span<const int> species;
  int species_count = 1;

  KernelInput(const SimulationState& state, const NeighborList& nl, const ParamTable& params)
      : pairs(pack_pairs<T>(state, nl, params)),
        records(params.records<T>()),
        species(state.species),
        species_count(static_cast<int>(params.species_count())) {}
};

template <class V>
XYZ<V> unit_vector(const V& dx, const V& dy, const V& dz, const V& r) {
  const V inv = V(simd::scalar_t<V>(1)) / r;
  return {dx * inv, dy * inv, dz * inv};
}

// ---------------------------------------------------------------------------
// Reference: two k loops per pair over the skin list, cutoff tested inline.

template <class T, bool Count>
void reference_range(const SimulationState& state, const NeighborList& nl, const ParamTable& params,
                     std::span<const ParamRecord<T>> records, int ib, int ie, Accumulator& acc) {
  const int S = static_cast<int>(params.species_count());
  const auto& box = state.box;

  struct Neighbor {
    bool inside;
    XYZ<T> e;
    T r;
  };
  auto neighbor = [&](int i, int j) {
    const Eigen::Vector3d d = box.minimum_image(state.positions.col(j) - state.positions.col(i));
    const double r = d.norm();
    const int ti = state.species[static_cast<std::size_t>(i)];
    const int tj = state.species[static_cast<std::size_t>(j)];
    Neighbor nb{r < params.pair_cutoff(ti, tj), {}, static_cast<T>(r)};
    if (nb.inside) nb.e = unit_vector<T>(static_cast<T>(d.x()), static_cast<T>(d.y()), static_cast<T>(d.z()), nb.r);
    return nb;
  };

  for (int i = ib; i < ie; ++i) {
    const int ti = state.species[static_cast<std::size_t>(i)];
    const auto list = nl.of(i);
    for (int j : list) {
      const auto nj = neighbor(i, j);
      if (!nj.inside) continue;
      const int tj = state.species[static_cast<std::size_t>(j)];
      const auto* row = &records[static_cast<std::size_t>((ti * S + tj) * S)];

      T zeta = 0;
      for (int k : list) {
        const auto nk = neighbor(i, k);
        if (!nk.inside) continue;
        if constexpr (Count) ++acc.counters.zeta_visits;
        if (k == j) continue;
        if constexpr (Count) ++acc.counters.zeta_evals;
        const int tk = state.species[static_cast<std::size_t>(k)];
        zeta += zeta_value<T>(nj.e, nj.r, nk.e, nk.r, three_body_params_from<T>(row[tk]));
      }

      const auto pt = pair_term<T>(nj.e, nj.r, zeta, pair_params_from<T>(row[tj]));
      acc.add_energy(i, pt.energy);
      acc.sub_force(i, pt.dV_dxi);
      acc.sub_force(j, pt.dV_dxj);
      const T dz = pt.delta_zeta;

      for (int k : list) {
        const auto nk = neighbor(i, k);
        if (!nk.inside) continue;
        if constexpr (Count) ++acc.counters.zeta_visits;
        if (k == j) continue;
        if constexpr (Count) ++acc.counters.zeta_evals;
        const int tk = state.species[static_cast<std::size_t>(k)];
        const auto zt = zeta_term<T>(nj.e, nj.r, nk.e, nk.r, three_body_params_from<T>(row[tk]));
        acc.sub_force(i, dz * zt.d_xi);
        acc.sub_force(j, dz * zt.d_xj);
        acc.sub_force(k, dz * zt.d_xk);
      }
    }
  }
}

// ---------------------------------------------------------------------------
// ScalarOpt: one k loop per pair; zeta gradients cached and scaled by dV/dzeta.

template <class T, bool Count>
void scalar_opt_range(const KernelInput<T>& in, int ib, int ie, Accumulator& acc) {
  const int S = in.species_count;
  const auto& pp = in.pairs;
  std::vector<XYZ<T>> e, dk;
  std::vector<T> r, inv;
  std::vector<int> kt;

  for (int i = ib; i < ie; ++i) {
    const int off = pp.offsets[static_cast<std::size_t>(i)];
    const int n = pp.offsets[static_cast<std::size_t>(i) + 1] - off;
    if (n == 0) continue;
    const int ti = in.species[static_cast<std::size_t>(i)];
    e.resize(static_cast<std::size_t>(n));
    dk.resize(static_cast<std::size_t>(n));
    r.resize(static_cast<std::size_t>(n));
    inv.resize(static_cast<std::size_t>(n));
    kt.resize(static_cast<std::size_t>(n));
    for (int q = 0; q < n; ++q) {
      const auto& g = pp.geometry[static_cast<std::size_t>(off + q)];
      r[q] = g[3];
      inv[q] = T(1) / g[3];
      e[q] = unit_vector<T>(g[0], g[1], g[2], g[3]);
      kt[q] = in.species[static_cast<std::size_t>(pp.index[static_cast<std::size_t>(off + q)])];
    }

    for (int p = 0; p < n; ++p) {
      const int j = pp.index[static_cast<std::size_t>(off + p)];
      const int tj = kt[p];
      const auto* row = &in.records[static_cast<std::size_t>((ti * S + tj) * S)];

      T zeta = 0;
      XYZ<T> gi{}, gj{};
      for (int q = 0; q < n; ++q) {
        if constexpr (Count) ++acc.counters.zeta_visits;
        if (q == p) continue;
        if constexpr (Count) ++acc.counters.zeta_evals;
        const auto zt = zeta_term<T>(e[p], r[p], inv[p], e[q], r[q], inv[q], three_body_params_from<T>(row[kt[q]]));
        zeta += zt.value;
        gi += zt.d_xi;
        gj += zt.d_xj;
        dk[q] = zt.d_xk;
      }

      const auto pt = pair_term<T>(e[p], r[p], zeta, pair_params_from<T>(row[tj]));
      const T dz = pt.delta_zeta;
      acc.add_energy(i, pt.energy);
      acc.sub_force(i, pt.dV_dxi + dz * gi);
      acc.sub_force(j, pt.dV_dxj + dz * gj);
      for (int q = 0; q < n; ++q) {
        if (q == p) continue;
        acc.sub_force(pp.index[static_cast<std::size_t>(off + q)], dz * dk[q]);
      }
    }
    if constexpr (Count) {
      acc.counters.active_lanes += static_cast<std::uint64_t>(n);
      acc.counters.total_lanes += static_cast<std::uint64_t>(n);
    }
  }
}

// ---------------------------------------------------------------------------
// Lane helpers

template <class V>
XYZ<V> broadcast(const XYZ<simd::scalar_t<V>>& a) {
  return {V(a.x), V(a.y), V(a.z)};
}

template <class V>
XYZ<V> masked(const simd::mask_t<V>& m, const XYZ<V>& a) {
  const V zero(simd::scalar_t<V>(0));
  return {simd::select(m, a.x, zero), simd::select(m, a.y, zero), simd::select(m, a.z, zero)};
}

template <class V>
XYZ<simd::scalar_t<V>> reduce(const XYZ<V>& a) {
  return {simd::reduce_sum(a.x), simd::reduce_sum(a.y), simd::reduce_sum(a.z)};
}

/// Parameter records per lane. A single-species table, or a batch whose lanes
/// all hit one (ti, tj, tk) entry, broadcasts instead of gathering K fields.
template <class T, int W, class M>
std::array<simd::LaneVector<T, W, M>, field::count> record_lanes(std::span<const ParamRecord<T>> records,
                                                                const simd::LaneVector<simd::index_t, W, M>& idx) {
  using I = simd::LaneVector<simd::index_t, W, M>;
  if ((idx == I(idx[0])).all()) {
    std::array<simd::LaneVector<T, W, M>, field::count> out;
    const auto& rec = records[static_cast<std::size_t>(idx[0])];
    for (std::size_t f = 0; f < field::count; ++f) out[f] = simd::LaneVector<T, W, M>(rec[f]);
    return out;
  }
  return simd::gather_transpose<field::count>(records, idx, simd::LaneMask<W>(true));
}

template <class V, int W, class M>
void scatter_sub(Accumulator& acc, const simd::LaneVector<simd::index_t, W, M>& idx, const XYZ<V>& f,
                 const simd::LaneMask<W>& mask) {
  simd::accumulate_scatter(std::span<double>(acc.fx), idx, -f.x, mask);
  simd::accumulate_scatter(std::span<double>(acc.fy), idx, -f.y, mask);
  simd::accumulate_scatter(std::span<double>(acc.fz), idx, -f.z, mask);
}

// ---------------------------------------------------------------------------
// VecJ: lanes are the neighbors j of one atom i; k is broadcast.

template <class T, int W, class M, bool Count>
void vec_j_range(const KernelInput<T>& in, int ib, int ie, Accumulator& acc) {
  using V = simd::LaneVector<T, W, M>;
  using I = simd::LaneVector<simd::index_t, W, M>;
  using Mask = simd::LaneMask<W>;

  const int S = in.species_count;
  const auto& pp = in.pairs;
  const std::span<const std::array<T, 4>> geometry(pp.geometry);
  const std::span<const simd::index_t> index(pp.index);
  const std::span<const ParamRecord<T>> records(in.records);

  std::vector<XYZ<T>> e;
  std::vector<T> r, inv;
  std::vector<int> kt, kidx;
  std::vector<XYZ<V>> dk;

  for (int i = ib; i < ie; ++i) {
    const int off = pp.offsets[static_cast<std::size_t>(i)];
    const int n = pp.offsets[static_cast<std::size_t>(i) + 1] - off;
    if (n == 0) continue;
    const int ti = in.species[static_cast<std::size_t>(i)];
    e.resize(static_cast<std::size_t>(n));
    r.resize(static_cast<std::size_t>(n));
    inv.resize(static_cast<std::size_t>(n));
    kt.resize(static_cast<std::size_t>(n));
    kidx.resize(static_cast<std::size_t>(n));
    dk.resize(static_cast<std::size_t>(n));
    for (int q = 0; q < n; ++q) {
      const auto& g = pp.geometry[static_cast<std::size_t>(off + q)];
      r[q] = g[3];
      inv[q] = T(1) / g[3];
      e[q] = unit_vector<T>(g[0], g[1], g[2], g[3]);
      kidx[q] = pp.index[static_cast<std::size_t>(off + q)];
      kt[q] = in.species[static_cast<std::size_t>(kidx[q])];
    }

    for (int s = 0; s < n; s += W) {
      const int active = std::min(W, n - s);
      const Mask valid = Mask::first(active);
      const I slot = I::iota(s);
      const I pos = slot + I(off);

      const auto g = simd::gather_transpose<4>(geometry, pos, valid);
      const I jv = simd::masked_gather(index, pos, valid, simd::index_t(-1));
      const I tj = simd::masked_gather(in.species, jv, valid, 0);
      const I row = (I(ti * S) + tj) * I(S);
      if constexpr (Count) {
        acc.counters.gathers += 3;
        acc.counters.active_lanes += static_cast<std::uint64_t>(active);
        acc.counters.total_lanes += W;
      }
      const V r_ij = simd::select(valid, g[3], V(T(1)));
      const V inv_rij = V(T(1)) / r_ij;
      const XYZ<V> e_ij = unit_vector<V>(g[0], g[1], g[2], r_ij);

      V zeta(T(0));
      XYZ<V> gi{}, gj{};
      for (int q = 0; q < n; ++q) {
        if constexpr (Count) acc.counters.zeta_visits += static_cast<std::uint64_t>(active);
        const Mask m = valid & (slot != I(q));
        if (m.none()) continue;
        if constexpr (Count) {
          acc.counters.zeta_evals += static_cast<std::uint64_t>(m.count());
          ++acc.counters.gathers;
        }
        const auto rec = record_lanes(records, row + I(kt[q]));
        const auto zt = zeta_term<V>(e_ij, r_ij, inv_rij, broadcast<V>(e[q]), V(r[q]), V(inv[q]), three_body_params_from<V>(rec));
        zeta = simd::select(m, zeta + zt.value, zeta);
        gi = select(m, gi + zt.d_xi, gi);
        gj = select(m, gj + zt.d_xj, gj);
        dk[q] = zt.d_xk;
      }

      const auto prec = record_lanes(records, row + tj);
      if constexpr (Count) ++acc.counters.gathers;
      const auto pt = pair_term<V>(e_ij, r_ij, zeta, pair_params_from<V>(prec));
      const V dz = pt.delta_zeta;
      acc.add_energy(i, simd::reduce_sum(simd::select(valid, pt.energy, V(T(0)))));
      acc.sub_force(i, reduce(masked(valid, pt.dV_dxi + dz * gi)));
      scatter_sub(acc, jv, pt.dV_dxj + dz * gj, valid);
      for (int q = 0; q < n; ++q) {
        const Mask m = valid & (slot != I(q));
        if (m.none()) continue;
        acc.sub_force(kidx[q], reduce(masked(m, dz * dk[q])));
      }
    }
  }
}

// ---------------------------------------------------------------------------
// VecI: lanes are consecutive (i, j) pairs across atoms. Every lane walks its
// own i's neighbor list with a private cursor; forces go through the
// conflict-serialized scatter because lanes may share i, j or k.

template <class T, int W, class M, bool Count>
void vec_i_range(const KernelInput<T>& in, int ib, int ie, Accumulator& acc) {
  using V = simd::LaneVector<T, W, M>;
  using I = simd::LaneVector<simd::index_t, W, M>;
  using Mask = simd::LaneMask<W>;

  const int S = in.species_count;
  const auto& pp = in.pairs;
  const std::span<const std::array<T, 4>> geometry(pp.geometry);
  const std::span<const simd::index_t> index(pp.index);
  const std::span<const simd::index_t> owner(pp.owner);
  const std::span<const int> offsets(pp.offsets);
  const std::span<const ParamRecord<T>> records(in.records);
  const std::span<double> e_atom(acc.e_atom);

  std::vector<XYZ<V>> dk;
  std::vector<I> kv;
  std::vector<Mask> km;

  for_each_batch(offsets, ib, ie, PackMode::I, W, [&](int first, int active) {
    const Mask valid = Mask::first(active);
    const I pos = I::iota(first);
    // batch slots are consecutive, so owner and index are plain masked loads
    const I iv = I::load(owner.data() + first, valid, -1);
    const I jv = I::load(index.data() + first, valid, -1);
    const auto g = simd::gather_transpose<4>(geometry, pos, valid);
    const I ti = simd::masked_gather(in.species, iv, valid, 0);
    const I tj = simd::masked_gather(in.species, jv, valid, 0);
    const I koff = simd::masked_gather(offsets, iv, valid, 0);
    const I kn = simd::masked_gather(offsets, iv + I(1), valid, 0) - koff;
    const I slot = pos - koff;
    const I row = (ti * I(S) + tj) * I(S);
    const int nmax = simd::reduce_max(simd::select(valid, kn, I(0)));
    if constexpr (Count) {
      acc.counters.gathers += 7;
      acc.counters.active_lanes += static_cast<std::uint64_t>(active);
      acc.counters.total_lanes += W;
    }

    const V r_ij = simd::select(valid, g[3], V(T(1)));
    const V inv_rij = V(T(1)) / r_ij;
    const XYZ<V> e_ij = unit_vector<V>(g[0], g[1], g[2], r_ij);

    dk.resize(static_cast<std::size_t>(nmax));
    kv.resize(static_cast<std::size_t>(nmax));
    km.resize(static_cast<std::size_t>(nmax));

    V zeta(T(0));
    XYZ<V> gi{}, gj{};
    for (int t = 0; t < nmax; ++t) {
      const Mask listed = valid & (I(t) < kn);
      const Mask m = listed & (slot != I(t));
      if constexpr (Count) acc.counters.zeta_visits += static_cast<std::uint64_t>(listed.count());
      km[t] = m;
      if (m.none()) continue;
      const I q = koff + I(t);
      const auto gk = simd::gather_transpose<4>(geometry, q, m);
      const I k = simd::masked_gather(index, q, m, simd::index_t(0));
      const I tk = simd::masked_gather(in.species, k, m, 0);
      const auto rec = record_lanes(records, row + tk);
      if constexpr (Count) {
        acc.counters.zeta_evals += static_cast<std::uint64_t>(m.count());
        acc.counters.gathers += 4;
      }
      kv[t] = k;
      const V r_ik = simd::select(m, gk[3], V(T(1)));
      const V inv_rik = V(T(1)) / r_ik;
      const XYZ<V> e_ik = unit_vector<V>(gk[0], gk[1], gk[2], r_ik);
      const auto zt = zeta_term<V>(e_ij, r_ij, inv_rij, e_ik, r_ik, inv_rik, three_body_params_from<V>(rec));
      zeta = simd::select(m, zeta + zt.value, zeta);
      gi = select(m, gi + zt.d_xi, gi);
      gj = select(m, gj + zt.d_xj, gj);
      dk[t] = zt.d_xk;
    }

    const auto prec = record_lanes(records, row + tj);
    if constexpr (Count) ++acc.counters.gathers;
    const auto pt = pair_term<V>(e_ij, r_ij, zeta, pair_params_from<V>(prec));
    const V dz = pt.delta_zeta;
    acc.energy += static_cast<double>(simd::reduce_sum(simd::select(valid, pt.energy, V(T(0)))));
    if (!e_atom.empty()) simd::accumulate_scatter(e_atom, iv, pt.energy, valid);
    scatter_sub(acc, iv, pt.dV_dxi + dz * gi, valid);
    scatter_sub(acc, jv, pt.dV_dxj + dz * gj, valid);
    for (int t = 0; t < nmax; ++t) {
      if (km[t].none()) continue;
      scatter_sub(acc, kv[t], dz * dk[t], km[t]);
    }
  });
}

// ---------------------------------------------------------------------------
// Entry points instantiated per precision, width and math policy.

template <class T, int W, class M>
ForceEnergyResult run_vec_j(const SimulationState& state, const NeighborList& nl, const ParamTable& params,
                            const KernelOptions& opts) {
  const KernelInput<T> in(state, nl, params);
  if (opts.count) {
    return run_chunks(state.size(), opts, [&](int b, int e, Accumulator& a) { vec_j_range<T, W, M, true>(in, b, e, a); });
  }
  return run_chunks(state.size(), opts, [&](int b, int e, Accumulator& a) { vec_j_range<T, W, M, false>(in, b, e, a); });
}

template <class T, int W, class M>
ForceEnergyResult run_vec_i(const SimulationState& state, const NeighborList& nl, const ParamTable& params,
                            const KernelOptions& opts) {
  const KernelInput<T> in(state, nl, params);
  if (opts.count) {
    return run_chunks(state.size(), opts, [&](int b, int e, Accumulator& a) { vec_i_range<T, W, M, true>(in, b, e, a); });
  }
  return run_chunks(state.size(), opts, [&](int b, int e, Accumulator& a) { vec_i_range<T, W, M, false>(in, b, e, a); });
}

#define TERSOFF_DECLARE_VEC(T, W, M)                                                                            \
  extern template ForceEnergyResult run_vec_j<T, W, M>(const SimulationState&, const NeighborList&,             \
                                                       const ParamTable&, const KernelOptions&);               \
  extern template ForceEnergyResult run_vec_i<T, W, M>(const SimulationState&, const NeighborList&,             \
                                                       const ParamTable&, const KernelOptions&);

#define TERSOFF_INSTANTIATE_VEC(T, W, M)                                                                        \
  template ForceEnergyResult run_vec_j<T, W, M>(const SimulationState&, const NeighborList&, const ParamTable&, \
                                                const KernelOptions&);                                          \
  template ForceEnergyResult run_vec_i<T, W, M>(const SimulationState&, const NeighborList&, const ParamTable&, \
                                                const KernelOptions&);

#define TERSOFF_FOR_EMULATED_WIDTHS(X, T) \
  X(T, 1, simd::StrictMath)               \
  X(T, 2, simd::StrictMath)               \
  X(T, 4, simd::StrictMath)               \
  X(T, 8, simd::StrictMath)               \
  X(T, 16, simd::StrictMath)

TERSOFF_FOR_EMULATED_WIDTHS(TERSOFF_DECLARE_VEC, float)
TERSOFF_FOR_EMULATED_WIDTHS(TERSOFF_DECLARE_VEC, double)
#if defined(TERSOFF_NATIVE_SIMD)
TERSOFF_DECLARE_VEC(float, simd::native_width<float>, simd::FastMath)
TERSOFF_DECLARE_VEC(double, simd::native_width<double>, simd::FastMath)
#endif

}  // namespace tersoff::detail
