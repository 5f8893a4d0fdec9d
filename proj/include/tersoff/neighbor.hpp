#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "tersoff/params.hpp"
#include "tersoff/simd.hpp"
#include "tersoff/state.hpp"

namespace tersoff {

/// Atoms binned into a regular grid of cells no smaller than the requested
/// size. Non-periodic axes span the bounding box of the positions.
struct CellList {
  std::array<int, 3> dims{1, 1, 1};
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  Eigen::Vector3d cell_edge = Eigen::Vector3d::Ones();
  std::array<bool, 3> periodic{false, false, false};
  std::vector<int> cell_start;  // size cells + 1
  std::vector<int> atoms;       // atom indices grouped by cell
  std::vector<int> cell_of;     // cell index of each atom

  int cell_count() const { return dims[0] * dims[1] * dims[2]; }
  int cell_index(int cx, int cy, int cz) const { return (cz * dims[1] + cy) * dims[0] + cx; }
  std::span<const int> atoms_in(int cell) const {
    return {atoms.data() + cell_start[static_cast<std::size_t>(cell)],
            static_cast<std::size_t>(cell_start[static_cast<std::size_t>(cell) + 1] -
                                     cell_start[static_cast<std::size_t>(cell)])};
  }
  /// Distinct cells adjacent to `cell` (itself included), wrapping periodic axes.
  std::vector<int> stencil(int cell) const;
};

/// Throws ConfigError when a periodic edge is shorter than `cell_size`.
CellList build_cell_list(const SimulationState& state, double cell_size);

/// Full (both directions) skin-inclusive neighbor list in CSR form.
struct NeighborList {
  std::vector<int> offsets;    // size atoms + 1, non-decreasing
  std::vector<int> neighbors;  // ascending within each atom
  double cutoff = 0.0;         // true interaction cutoff the list was built for
  double skin = 0.0;
  double build_cutoff = 0.0;   // cutoff + skin
  Eigen::Matrix3Xd reference_positions;

  int atom_count() const { return static_cast<int>(offsets.size()) - 1; }
  std::span<const int> of(int i) const {
    return {neighbors.data() + offsets[static_cast<std::size_t>(i)],
            static_cast<std::size_t>(offsets[static_cast<std::size_t>(i) + 1] - offsets[static_cast<std::size_t>(i)])};
  }
};

inline constexpr double default_skin = 0.3;

/// Every pair closer than cutoff + skin. Periodic edges must be at least
/// twice that distance so minimum images are unique (ConfigError otherwise).
NeighborList build_neighbor_list(const SimulationState& state, double cutoff, double skin = default_skin);

/// True once any atom moved at least skin/2 since the list was built, which
/// is the last point at which no pair inside the cutoff can be missing.
bool needs_rebuild(const SimulationState& state, const NeighborList& nl);

/// Within-cutoff neighbors of every atom, skin entries removed, in CSR form.
/// Entries keep the order of the skin list. Displacements x_j - x_i are
/// minimum-imaged in double and stored in kernel precision T.
template <class T>
struct PackedPairs {
  std::vector<int> offsets;                 // size atoms + 1
  std::vector<simd::index_t> owner;         // i of each entry
  std::vector<simd::index_t> index;         // j of each entry
  std::vector<std::array<T, 4>> geometry;   // dx, dy, dz, r

  int atom_count() const { return static_cast<int>(offsets.size()) - 1; }
  int count(int i) const { return offsets[static_cast<std::size_t>(i) + 1] - offsets[static_cast<std::size_t>(i)]; }
  std::size_t size() const { return index.size(); }
};

/// Filters the skin list against each pair's own cutoff, R + D of the
/// (type_i, type_j, type_j) entry.
template <class T>
PackedPairs<T> pack_pairs(const SimulationState& state, const NeighborList& nl, const ParamTable& params);

enum class PackMode { J, I };

/// One lane batch. Mode J: i fixed across lanes, lanes are i's neighbors.
/// Mode I: lanes are consecutive (i, j) pairs, possibly from several i.
/// Padding lanes carry index -1 and an inactive mask bit.
template <class T, int W>
struct PackedNeighbors {
  int first = 0;  // position of lane 0 in the PackedPairs arrays
  simd::LaneVector<simd::index_t, W> i, j;
  simd::LaneVector<T, W> dx, dy, dz, r;
  simd::LaneMask<W> valid;
};

/// Lane ranges [first, first + active) over the PackedPairs entries of atoms
/// [i_begin, i_end). Shared by pack_neighbors and the vector kernels.
template <class Fn>
void for_each_batch(std::span<const int> offsets, int i_begin, int i_end, PackMode mode, int width, Fn&& fn) {
  if (mode == PackMode::J) {
    for (int i = i_begin; i < i_end; ++i) {
      const int end = offsets[static_cast<std::size_t>(i) + 1];
      for (int s = offsets[static_cast<std::size_t>(i)]; s < end; s += width) fn(s, std::min(width, end - s));
    }
  } else {
    const int end = offsets[static_cast<std::size_t>(i_end)];
    for (int s = offsets[static_cast<std::size_t>(i_begin)]; s < end; s += width) fn(s, std::min(width, end - s));
  }
}

template <class T, int W>
std::vector<PackedNeighbors<T, W>> pack_neighbors(const PackedPairs<T>& pairs, int i_begin, int i_end,
                                                  PackMode mode) {
  std::vector<PackedNeighbors<T, W>> batches;
  for_each_batch(pairs.offsets, i_begin, i_end, mode, W, [&](int first, int active) {
    PackedNeighbors<T, W> b;
    b.first = first;
    b.valid = simd::LaneMask<W>::first(active);
    for (int l = 0; l < W; ++l) {
      const bool on = l < active;
      const auto p = static_cast<std::size_t>(first + l);
      b.i[l] = on ? pairs.owner[p] : -1;
      b.j[l] = on ? pairs.index[p] : -1;
      b.dx[l] = on ? pairs.geometry[p][0] : T(0);
      b.dy[l] = on ? pairs.geometry[p][1] : T(0);
      b.dz[l] = on ? pairs.geometry[p][2] : T(0);
      b.r[l] = on ? pairs.geometry[p][3] : T(0);
    }
    batches.push_back(b);
  });
  return batches;
}

/// Convenience overload building the PackedPairs first.
template <class T, int W>
std::vector<PackedNeighbors<T, W>> pack_neighbors(const SimulationState& state, const NeighborList& nl,
                                                  int i_begin, int i_end, const ParamTable& params, PackMode mode) {
  return pack_neighbors<T, W>(pack_pairs<T>(state, nl, params), i_begin, i_end, mode);
}

/// Active lanes / total lanes over all batches of the given mode and width.
double lane_utilization(std::span<const int> offsets, PackMode mode, int width);

}  // namespace tersoff
