#include "tersoff/neighbor.hpp"

#include <cmath>
#include <string>

namespace tersoff {

namespace {

// Cap on grid size relative to the atom count; a stray far-away atom in an
// open box should not allocate millions of empty cells.
std::size_t cell_budget(int atoms) { return 64 * static_cast<std::size_t>(atoms) + 64; }

}  // namespace

std::vector<int> CellList::stencil(int cell) const {
  const int cx = cell % dims[0];
  const int cy = (cell / dims[0]) % dims[1];
  const int cz = cell / (dims[0] * dims[1]);
  std::vector<int> out;
  out.reserve(27);
  for (int oz = -1; oz <= 1; ++oz) {
    for (int oy = -1; oy <= 1; ++oy) {
      for (int ox = -1; ox <= 1; ++ox) {
        std::array<int, 3> c{cx + ox, cy + oy, cz + oz};
        bool inside = true;
        for (int a = 0; a < 3; ++a) {
          if (c[a] < 0 || c[a] >= dims[a]) {
            if (!periodic[a]) {
              inside = false;
              break;
            }
            c[a] = (c[a] + dims[a]) % dims[a];
          }
        }
        if (inside) out.push_back(cell_index(c[0], c[1], c[2]));
      }
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

CellList build_cell_list(const SimulationState& state, double cell_size) {
  if (!(cell_size > 0.0)) throw ConfigError("cell size must be positive");
  const int n = state.size();
  const auto& box = state.box;

  CellList cl;
  cl.periodic = box.periodic;
  Eigen::Vector3d lo = Eigen::Vector3d::Zero();
  Eigen::Vector3d extent = Eigen::Vector3d::Zero();
  if (n > 0) {
    lo = state.positions.rowwise().minCoeff();
    extent = state.positions.rowwise().maxCoeff() - lo;
  }
  for (int a = 0; a < 3; ++a) {
    if (box.periodic[a]) {
      const double L = box.lengths[a];
      if (L < cell_size) {
        throw ConfigError("periodic box edge " + std::to_string(L) + " A is shorter than the cell size " +
                          std::to_string(cell_size) + " A");
      }
      cl.origin[a] = 0.0;
      cl.dims[a] = std::max(1, static_cast<int>(std::floor(L / cell_size)));
      cl.cell_edge[a] = L / cl.dims[a];
    } else {
      cl.origin[a] = lo[a];
      cl.dims[a] = std::max(1, static_cast<int>(std::floor(extent[a] / cell_size)));
      cl.cell_edge[a] = std::max(cell_size, extent[a] / cl.dims[a]);
    }
  }
  while (static_cast<std::size_t>(cl.cell_count()) > cell_budget(n)) {
    // Coarsen the finest open axis; periodic axes must keep dividing L evenly.
    int a = -1;
    for (int b = 0; b < 3; ++b) {
      if (cl.dims[b] > 1 && (a < 0 || cl.dims[b] > cl.dims[a])) a = b;
    }
    if (a < 0) break;
    cl.dims[a] = (cl.dims[a] + 1) / 2;
    const double span = box.periodic[a] ? box.lengths[a] : extent[a];
    cl.cell_edge[a] = std::max(cell_size, span / cl.dims[a]);
  }

  cl.cell_of.resize(static_cast<std::size_t>(n));
  std::vector<int> counts(static_cast<std::size_t>(cl.cell_count()) + 1, 0);
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d x = box.wrap(state.positions.col(i));
    std::array<int, 3> c{};
    for (int a = 0; a < 3; ++a) {
      c[a] = static_cast<int>(std::floor((x[a] - cl.origin[a]) / cl.cell_edge[a]));
      c[a] = std::clamp(c[a], 0, cl.dims[a] - 1);
    }
    const int cell = cl.cell_index(c[0], c[1], c[2]);
    cl.cell_of[static_cast<std::size_t>(i)] = cell;
    ++counts[static_cast<std::size_t>(cell) + 1];
  }
  for (std::size_t c = 1; c < counts.size(); ++c) counts[c] += counts[c - 1];
  cl.cell_start = counts;
  cl.atoms.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    auto& slot = counts[static_cast<std::size_t>(cl.cell_of[static_cast<std::size_t>(i)])];
    cl.atoms[static_cast<std::size_t>(slot++)] = i;
  }
  return cl;
}

NeighborList build_neighbor_list(const SimulationState& state, double cutoff, double skin) {
  if (!(skin >= 0.0)) throw ConfigError("skin must be non-negative");
  if (!(cutoff > 0.0)) throw ConfigError("cutoff must be positive");
  const double rb = cutoff + skin;
  for (int a = 0; a < 3; ++a) {
    if (state.box.periodic[a] && state.box.lengths[a] < 2.0 * rb) {
      throw ConfigError("periodic box edge " + std::to_string(state.box.lengths[a]) +
                        " A is shorter than twice the list cutoff " + std::to_string(rb) + " A");
    }
  }

  const CellList cl = build_cell_list(state, rb);
  const int n = state.size();
  const double rb2 = rb * rb;

  NeighborList nl;
  nl.cutoff = cutoff;
  nl.skin = skin;
  nl.build_cutoff = rb;
  nl.reference_positions = state.positions;
  nl.offsets.assign(static_cast<std::size_t>(n) + 1, 0);

  std::vector<std::vector<int>> stencils(static_cast<std::size_t>(cl.cell_count()));
  std::vector<int> row;
  for (int i = 0; i < n; ++i) {
    const int ci = cl.cell_of[static_cast<std::size_t>(i)];
    auto& st = stencils[static_cast<std::size_t>(ci)];
    if (st.empty()) st = cl.stencil(ci);
    row.clear();
    const Eigen::Vector3d xi = state.positions.col(i);
    for (int c : st) {
      for (int j : cl.atoms_in(c)) {
        if (j == i) continue;
        const Eigen::Vector3d d = state.box.minimum_image(state.positions.col(j) - xi);
        if (d.squaredNorm() < rb2) row.push_back(j);
      }
    }
    std::sort(row.begin(), row.end());
    nl.neighbors.insert(nl.neighbors.end(), row.begin(), row.end());
    nl.offsets[static_cast<std::size_t>(i) + 1] = static_cast<int>(nl.neighbors.size());
  }
  return nl;
}

bool needs_rebuild(const SimulationState& state, const NeighborList& nl) {
  if (nl.reference_positions.cols() != state.positions.cols()) return true;
  const double limit = 0.5 * nl.skin;
  for (int i = 0; i < state.size(); ++i) {
    const double d = state.box.minimum_image(state.positions.col(i) - nl.reference_positions.col(i)).norm();
    if (nl.skin == 0.0 ? d > 0.0 : d >= limit) return true;
  }
  return false;
}

template <class T>
PackedPairs<T> pack_pairs(const SimulationState& state, const NeighborList& nl, const ParamTable& params) {
  const int n = state.size();
  PackedPairs<T> out;
  out.offsets.assign(static_cast<std::size_t>(n) + 1, 0);
  out.owner.reserve(nl.neighbors.size());
  out.index.reserve(nl.neighbors.size());
  out.geometry.reserve(nl.neighbors.size());
  for (int i = 0; i < n; ++i) {
    const int si = state.species[static_cast<std::size_t>(i)];
    const Eigen::Vector3d xi = state.positions.col(i);
    for (int j : nl.of(i)) {
      const int sj = state.species[static_cast<std::size_t>(j)];
      const Eigen::Vector3d d = state.box.minimum_image(state.positions.col(j) - xi);
      const double r = d.norm();
      if (!(r < params.pair_cutoff(si, sj))) continue;
      out.owner.push_back(i);
      out.index.push_back(j);
      out.geometry.push_back({static_cast<T>(d.x()), static_cast<T>(d.y()), static_cast<T>(d.z()), static_cast<T>(r)});
    }
    out.offsets[static_cast<std::size_t>(i) + 1] = static_cast<int>(out.index.size());
  }
  return out;
}

template PackedPairs<float> pack_pairs<float>(const SimulationState&, const NeighborList&, const ParamTable&);
template PackedPairs<double> pack_pairs<double>(const SimulationState&, const NeighborList&, const ParamTable&);

double lane_utilization(std::span<const int> offsets, PackMode mode, int width) {
  if (offsets.size() < 2) return 0.0;
  std::size_t active = 0;
  std::size_t lanes = 0;
  for_each_batch(offsets, 0, static_cast<int>(offsets.size()) - 1, mode, width, [&](int, int used) {
    active += static_cast<std::size_t>(used);
    lanes += static_cast<std::size_t>(width);
  });
  return lanes == 0 ? 0.0 : static_cast<double>(active) / static_cast<double>(lanes);
}

}  // namespace tersoff
