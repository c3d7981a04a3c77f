#pragma once
//
// grid.hpp — N-dimensional rectangular lattice with per-dimension bounds,
// spacing, and periodicity. Periodic dimensions store no duplicate endpoint
// node: spacing = (max - min) / counts and the node after the last wraps to
// the first.
//

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hjstp/common.hpp"

namespace hjstp {

struct Grid {
  int ndim = 0;
  std::array<double, kMaxDim> mins{};
  std::array<double, kMaxDim> maxs{};
  std::array<double, kMaxDim> spacing{};
  std::array<int, kMaxDim> counts{};
  std::array<bool, kMaxDim> periodic{};
  // Row-major strides: last dimension is contiguous.
  std::array<std::int64_t, kMaxDim> stride{};

  std::int64_t size() const {
    std::int64_t n = 1;
    for (int k = 0; k < ndim; ++k) n *= counts[k];
    return n;
  }

  double coord(int dim, int i) const { return mins[dim] + spacing[dim] * i; }

  // Index arithmetic along one dimension honoring periodic wrap; non-periodic
  // neighbors are clamped by the caller (ghost-node policy lives with the
  // stencil, not the grid).
  int wrap(int dim, int i) const {
    const int n = counts[dim];
    if (periodic[dim]) {
      i %= n;
      if (i < 0) i += n;
    }
    return i;
  }

  std::int64_t flatten(const std::array<int, kMaxDim>& idx) const {
    std::int64_t f = 0;
    for (int k = 0; k < ndim; ++k) f += stride[k] * idx[k];
    return f;
  }

  std::array<int, kMaxDim> unflatten(std::int64_t flat) const {
    std::array<int, kMaxDim> idx{};
    for (int k = 0; k < ndim; ++k) {
      idx[k] = static_cast<int>(flat / stride[k]);
      flat %= stride[k];
    }
    return idx;
  }

  bool same_shape(const Grid& o) const {
    if (ndim != o.ndim) return false;
    for (int k = 0; k < ndim; ++k) {
      if (counts[k] != o.counts[k] || periodic[k] != o.periodic[k]) return false;
      if (std::abs(mins[k] - o.mins[k]) > 1e-9 || std::abs(maxs[k] - o.maxs[k]) > 1e-9)
        return false;
    }
    return true;
  }
};

inline Grid make_grid(const std::vector<double>& mins, const std::vector<double>& maxs,
                      const std::vector<int>& counts, const std::vector<bool>& periodic) {
  const int ndim = static_cast<int>(mins.size());
  require(ndim >= 1 && ndim <= kMaxDim, errc::bad_dims,
          "grid must have between 1 and " + std::to_string(kMaxDim) + " dimensions");
  require(maxs.size() == static_cast<size_t>(ndim) && counts.size() == static_cast<size_t>(ndim) &&
              periodic.size() == static_cast<size_t>(ndim),
          errc::bad_dims, "mins/maxs/counts/periodic must have equal lengths");

  Grid g;
  g.ndim = ndim;
  for (int k = 0; k < ndim; ++k) {
    require(maxs[k] > mins[k], errc::nonmonotone_bounds,
            "dimension " + std::to_string(k) + ": max must exceed min");
    require(counts[k] >= 3, errc::too_few_nodes,
            "dimension " + std::to_string(k) + ": at least 3 nodes required");
    g.mins[k] = mins[k];
    g.maxs[k] = maxs[k];
    g.counts[k] = counts[k];
    g.periodic[k] = periodic[k];
    g.spacing[k] = periodic[k] ? (maxs[k] - mins[k]) / counts[k]
                               : (maxs[k] - mins[k]) / (counts[k] - 1);
  }
  g.stride[ndim - 1] = 1;
  for (int k = ndim - 2; k >= 0; --k) g.stride[k] = g.stride[k + 1] * g.counts[k + 1];
  return g;
}

}  // namespace hjstp
