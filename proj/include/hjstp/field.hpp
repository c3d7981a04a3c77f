#pragma once
//
// field.hpp — implicit-surface scalar fields on a Grid, time-indexed field
// sequences, multilinear interpolation, and gradient sampling. Membership
// convention everywhere: x is inside the set iff the interpolated value <= 0.
//

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "hjstp/common.hpp"
#include "hjstp/grid.hpp"

namespace hjstp {

struct ScalarField {
  Grid grid;
  std::vector<double> values;  // row-major over grid nodes
  double time = 0.0;           // snapshot timestamp (simulation seconds)

  double& operator[](std::int64_t i) { return values[i]; }
  double operator[](std::int64_t i) const { return values[i]; }
};

inline ScalarField make_field(const Grid& grid, double fill = 0.0, double time = 0.0) {
  ScalarField f;
  f.grid = grid;
  f.values.assign(static_cast<size_t>(grid.size()), fill);
  f.time = time;
  return f;
}

// --------------------------------------------------------------------------
// Cell location shared by interpolation and gradient sampling.
// --------------------------------------------------------------------------
namespace detail {

struct CellLoc {
  std::array<int, kMaxDim> i0{};   // lower corner index per dim
  std::array<int, kMaxDim> i1{};   // upper corner index per dim (wrapped)
  std::array<double, kMaxDim> w{};  // fractional weight toward i1
};

// Locates the interpolation cell for point x. Non-periodic coordinates must
// lie within bounds (small epsilon slack); periodic coordinates wrap. When
// `clamp` is set, out-of-bounds coordinates are clamped instead of failing.
inline CellLoc locate(const Grid& g, const double* x, bool clamp) {
  CellLoc c;
  for (int k = 0; k < g.ndim; ++k) {
    const int n = g.counts[k];
    double u = (x[k] - g.mins[k]) / g.spacing[k];
    if (g.periodic[k]) {
      u = std::fmod(u, static_cast<double>(n));
      if (u < 0.0) u += n;
      int i0 = static_cast<int>(u);
      if (i0 >= n) i0 = 0;  // fp edge case: u == n after fmod rounding
      c.i0[k] = i0;
      c.i1[k] = (i0 + 1) % n;
      c.w[k] = u - i0;
    } else {
      const double slack = 1e-9 * (n - 1);
      if (u < -slack || u > (n - 1) + slack) {
        if (!clamp)
          fail(errc::out_of_bounds, "coordinate " + std::to_string(x[k]) +
                                        " outside dimension " + std::to_string(k));
        u = std::clamp(u, 0.0, static_cast<double>(n - 1));
      }
      u = std::clamp(u, 0.0, static_cast<double>(n - 1));
      int i0 = std::min(static_cast<int>(u), n - 2);
      c.i0[k] = i0;
      c.i1[k] = i0 + 1;
      c.w[k] = u - i0;
    }
  }
  return c;
}

// Central-difference derivative along dim k at a node, with linear
// extrapolation ghosts at non-periodic edges (reduces to one-sided there).
inline double node_deriv(const ScalarField& f, std::array<int, kMaxDim> idx, int k) {
  const Grid& g = f.grid;
  const int n = g.counts[k];
  const int i = idx[k];
  auto value_at = [&](int j) {
    std::array<int, kMaxDim> q = idx;
    q[k] = g.wrap(k, j);
    return f.values[static_cast<size_t>(g.flatten(q))];
  };
  if (g.periodic[k]) return (value_at(i + 1) - value_at(i - 1)) / (2.0 * g.spacing[k]);
  if (i == 0) return (value_at(1) - value_at(0)) / g.spacing[k];
  if (i == n - 1) return (value_at(n - 1) - value_at(n - 2)) / g.spacing[k];
  return (value_at(i + 1) - value_at(i - 1)) / (2.0 * g.spacing[k]);
}

template <typename Corner>
inline double blend_corners(const Grid& g, const CellLoc& c, Corner&& corner_value) {
  const int ndim = g.ndim;
  double acc = 0.0;
  const int ncorners = 1 << ndim;
  for (int m = 0; m < ncorners; ++m) {
    double w = 1.0;
    std::array<int, kMaxDim> idx{};
    for (int k = 0; k < ndim; ++k) {
      const bool hi = (m >> k) & 1;
      idx[k] = hi ? c.i1[k] : c.i0[k];
      w *= hi ? c.w[k] : (1.0 - c.w[k]);
    }
    if (w != 0.0) acc += w * corner_value(idx);
  }
  return acc;
}

}  // namespace detail

// Multilinear interpolation. Throws OutOfBounds for non-periodic coordinates
// outside the grid.
inline double interpolate(const ScalarField& f, const double* x) {
  const auto c = detail::locate(f.grid, x, /*clamp=*/false);
  return detail::blend_corners(f.grid, c, [&](const std::array<int, kMaxDim>& idx) {
    return f.values[static_cast<size_t>(f.grid.flatten(idx))];
  });
}

inline double interpolate(const ScalarField& f, const std::vector<double>& x) {
  require(static_cast<int>(x.size()) == f.grid.ndim, errc::bad_dims,
          "interpolation point dimension mismatch");
  return interpolate(f, x.data());
}

// Clamping variant: non-periodic coordinates outside the grid are clamped to
// the boundary (constant extension). Used where callers guarantee the query
// is only meaningful inside but may drift marginally out.
inline double interpolate_ext(const ScalarField& f, const double* x) {
  const auto c = detail::locate(f.grid, x, /*clamp=*/true);
  return detail::blend_corners(f.grid, c, [&](const std::array<int, kMaxDim>& idx) {
    return f.values[static_cast<size_t>(f.grid.flatten(idx))];
  });
}

// Gradient: central differences at nodes, then multilinear interpolation of
// each component.
inline std::vector<double> gradient_at(const ScalarField& f, const double* x) {
  const auto c = detail::locate(f.grid, x, /*clamp=*/false);
  std::vector<double> grad(f.grid.ndim);
  for (int k = 0; k < f.grid.ndim; ++k) {
    grad[k] = detail::blend_corners(f.grid, c, [&](const std::array<int, kMaxDim>& idx) {
      return detail::node_deriv(f, idx, k);
    });
  }
  return grad;
}

inline std::vector<double> gradient_at(const ScalarField& f, const std::vector<double>& x) {
  require(static_cast<int>(x.size()) == f.grid.ndim, errc::bad_dims,
          "gradient point dimension mismatch");
  return gradient_at(f, x.data());
}

// --------------------------------------------------------------------------
// Implicit-surface constructors and set algebra.
// --------------------------------------------------------------------------

// Signed distance to a ball in the subspace spanned by `dims`; remaining
// dimensions are free. center[j] pairs with dims[j].
inline ScalarField sdf_ball(const Grid& grid, const std::vector<double>& center, double radius,
                            const std::vector<int>& dims) {
  require(!dims.empty() && dims.size() == center.size(), errc::bad_dims,
          "sdf_ball: dims and center must pair up");
  for (int d : dims)
    require(d >= 0 && d < grid.ndim, errc::bad_dims, "sdf_ball: dim out of range");
  require(radius > 0.0, errc::bad_argument, "sdf_ball: radius must be positive");

  ScalarField f = make_field(grid);
  const std::int64_t n = grid.size();
  for (std::int64_t flat = 0; flat < n; ++flat) {
    const auto idx = grid.unflatten(flat);
    double acc = 0.0;
    for (size_t j = 0; j < dims.size(); ++j)
      acc += sqr(grid.coord(dims[j], idx[dims[j]]) - center[j]);
    f.values[static_cast<size_t>(flat)] = std::sqrt(acc) - radius;
  }
  return f;
}

inline void check_same_grid(const ScalarField& a, const ScalarField& b, const char* op) {
  require(a.grid.same_shape(b.grid), errc::grid_mismatch,
          std::string(op) + ": operands live on different grids");
}

inline ScalarField set_union(const ScalarField& a, const ScalarField& b) {
  check_same_grid(a, b, "set_union");
  ScalarField out = a;
  for (size_t i = 0; i < out.values.size(); ++i) out.values[i] = std::min(a.values[i], b.values[i]);
  return out;
}

inline ScalarField set_intersect(const ScalarField& a, const ScalarField& b) {
  check_same_grid(a, b, "set_intersect");
  ScalarField out = a;
  for (size_t i = 0; i < out.values.size(); ++i) out.values[i] = std::max(a.values[i], b.values[i]);
  return out;
}

inline ScalarField set_complement(const ScalarField& a) {
  ScalarField out = a;
  for (double& v : out.values) v = -v;
  return out;
}

// Existential projection: keep `keep_dims` (strictly ascending), take the min
// over all dropped-dimension nodes.
inline ScalarField project_min(const ScalarField& f, const std::vector<int>& keep_dims) {
  const Grid& g = f.grid;
  require(!keep_dims.empty() && static_cast<int>(keep_dims.size()) < g.ndim, errc::bad_dims,
          "project_min: keep_dims must be a nonempty proper subset");
  for (size_t j = 0; j < keep_dims.size(); ++j) {
    require(keep_dims[j] >= 0 && keep_dims[j] < g.ndim, errc::bad_dims,
            "project_min: dim out of range");
    if (j > 0)
      require(keep_dims[j] > keep_dims[j - 1], errc::bad_dims,
              "project_min: keep_dims must be strictly ascending");
  }

  std::vector<double> mins, maxs;
  std::vector<int> counts;
  std::vector<bool> periodic;
  for (int d : keep_dims) {
    // Reconstruct the authored extent (make_grid re-derives spacing).
    mins.push_back(g.mins[d]);
    maxs.push_back(g.maxs[d]);
    counts.push_back(g.counts[d]);
    periodic.push_back(g.periodic[d]);
  }
  ScalarField out = make_field(make_grid(mins, maxs, counts, periodic), kFar, f.time);

  const std::int64_t n = g.size();
  for (std::int64_t flat = 0; flat < n; ++flat) {
    const auto idx = g.unflatten(flat);
    std::array<int, kMaxDim> pidx{};
    for (size_t j = 0; j < keep_dims.size(); ++j) pidx[j] = idx[keep_dims[j]];
    double& slot = out.values[static_cast<size_t>(out.grid.flatten(pidx))];
    slot = std::min(slot, f.values[static_cast<size_t>(flat)]);
  }
  return out;
}

// --------------------------------------------------------------------------
// Time-indexed sequence of fields (value functions V(t, .)).
// --------------------------------------------------------------------------

enum class TimeDirection { backward, forward };

struct TimeField {
  TimeDirection direction = TimeDirection::backward;
  std::vector<ScalarField> snaps;  // strictly ascending snapshot times

  bool empty() const { return snaps.empty(); }
  const Grid& grid() const { return snaps.front().grid; }
  double first_time() const { return snaps.front().time; }
  double last_time() const { return snaps.back().time; }

  void append(ScalarField f) {
    if (!snaps.empty()) {
      require(f.grid.same_shape(snaps.front().grid), errc::grid_mismatch,
              "TimeField: snapshots must share one grid");
      require(f.time > snaps.back().time, errc::unordered_times,
              "TimeField: snapshot times must be strictly ascending");
    }
    snaps.push_back(std::move(f));
  }

  // Hold rule: the snapshot with the largest time <= t; clamped to the first
  // snapshot for earlier queries and to the last for later ones.
  int sample_index(double t) const {
    require(!snaps.empty(), errc::empty_schedule, "TimeField: no snapshots");
    int lo = 0, hi = static_cast<int>(snaps.size()) - 1;
    if (t <= snaps[0].time) return 0;
    if (t >= snaps[hi].time) return hi;
    while (hi - lo > 1) {
      const int mid = (lo + hi) / 2;
      (snaps[mid].time <= t ? lo : hi) = mid;
    }
    return lo;
  }

  const ScalarField& sample(double t) const { return snaps[sample_index(t)]; }
};

}  // namespace hjstp
