#pragma once
//
// sl_oracle.hpp — independent discrete-game oracle for backward reach solves.
// Dynamic programming on the grid: the value at a node is the optimal
// multilinear lookup of the next value field at the node displaced along
// hand-rolled vehicle dynamics. The own control optimizes outermost over an
// explicit candidate list; the other players (other vehicle, wind) optimize
// jointly inside. The freeze/exclusion clamps mirror the solver's splitting.
// First order in dt and in input-set resolution, so agreement with the PDE
// solver is asserted within a band of grid cells, never exactly.
//

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "hjstp/dynamics.hpp"
#include "hjstp/field.hpp"
#include "hjstp/grid.hpp"
#include "hjstp/solver.hpp"

namespace sl_oracle {

using hjstp::DynKind;
using hjstp::OptDir;
using hjstp::ScalarField;

struct OuterCand {
  double v = 0.0, w = 0.0;              // unicycle own control
  std::array<double, 2> vel{0.0, 0.0};  // single-integrator velocity
};

// One joint candidate for the inner players: the other vehicle's control plus
// the wind. Relative-model winds are merged into one disk — both share an
// optimization direction and enter the dynamics additively.
struct InnerCand {
  double v_other = 0.0, w_other = 0.0;
  std::array<double, 2> wind{0.0, 0.0};
};

inline std::vector<std::array<double, 2>> disk_points(double r, int angles) {
  std::vector<std::array<double, 2>> pts{{0.0, 0.0}};
  if (r > 0.0)
    for (int i = 0; i < angles; ++i) {
      const double a = 2.0 * hjstp::kPi * i / angles;
      pts.push_back({r * std::cos(a), r * std::sin(a)});
    }
  return pts;
}

struct Candidates {
  std::vector<OuterCand> outer;
  std::vector<InnerCand> inner;
  OptDir outer_dir = OptDir::minimize;
  OptDir inner_dir = OptDir::maximize;
};

inline Candidates make_candidates(const hjstp::DynSpec& s, int disk_angles = 8,
                                  int control_angles = 16) {
  Candidates c;
  c.outer_dir = s.role.control;
  switch (s.kind) {
    case DynKind::single_integrator: {
      for (const auto& p : disk_points(s.si.v_max, control_angles))
        c.outer.push_back({0.0, 0.0, p});
      for (const auto& p : disk_points(s.si.d_r, disk_angles)) c.inner.push_back({0.0, 0.0, p});
      c.inner_dir = s.role.disturbance;
      break;
    }
    case DynKind::dubins_absolute: {
      for (double v : {s.own.v_min, s.own.v_max})
        for (double w : {-s.own.w_max, 0.0, s.own.w_max}) c.outer.push_back({v, w, {0.0, 0.0}});
      for (const auto& p : disk_points(s.own.d_r, disk_angles)) c.inner.push_back({0.0, 0.0, p});
      c.inner_dir = s.role.disturbance;
      break;
    }
    case DynKind::dubins_relative: {
      for (double v : {s.own.v_min, s.own.v_max})
        for (double w : {-s.own.w_max, 0.0, s.own.w_max}) c.outer.push_back({v, w, {0.0, 0.0}});
      for (double v : {s.other.v_min, s.other.v_max})
        for (double w : {-s.other.w_max, 0.0, s.other.w_max})
          for (const auto& p : disk_points(s.own.d_r + s.other.d_r, disk_angles))
            c.inner.push_back({v, w, p});
      c.inner_dir = s.role.second_player;
      break;
    }
  }
  return c;
}

// Hand-rolled state displacement over one step (independent of the library's
// flow function on purpose).
inline void displace(const hjstp::DynSpec& s, const double* x, const OuterCand& oc,
                     const InnerCand& ic, double dt, double* out) {
  switch (s.kind) {
    case DynKind::single_integrator:
      out[0] = x[0] + dt * (oc.vel[0] + ic.wind[0]);
      out[1] = x[1] + dt * (oc.vel[1] + ic.wind[1]);
      break;
    case DynKind::dubins_absolute:
      out[0] = x[0] + dt * (oc.v * std::cos(x[2]) + ic.wind[0]);
      out[1] = x[1] + dt * (oc.v * std::sin(x[2]) + ic.wind[1]);
      out[2] = x[2] + dt * oc.w;
      break;
    case DynKind::dubins_relative:
      out[0] = x[0] + dt * (ic.v_other * std::cos(x[2]) - oc.v + oc.w * x[1] + ic.wind[0]);
      out[1] = x[1] + dt * (ic.v_other * std::sin(x[2]) - oc.w * x[0] + ic.wind[1]);
      out[2] = x[2] + dt * (ic.w_other - oc.w);
      break;
  }
}

// Backward dynamic-programming solve over the same problem description the
// PDE solver takes; returns the value field at anchor_time - horizon. Uses
// the solver's own CFL accounting so both march the same number of steps.
inline ScalarField sl_backward_final(const hjstp::ReachProblem& p, int disk_angles = 8,
                                     int control_angles = 16) {
  const hjstp::Grid& g = p.grid;
  const auto alpha = hjstp::dissipation_bounds(p.dynspec, g);
  const double dt_limit = hjstp::detail::cfl_dt_limit(g, alpha);
  const int nsteps =
      std::max(1, static_cast<int>(std::ceil(p.horizon / (p.cfl_factor * dt_limit) - 1e-12)));
  const double dt = p.horizon / nsteps;

  const Candidates cand = make_candidates(p.dynspec, disk_angles, control_angles);
  const bool outer_min = cand.outer_dir == OptDir::minimize;
  const bool inner_min = cand.inner_dir == OptDir::minimize;

  ScalarField v = p.target;
  if (p.obstacles && !p.obstacles->empty()) {
    const ScalarField& gob = p.obstacles->sample(p.anchor_time);
    for (size_t i = 0; i < v.values.size(); ++i) v.values[i] = std::max(v.values[i], -gob.values[i]);
  }
  ScalarField next = v;

  const std::int64_t n = g.size();
  for (int step = 1; step <= nsteps; ++step) {
    const double t_new = p.anchor_time - p.horizon * step / nsteps;
    std::array<int, hjstp::kMaxDim> idx{};
    double x[hjstp::kMaxDim] = {0, 0, 0, 0}, y[hjstp::kMaxDim];
    for (std::int64_t flat = 0; flat < n; ++flat) {
      if (flat > 0) {
        int k = g.ndim - 1;
        while (true) {
          if (++idx[k] < g.counts[k]) break;
          idx[k] = 0;
          --k;
        }
      }
      for (int k = 0; k < g.ndim; ++k) x[k] = g.coord(k, idx[k]);

      double best_outer = outer_min ? hjstp::kFar : -hjstp::kFar;
      for (const OuterCand& oc : cand.outer) {
        double best_inner = inner_min ? hjstp::kFar : -hjstp::kFar;
        for (const InnerCand& ic : cand.inner) {
          displace(p.dynspec, x, oc, ic, dt, y);
          const double val = hjstp::interpolate_ext(v, y);
          best_inner = inner_min ? std::min(best_inner, val) : std::max(best_inner, val);
        }
        best_outer = outer_min ? std::min(best_outer, best_inner) : std::max(best_outer, best_inner);
      }
      next.values[static_cast<size_t>(flat)] = best_outer;
    }
    if (p.mode == hjstp::ReachMode::reach_exists)
      for (size_t i = 0; i < next.values.size(); ++i)
        next.values[i] = std::min(next.values[i], p.target.values[i]);
    if (p.obstacles && !p.obstacles->empty()) {
      const ScalarField& gob = p.obstacles->sample(t_new);
      for (size_t i = 0; i < next.values.size(); ++i)
        next.values[i] = std::max(next.values[i], -gob.values[i]);
    }
    std::swap(v.values, next.values);
  }
  v.time = p.anchor_time - p.horizon;
  return v;
}

// Sub-zero sets of two fields agree within `cells` grid cells: wherever one
// field is nonpositive (at a node at least `margin` nodes from every
// non-periodic face), the other is nonpositive somewhere in the index
// neighborhood of half-width `cells`. Returns the number of offending nodes.
inline int zero_set_mismatches(const ScalarField& a, const ScalarField& b, int cells = 2,
                               int margin = 2) {
  const hjstp::Grid& g = a.grid;
  const std::int64_t n = g.size();
  int bad = 0;
  auto neighborhood_min = [&](const ScalarField& f, const std::array<int, hjstp::kMaxDim>& c) {
    double m = hjstp::kFar;
    std::array<int, hjstp::kMaxDim> off{};
    for (int k = 0; k < g.ndim; ++k) off[k] = -cells;
    while (true) {
      std::array<int, hjstp::kMaxDim> j = c;
      bool ok = true;
      for (int k = 0; k < g.ndim; ++k) {
        j[k] += off[k];
        if (g.periodic[k])
          j[k] = (j[k] % g.counts[k] + g.counts[k]) % g.counts[k];
        else if (j[k] < 0 || j[k] >= g.counts[k])
          ok = false;
      }
      if (ok) m = std::min(m, f.values[static_cast<size_t>(g.flatten(j))]);
      int k = g.ndim - 1;
      while (k >= 0 && ++off[k] > cells) off[k--] = -cells;
      if (k < 0) break;
    }
    return m;
  };
  for (std::int64_t flat = 0; flat < n; ++flat) {
    const auto idx = g.unflatten(flat);
    bool interior = true;
    for (int k = 0; k < g.ndim; ++k)
      if (!g.periodic[k] && (idx[k] < margin || idx[k] >= g.counts[k] - margin)) interior = false;
    if (!interior) continue;
    const double va = a.values[static_cast<size_t>(flat)];
    const double vb = b.values[static_cast<size_t>(flat)];
    if (va <= 0.0 && neighborhood_min(b, idx) > 0.0) ++bad;
    if (vb <= 0.0 && neighborhood_min(a, idx) > 0.0) ++bad;
  }
  return bad;
}

}  // namespace sl_oracle
